"""Command-line front end.

Every run writes its outputs plus ``manifest.json`` into the output directory
(``--out``, else ``$POISSONBC_OUTPUT_DIR``, else ``./poissonbc-out``).
``poissonbc replay <manifest>`` reruns a manifest and reproduces its files.

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

from poissonbc import __version__
from poissonbc.capacity import (
    BC_RESOLUTION,
    DEFAULT_ANGLES,
    DEFAULT_STARTS,
    DMS_RESOLUTION,
    OrderingWarning,
    bc_region,
    dms_region,
    pp_capacity,
    wiretap_capacity,
)
from poissonbc.channel import ChannelParams, classify_ordering
from poissonbc.codingsim import SETTINGS, make_thresholds, model_targets, run_experiment
from poissonbc.inference import verify_csiszar_identity, verify_lln, verify_mc_inequality
from poissonbc.process import BlockInputModel

ENV_OUT = "POISSONBC_OUTPUT_DIR"
DEFAULT_OUT = "poissonbc-out"
EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3
NATS_PER_BIT = math.log(2.0)
CODESIM_COLUMNS = (
    "setting", "n", "tau", "R_y", "R_z", "gamma_y", "gamma_z", "trials",
    "pe_y", "pe_z", "pe_total", "ci_lo", "ci_hi", "seed",
)
# flags that never change results and stay out of the manifest
_PRESENTATION_ONLY = {"threads", "out", "format", "config", "func"}


class ConfigError(ValueError):
    pass


def _fmt(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return buf.getvalue()


def _write_json(path: Path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    path.write_text(text)
    return text


def _params(cfg) -> ChannelParams:
    try:
        return ChannelParams(cfg["ay"], cfg["ly"], cfg["az"], cfg["lz"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _model(cfg, n=None) -> BlockInputModel:
    alpha = [float(a) for a in cfg["alpha"]]
    p = [float(b) for b in cfg["p"]]
    if len(alpha) == len(p) - 1:
        alpha.append(1.0 - math.fsum(alpha))
    try:
        return BlockInputModel(float(cfg["tau"]), int(n if n is not None else cfg["n"]), tuple(alpha), tuple(p))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _unit(cfg):
    return (1.0 / NATS_PER_BIT, "bits") if cfg.get("bits") else (1.0, "nats")


# ------------------------------------------------------------------ commands


def cmd_classify(cfg, out: Path):
    verdict = classify_ordering(_params(cfg)).as_dict()
    text = _write_json(out / "classify.json", verdict)
    return EXIT_OK, text, None


def cmd_capacity(cfg, out: Path):
    params = _params(cfg)
    scale, unit = _unit(cfg)
    kind = cfg["kind"]
    caught = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", OrderingWarning)
        if kind == "pp":
            rows = []
            for receiver in ("y", "z"):
                value, kappa = pp_capacity(params, receiver)
                rows.append((receiver, value * scale, kappa))
            csv_text = _write_csv(out / "capacity_pp.csv", ("receiver", "capacity", "kappa"), rows)
            summary = {"kind": "pp", "units": unit, "capacity_y": rows[0][1], "kappa_y": rows[0][2],
                       "capacity_z": rows[1][1], "kappa_z": rows[1][2]}
        elif kind == "wiretap":
            value, alpha = wiretap_capacity(params)
            csv_text = _write_csv(out / "capacity_wiretap.csv", ("secrecy_capacity", "alpha"), [(value * scale, alpha)])
            summary = {"kind": "wiretap", "units": unit, "secrecy_capacity": value * scale, "alpha": alpha}
        else:
            res = cfg.get("resolution") or (BC_RESOLUTION if kind == "bc" else DMS_RESOLUTION)
            fn = bc_region if kind == "bc" else dms_region
            region = fn(params, resolution=int(res), angles=int(cfg.get("angles") or DEFAULT_ANGLES),
                        starts=int(cfg.get("starts") or DEFAULT_STARTS))
            names = list(region.points[0].parameters)
            header = ["r_y", region.other] + names + ["support_angle"]
            rows = [[pt.r_y * scale, pt.r_other * scale] + [pt.parameters[k] for k in names] + [pt.support_angle]
                    for pt in region.points]
            csv_text = _write_csv(out / f"capacity_{kind}.csv", header, rows)
            r_y_max, r_o_max = region.intercepts()
            summary = {
                "kind": kind, "units": unit, "resolution": int(res), "points": len(region.points),
                "intercept_r_y": r_y_max * scale, f"intercept_{region.other}": r_o_max * scale,
                "support_angles": [float(a) for a in region.angles],
                "support_values": [float(v) * scale for v in region.support_values],
            }
    messages = sorted({str(w.message) for w in caught if issubclass(w.category, OrderingWarning)})
    summary["warnings"] = messages
    summary["params"] = params.as_dict()
    text = _write_json(out / f"capacity_{kind}.json", summary)
    return EXIT_OK, text, csv_text


def cmd_verify(cfg, out: Path):
    params = _params(cfg)
    model = _model(cfg)
    check = cfg["check"]
    trials, seed = int(cfg["trials"]), int(cfg["seed"])
    if check == "identity":
        report = verify_csiszar_identity(model, params, trials, seed)
    elif check == "mc-inequality":
        if not classify_ordering(params).more_capable_y_over_z:
            warnings.warn("receiver y is not more capable than z; the inequality need not hold", OrderingWarning)
        report = verify_mc_inequality(model, params, trials, seed)
    else:
        report = verify_lln(model, params, trials, seed, tuple(int(n) for n in cfg["ns"]))
    text = _write_json(out / f"verify_{check}.json", json.loads(report.to_json()))
    csv_text = None
    if check == "lln":
        rows = [(r["n"], r["density"], r["estimate"], r["std_error"], r["target"], r["passed"])
                for r in report.details["rows"]]
        csv_text = _write_csv(out / "verify_lln.csv", ("n", "density", "estimate", "std_error", "target", "passed"), rows)
    return (EXIT_OK if report.passed else EXIT_VERIFY), text, csv_text


def _codesim_rates(cfg, params, model, setting):
    if cfg.get("rates"):
        return tuple(float(r) for r in cfg["rates"])
    c_y, c_tilde, c_z = model_targets(params, model, setting)
    if setting == "independent":
        target_y, target_other = c_y, c_z
    else:
        # corner with the largest common rate
        target_other = c_z
        target_y = max(min(c_y + c_tilde - c_z, c_y), 0.0)
    return float(cfg["scale_y"]) * target_y, float(cfg["scale_other"]) * target_other


def cmd_codesim(cfg, out: Path):
    params = _params(cfg)
    setting = cfg["setting"]
    if setting not in SETTINGS:
        raise ConfigError(f"setting must be one of {SETTINGS}")
    scale, unit = _unit(cfg)
    other = "R_z" if setting == "independent" else "R_0"
    header = [other if c == "R_z" else c for c in CODESIM_COLUMNS]
    path = out / "codesim.csv"
    results = []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    path.write_text(buf.getvalue())
    try:
        for n in cfg["n_sweep"]:
            model = _model(cfg, n=int(n))
            rates = _codesim_rates(cfg, params, model, setting)
            th = make_thresholds(params, model, setting, rates, cfg.get("gamma_y"), cfg.get("gamma_z"))
            res = run_experiment(params, model, rates, th, int(cfg["trials"]), int(cfg["seed"]), setting,
                                 threads=int(cfg.get("threads") or 1))
            row = res.csv_row()
            for key in ("R_y", other, "gamma_y", "gamma_z"):
                row[key] = row[key] * scale
            writer.writerow([_fmt(row[c]) for c in header])
            results.append(res.as_dict())
            # flush after every sweep point so an interrupt keeps finished rows
            path.write_text(buf.getvalue())
    except KeyboardInterrupt:
        _write_json(out / "codesim.json", {"units": unit, "interrupted": True, "results": results})
        raise
    text = _write_json(out / "codesim.json", {"units": unit, "interrupted": False, "results": results})
    return EXIT_OK, text, buf.getvalue()


COMMANDS = {"classify": cmd_classify, "capacity": cmd_capacity, "verify": cmd_verify, "codesim": cmd_codesim}


# ------------------------------------------------------------------ parsing


def _add_channel(p, required=True):
    g = p.add_argument_group("channel")
    g.add_argument("--ay", type=float, required=required, help="attenuation of receiver y")
    g.add_argument("--ly", type=float, required=required, help="dark-current rate of receiver y")
    g.add_argument("--az", type=float, required=required, help="attenuation of receiver z")
    g.add_argument("--lz", type=float, required=required, help="dark-current rate of receiver z")


def _add_model(p, with_n=True):
    g = p.add_argument_group("block input model")
    g.add_argument("--tau", type=float, default=0.1, help="block length")
    if with_n:
        g.add_argument("--n", type=int, default=100, help="number of blocks")
    g.add_argument("--alpha", type=float, nargs="+", default=[0.4],
                   help="auxiliary symbol probabilities; the last may be omitted")
    g.add_argument("--p", type=float, nargs="+", default=[1.0, 0.2], help="P(X=1 | V=j) per auxiliary symbol")


def _add_common(p):
    p.add_argument("--config", help="JSON file whose keys override the flags (a manifest also works)")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="what to print on stdout")
    p.add_argument("--bits", action="store_true", help="report rates in bits instead of nats")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("--seed", type=int, default=2024, help="master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissonbc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="channel ordering verdict")
    _add_channel(p, required=False)
    _add_common(p)

    p = sub.add_parser("capacity", help="capacities and rate-region boundaries")
    p.add_argument("kind", choices=("pp", "bc", "wiretap", "dms"))
    _add_channel(p, required=False)
    p.add_argument("--resolution", type=int, help="coarse grid points per unit on each axis")
    p.add_argument("--angles", type=int, default=DEFAULT_ANGLES, help="support-weight angles in [0, pi/2]")
    p.add_argument("--starts", type=int, default=DEFAULT_STARTS, help="refinement starts per angle")
    _add_common(p)

    p = sub.add_parser("verify", help="Monte Carlo checks of filter identities and density limits")
    p.add_argument("check", choices=("identity", "mc-inequality", "lln"))
    _add_channel(p, required=False)
    _add_model(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--ns", type=int, nargs="+", default=[100, 1000, 10000], help="block counts for lln")
    _add_common(p)

    p = sub.add_parser("codesim", help="superposition-coding error-rate sweep")
    _add_channel(p, required=False)
    _add_model(p, with_n=False)
    p.add_argument("--setting", choices=SETTINGS, default="independent")
    p.add_argument("--n-sweep", dest="n_sweep", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--rates", type=float, nargs=2, metavar=("R_Y", "R_OTHER"), help="absolute rates")
    p.add_argument("--scale-y", dest="scale_y", type=float, default=0.8, help="R_y as a fraction of its target")
    p.add_argument("--scale-other", dest="scale_other", type=float, default=0.8,
                   help="cloud rate as a fraction of its target")
    p.add_argument("--gamma-y", dest="gamma_y", type=float)
    p.add_argument("--gamma-z", dest="gamma_z", type=float)
    p.add_argument("--trials", type=int, default=500)
    _add_common(p)

    p = sub.add_parser("replay", help="rerun the configuration recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=1)
    return parser


def _resolve(args) -> dict:
    cfg = {k: v for k, v in vars(args).items()}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if isinstance(loaded, dict) and "config" in loaded and "command" in loaded:
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in ("ay", "ly", "az", "lz"):
        if cfg.get(key) is None:
            raise ConfigError(f"missing channel parameter --{key}")
    return cfg


def _manifest(cfg) -> dict:
    kept = {k: v for k, v in sorted(cfg.items()) if k not in _PRESENTATION_ONLY}
    return {"tool": "poissonbc", "version": __version__, "command": cfg["command"], "config": kept}


def _out_dir(cfg) -> Path:
    out = Path(cfg.get("out") or os.environ.get(ENV_OUT) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run(cfg) -> int:
    out = _out_dir(cfg)
    _write_json(out / "manifest.json", _manifest(cfg))
    code, json_text, csv_text = COMMANDS[cfg["command"]](cfg, out)
    if cfg.get("format") == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(json_text)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            manifest = json.loads(Path(args.manifest).read_text())
            cfg = dict(manifest["config"])
            cfg.update(command=manifest["command"], out=args.out, format=args.format, threads=args.threads)
        else:
            cfg = _resolve(args)
        return run(cfg)
    except (ConfigError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"poissonbc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("poissonbc: interrupted; finished rows were kept", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
