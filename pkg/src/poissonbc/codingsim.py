"""Superposition-coding error experiments with information-density threshold decoders.

Codeword indices are 0-based. A fresh random codebook is drawn for every trial,
so error rates are averages over the codebook ensemble.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from poissonbc.capacity import bc_jensen_y, bc_rates, dms_rates
from poissonbc.channel import ChannelParams
from poissonbc.inference import llr_many_paths
from poissonbc.process import CODEBOOK, MESSAGE, BlockInputModel, PointProcess, draw_inputs, stream, transmit_seeded

SETTINGS = ("independent", "degraded_message_sets")
NO_CANDIDATE, WRONG_CANDIDATE, AMBIGUOUS = "no-candidate", "wrong-candidate", "ambiguous"
FAILURE_KINDS = (NO_CANDIDATE, WRONG_CANDIDATE, AMBIGUOUS)
MAX_CODEBOOK_ENTRIES = 50_000_000
DECODE_CHUNK = 4096
# default slack when a rate reaches its target: the small-slack limit, as a fraction of the target
GAMMA_FLOOR_FRACTION = 1e-3
Z_CRIT = 1.959963984540054


def codebook_size(rate: float, horizon: float) -> int:
    """max(1, floor(exp(horizon * rate)))."""
    if rate < 0:
        raise ValueError("rates must be >= 0")
    return max(1, int(math.floor(math.exp(horizon * rate))))


@dataclass(frozen=True)
class Codebook:
    """Cloud centres ``clouds[j]`` (auxiliary block symbols) and satellites
    ``satellites[j, i]`` (binary block inputs)."""

    setting: str
    model: BlockInputModel
    rates: tuple
    clouds: np.ndarray
    satellites: np.ndarray
    seed: int
    trial: int = 0

    @property
    def cloud_count(self) -> int:
        return self.clouds.shape[0]

    @property
    def satellite_count(self) -> int:
        return self.satellites.shape[1]


def build_codebook(
    model: BlockInputModel,
    rates,
    setting: str,
    seed: int,
    trial: int = 0,
    max_entries: int = MAX_CODEBOOK_ENTRIES,
) -> Codebook:
    """Random superposition codebook.

    ``rates = (R_y, R_other)`` where R_other is the cloud rate: R_z for
    independent messages, R_0 for the common message.
    """
    if setting not in SETTINGS:
        raise ValueError(f"setting must be one of {SETTINGS}, got {setting!r}")
    r_y, r_cloud = (float(r) for r in rates)
    n_cloud = codebook_size(r_cloud, model.horizon)
    n_sat = codebook_size(r_y, model.horizon)
    if n_cloud * n_sat * model.n > max_entries:
        raise ValueError(f"codebook of {n_cloud}x{n_sat} codewords x {model.n} blocks exceeds {max_entries} entries")
    rng = stream(seed, trial, CODEBOOK)
    clouds, _ = draw_inputs(model, rng, n_cloud)
    p = np.asarray(model.cond_bernoulli)[clouds]
    satellites = (rng.random((n_cloud, n_sat, model.n)) < p[:, None, :]).astype(np.int8)
    return Codebook(setting, model, (r_y, r_cloud), clouds, satellites, int(seed), int(trial))


@dataclass(frozen=True)
class DecodingThresholds:
    """Slacks and targets for the threshold tests (nats per unit time).

    For independent messages ``c_y`` is the private-rate target C_y; for
    degraded message sets it plays the role of hat C_y.
    """

    gamma_y: float
    gamma_z: float
    c_y: float
    c_tilde_y: float
    c_z: float

    def __post_init__(self):
        if not (self.gamma_y > 0 and self.gamma_z > 0):
            raise ValueError("threshold slacks must be positive")

    @property
    def joint_y(self) -> float:
        return self.c_y + self.c_tilde_y - self.gamma_y

    @property
    def conditional_y(self) -> float:
        return self.c_y - self.gamma_y

    @property
    def cloud_z(self) -> float:
        return self.c_z - self.gamma_z


def model_targets(params: ChannelParams, model: BlockInputModel, setting: str) -> tuple[float, float, float]:
    """(c_y, c_tilde_y, c_z) for the model's superposition parameters."""
    if setting == "independent":
        if len(model.aux_probs) != 2:
            raise ValueError("independent-message setting needs a binary auxiliary alphabet")
        theta = np.array([model.aux_probs[0], model.cond_bernoulli[0], model.cond_bernoulli[1]])
        c_y, c_z = bc_rates(params, theta)
        return float(c_y), float(bc_jensen_y(params, theta)), float(c_z)
    if setting == "degraded_message_sets":
        if len(model.aux_probs) != 3:
            raise ValueError("degraded-message-sets setting needs a ternary auxiliary alphabet")
        c_z, hat_y, tilde_y = dms_rates(params, np.array(model.aux_probs + model.cond_bernoulli))
        return float(hat_y), float(tilde_y), float(c_z)
    raise ValueError(f"setting must be one of {SETTINGS}, got {setting!r}")


def default_gamma(target: float, rate: float) -> float:
    """(target - rate)/2, floored at a small positive fraction of the target."""
    floor = GAMMA_FLOOR_FRACTION * max(target, 1e-12)
    return max(0.5 * (target - rate), floor)


def make_thresholds(
    params: ChannelParams,
    model: BlockInputModel,
    setting: str,
    rates,
    gamma_y: Optional[float] = None,
    gamma_z: Optional[float] = None,
) -> DecodingThresholds:
    c_y, c_tilde, c_z = model_targets(params, model, setting)
    r_y, r_cloud = rates
    if gamma_y is None:
        # the tighter of the two y-constraints sets the slack
        gamma_y = min(default_gamma(c_y, r_y), default_gamma(c_y + c_tilde, r_y + r_cloud))
    if gamma_z is None:
        gamma_z = default_gamma(c_z, r_cloud)
    return DecodingThresholds(float(gamma_y), float(gamma_z), c_y, c_tilde, c_z)


@dataclass(frozen=True)
class Decision:
    index: object
    failure: Optional[str]
    candidates: int


def _decide(passing_counts, first_pass, shape):
    if passing_counts == 1:
        return Decision(first_pass, None, 1)
    if passing_counts == 0:
        return Decision((0,) * len(shape) if len(shape) > 1 else 0, NO_CANDIDATE, 0)
    return Decision(first_pass, AMBIGUOUS, passing_counts)


def _unravel(flat: int, shape):
    if len(shape) == 1:
        return int(flat)
    return tuple(int(v) for v in np.unravel_index(flat, shape))


def decode_z(codebook: Codebook, z: PointProcess, thresholds: DecodingThresholds, params: ChannelParams) -> Decision:
    """Unique cloud index j with i(V(j); Z)/T >= C_z - gamma_z among finite densities.

    No candidate falls back to index 0; several candidates return the smallest.
    """
    model = codebook.model
    p = np.asarray(model.cond_bernoulli)
    horizon = model.horizon
    base = float(llr_many_paths(model, params, "z", z, np.full((1, model.n), model.mean_input))[0])
    count, first = 0, None
    for start in range(0, codebook.cloud_count, DECODE_CHUNK):
        rows = p[codebook.clouds[start : start + DECODE_CHUNK]]
        with np.errstate(invalid="ignore"):
            dens = (llr_many_paths(model, params, "z", z, rows) - base) / horizon
        ok = np.isfinite(dens) & (dens >= thresholds.cloud_z)
        hits = np.flatnonzero(ok)
        if first is None and hits.size:
            first = start + int(hits[0])
        count += hits.size
    return _decide(count, first, (codebook.cloud_count,))


def decode_y(codebook: Codebook, y: PointProcess, thresholds: DecodingThresholds, params: ChannelParams) -> Decision:
    """Unique pair (i, j), satellite i of cloud j, passing both
    i(X;Y)/T >= C_y + C~_y - gamma_y and i(X;Y|V)/T >= C_y - gamma_y."""
    model = codebook.model
    p = np.asarray(model.cond_bernoulli)
    horizon = model.horizon
    base = float(llr_many_paths(model, params, "y", y, np.full((1, model.n), model.mean_input))[0])
    cloud_llr = llr_many_paths(model, params, "y", y, p[codebook.clouds])
    flat = codebook.satellites.reshape(-1, model.n)
    per_cloud = codebook.satellite_count
    count, first = 0, None
    for start in range(0, flat.shape[0], DECODE_CHUNK):
        rows = flat[start : start + DECODE_CHUNK]
        llr = llr_many_paths(model, params, "y", y, rows.astype(float))
        cloud = (start + np.arange(rows.shape[0])) // per_cloud
        with np.errstate(invalid="ignore"):
            joint = (llr - base) / horizon
            cond = (llr - cloud_llr[cloud]) / horizon
        ok = np.isfinite(joint) & np.isfinite(cond) & (joint >= thresholds.joint_y) & (cond >= thresholds.conditional_y)
        hits = np.flatnonzero(ok)
        if first is None and hits.size:
            first = start + int(hits[0])
        count += hits.size
    shape = (codebook.cloud_count, per_cloud)
    first_pair = None
    if first is not None:
        j, i = _unravel(first, shape)
        first_pair = (i, j)
    return _decide(count, first_pair, shape)


def wilson_interval(errors: int, trials: int, z: float = Z_CRIT) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = errors / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ExperimentResult:
    setting: str
    n: int
    tau: float
    rates: tuple
    gamma_y: float
    gamma_z: float
    trials: int
    seed: int
    errors_y: int
    errors_z: int
    errors_total: int
    kinds_y: dict
    kinds_z: dict
    cloud_count: int
    satellite_count: int
    ci: tuple = (0.0, 1.0)
    ci_y: tuple = (0.0, 1.0)
    ci_z: tuple = (0.0, 1.0)

    @property
    def pe_y(self) -> float:
        return self.errors_y / self.trials

    @property
    def pe_z(self) -> float:
        return self.errors_z / self.trials

    @property
    def pe_total(self) -> float:
        return self.errors_total / self.trials

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(pe_y=self.pe_y, pe_z=self.pe_z, pe_total=self.pe_total)
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        other = "R_z" if self.setting == "independent" else "R_0"
        return {
            "setting": self.setting,
            "n": self.n,
            "tau": self.tau,
            "R_y": self.rates[0],
            other: self.rates[1],
            "gamma_y": self.gamma_y,
            "gamma_z": self.gamma_z,
            "trials": self.trials,
            "pe_y": self.pe_y,
            "pe_z": self.pe_z,
            "pe_total": self.pe_total,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "seed": self.seed,
        }


def run_trial(params, model, rates, thresholds, setting, seed, trial):
    """One encode/transmit/decode round; returns (failure_y, failure_z) with None meaning success."""
    book = build_codebook(model, rates, setting, seed, trial)
    rng = stream(seed, trial, MESSAGE)
    j = int(rng.integers(book.cloud_count))
    i = int(rng.integers(book.satellite_count))
    y, z = transmit_seeded(book.satellites[j, i], model.tau, params, seed, trial)
    r_y, r_cloud = rates
    # a receiver whose messages all have zero rate has nothing to decide
    fail_z = None
    if r_cloud > 0:
        dz = decode_z(book, z, thresholds, params)
        fail_z = dz.failure or (None if dz.index == j else WRONG_CANDIDATE)
    fail_y = None
    if r_cloud > 0 or r_y > 0:
        dy = decode_y(book, y, thresholds, params)
        fail_y = dy.failure or (None if dy.index == (i, j) else WRONG_CANDIDATE)
    return fail_y, fail_z, book.cloud_count, book.satellite_count


def run_experiment(
    params: ChannelParams,
    model: BlockInputModel,
    rates,
    thresholds: DecodingThresholds,
    trials: int,
    seed: int,
    setting: str = "independent",
    threads: int = 1,
) -> ExperimentResult:
    """Average error rates over ``trials`` independent (codebook, message, channel) draws.

    Trials are keyed by index, so ``threads`` changes wall time only.
    """
    kinds_y = dict.fromkeys(FAILURE_KINDS, 0)
    kinds_z = dict.fromkeys(FAILURE_KINDS, 0)
    err_y = err_z = err_total = 0
    sizes = (1, 1)
    def one(t):
        return run_trial(params, model, rates, thresholds, setting, seed, t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, range(trials)))
    else:
        outcomes = map(one, range(trials))
    for fy, fz, nc, ns in outcomes:
        sizes = (nc, ns)
        if fy:
            kinds_y[fy] += 1
            err_y += 1
        if fz:
            kinds_z[fz] += 1
            err_z += 1
        if fy or fz:
            err_total += 1
    return ExperimentResult(
        setting, model.n, model.tau, tuple(float(r) for r in rates), thresholds.gamma_y, thresholds.gamma_z,
        trials, int(seed), err_y, err_z, err_total, kinds_y, kinds_z, sizes[0], sizes[1],
        wilson_interval(err_total, trials), wilson_interval(err_y, trials), wilson_interval(err_z, trials),
    )
