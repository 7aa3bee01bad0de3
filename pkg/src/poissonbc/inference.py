"""Exact block posteriors, pathwise information densities and Monte Carlo checks.

Within a block the input is a single Bernoulli symbol and the rate is constant,
so the posterior log-odds of ``X = 1`` after ``k`` arrivals by elapsed time ``s``
is ``prior + k*beta - a*s`` with ``beta = log((a + lam)/lam)``. Everything is
kept in log-odds form; ``+-inf`` encodes a degenerate posterior and ``nan`` an
observation that is impossible under the conditioning.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit, logsumexp
from scipy.stats import poisson

from poissonbc.channel import ChannelParams, rate_entropy
from poissonbc.process import BlockInputModel, PointProcess, sample_realization, time_reverse

CONDITIONS = ("none", "aux_path", "input_path")
KINDS = ("x", "v", "x|v")
DENSITY_NAMES = ("i(X;Y)", "i(V;Z)", "i(X;Y|V)", "i(V;Y)")
GAUSS_NODES = 16
POISSON_TAIL_SIGMAS = 12.0
POISSON_TAIL_GUARD = 30
# absolute slack on statistical gates; covers exact cancellations with roundoff-sized SE
ROUNDOFF_FLOOR = 1e-12


class ImpossibleObservation(ValueError):
    """An arrival occurred where the conditioned intensity is zero."""


# ----------------------------------------------------------- scalar pieces


def jump_log_ratio(a: float, lam: float) -> float:
    """log((a + lam)/lam): log-odds increment per arrival."""
    if a == 0:
        return 0.0
    if lam == 0:
        return math.inf
    return math.log1p(a / lam)


def log_odds(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _times(count, beta):
    # count*beta with 0*inf = 0
    count = np.asarray(count)
    with np.errstate(invalid="ignore"):
        return np.where(count > 0, count * beta, 0.0)


def segment_integral(lo0, a: float, length):
    """Integral over [0, length] of a*expit(lo0 - a*u) du, in closed form.

    Equals softplus(lo0) - softplus(lo0 - a*length); the reflected form is used
    when both arguments are positive to avoid cancellation.
    """
    lo0 = np.asarray(lo0, dtype=float)
    length = np.asarray(length, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        y = lo0 - a * length
        direct = _softplus(lo0) - _softplus(y)
        reflected = a * length + _softplus(-lo0) - _softplus(-y)
        out = np.where(y >= 0, reflected, direct)
        out = np.where(np.isposinf(lo0), a * length, out)
        out = np.where(np.isneginf(lo0), 0.0, out)
    return out


def log_intensity(lo, a: float, lam: float):
    """log(a*expit(lo) + lam), stable for large |lo| and infinite lo."""
    lo = np.asarray(lo, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_r1 = np.log(a + lam) if a + lam > 0 else -np.inf
        log_r0 = np.log(lam) if lam > 0 else -np.inf
        pos = np.logaddexp(log_r1, log_r0 - lo) - np.log1p(np.exp(-lo))
        neg = np.logaddexp(log_r1 + lo, log_r0) - np.log1p(np.exp(lo))
        out = np.where(lo >= 0, pos, neg)
        out = np.where(np.isposinf(lo), log_r1, out)
        out = np.where(np.isneginf(lo), log_r0, out)
    return out


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature of a scalar function to absolute tolerance ``tol``."""

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) * (fa + 4.0 * fm + fb) / 6.0

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, fa, flm, fm, left, eps / 2, depth - 1) + recurse(
            mid, hi, fm, frm, fb, right, eps / 2, depth - 1
        )

    if b <= a:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


# ----------------------------------------------------------- posterior paths


@dataclass(frozen=True)
class PosteriorPath:
    """Piecewise log-linear posterior log-odds on ``[0, horizon]``.

    Segment ``i`` covers ``[starts[i], ends[i])``; there the log-odds is
    ``log_odds0[i] + slopes[i]*(t - starts[i])`` and the posterior mean is its
    logistic transform. ``nan`` log-odds marks an impossible observation.
    """

    horizon: float
    starts: np.ndarray
    ends: np.ndarray
    log_odds0: np.ndarray
    slopes: np.ndarray
    blocks: np.ndarray
    priors: np.ndarray

    @property
    def impossible(self) -> bool:
        return bool(np.any(np.isnan(self.log_odds0)))

    def log_odds(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, self.starts.size - 1)
        with np.errstate(invalid="ignore"):
            return self.log_odds0[i] + self.slopes[i] * (t - self.starts[i])

    def value(self, t):
        """Posterior mean at ``t`` (right-continuous)."""
        return expit(self.log_odds(t))

    def integrate(self, fn, nodes: int = GAUSS_NODES) -> float:
        """Integral over [0, horizon] of ``fn(posterior mean)``, Gauss-Legendre per segment."""
        return float(math.fsum(self.integrate_blocks(fn, nodes)))

    def integrate_blocks(self, fn, nodes: int = GAUSS_NODES) -> np.ndarray:
        x, w = np.polynomial.legendre.leggauss(nodes)
        length = self.ends - self.starts
        u = 0.5 * length[:, None] * (x[None, :] + 1.0)
        with np.errstate(invalid="ignore"):
            lo = self.log_odds0[:, None] + self.slopes[:, None] * u
        vals = fn(expit(lo)) @ w * 0.5 * length
        nblocks = int(self.blocks.max()) + 1 if self.blocks.size else 0
        return np.bincount(self.blocks, weights=vals, minlength=nblocks)


def _block_of(t, tau: float, n: int):
    return np.clip(np.floor(np.asarray(t) / tau).astype(np.int64), 0, n - 1)


def _prior_probs(model: BlockInputModel, condition: str, path) -> np.ndarray:
    """Per-block prior P(X = 1) under the chosen conditioning."""
    n = model.n
    if condition == "none":
        return np.full(n, model.mean_input)
    if path is None:
        raise ValueError(f"condition {condition!r} needs the conditioning block path")
    path = np.asarray(path)
    if path.shape != (n,):
        raise ValueError(f"conditioning path must have shape ({n},), got {path.shape}")
    if condition == "aux_path":
        return np.asarray(model.cond_bernoulli)[path.astype(int)]
    if condition == "input_path":
        return path.astype(float)
    raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")


def _check_horizon(model: BlockInputModel, pp: PointProcess):
    if not math.isclose(pp.horizon, model.horizon, rel_tol=1e-12):
        raise ValueError(f"process horizon {pp.horizon} != n*tau = {model.horizon}")


def _causal_segments(pp: PointProcess, tau: float, n: int):
    """Segment starts and the in-block arrival count at each start, block starts first."""
    t = pp.arrivals
    blocks = _block_of(t, tau, n)
    first = np.r_[True, blocks[1:] != blocks[:-1]] if t.size else np.zeros(0, bool)
    group_start = np.maximum.accumulate(np.where(first, np.arange(t.size), 0)) if t.size else np.zeros(0, int)
    count_after = np.arange(t.size) - group_start + 1
    starts = np.concatenate([np.arange(n) * tau, t])
    seg_block = np.concatenate([np.arange(n), blocks])
    counts = np.concatenate([np.zeros(n, dtype=np.int64), count_after])
    order = np.lexsort((counts, starts))
    return starts[order], seg_block[order], counts[order]


def causal_posterior(
    model: BlockInputModel,
    params: ChannelParams,
    receiver: str,
    pp: PointProcess,
    condition: str = "none",
    path=None,
) -> PosteriorPath:
    """E[X_t | arrivals of ``pp`` in the current block up to t, conditioning]."""
    _check_horizon(model, pp)
    a, lam = params.gain(receiver)
    beta = jump_log_ratio(a, lam)
    priors = _prior_probs(model, condition, path)
    starts, blocks, counts = _causal_segments(pp, model.tau, model.n)
    rel = starts - blocks * model.tau
    with np.errstate(invalid="ignore"):
        lo0 = log_odds(priors)[blocks] + _times(counts, beta) - a * rel
    ends = np.r_[starts[1:], pp.horizon]
    return PosteriorPath(pp.horizon, starts, ends, lo0, np.full(starts.size, -a), blocks, priors)


def anticausal_posterior(
    model: BlockInputModel,
    params: ChannelParams,
    receiver: str,
    pp: PointProcess,
    condition: str = "none",
    path=None,
) -> PosteriorPath:
    """E[X_t | arrivals of ``pp`` in the current block after t, conditioning].

    Computed as the causal filter of the time-reversed process with mirrored blocks.
    """
    _check_horizon(model, pp)
    mirrored = None if path is None else np.asarray(path)[::-1]
    rev = causal_posterior(model, params, receiver, time_reverse(pp), condition, mirrored)
    horizon = pp.horizon
    length = rev.ends - rev.starts
    with np.errstate(invalid="ignore"):
        lo_at_start = rev.log_odds0 + rev.slopes * length
    starts = (horizon - rev.ends)[::-1]
    starts[0] = 0.0
    ends = np.r_[starts[1:], horizon]
    return PosteriorPath(
        horizon,
        starts,
        ends,
        lo_at_start[::-1].copy(),
        -rev.slopes[::-1].copy(),
        (model.n - 1 - rev.blocks)[::-1].copy(),
        rev.priors[::-1].copy(),
    )


def two_sided_path(
    model: BlockInputModel,
    params: ChannelParams,
    y: PointProcess,
    z: PointProcess,
    condition: str = "none",
    path=None,
) -> PosteriorPath:
    """E[X_t | y-arrivals in [block start, t], z-arrivals in (t, block end], conditioning]."""
    _check_horizon(model, y)
    _check_horizon(model, z)
    tau, n = model.tau, model.n
    beta_y = jump_log_ratio(params.a_y, params.lambda_y)
    beta_z = jump_log_ratio(params.a_z, params.lambda_z)
    priors = _prior_probs(model, condition, path)
    yb = _block_of(y.arrivals, tau, n)
    zb = _block_of(z.arrivals, tau, n)
    starts = np.concatenate([np.arange(n) * tau, y.arrivals, z.arrivals])
    blocks = np.concatenate([np.arange(n), yb, zb])
    kind = np.concatenate([np.zeros(n, np.int8), np.ones(yb.size, np.int8), np.full(zb.size, 2, np.int8)])
    order = np.lexsort((kind, starts))
    starts, blocks, kind = starts[order], blocks[order], kind[order]
    # y arrivals at or before the start; z arrivals after it, both within the block
    y_upto = np.cumsum(kind == 1)
    y_before_block = np.concatenate([[0], np.cumsum(np.bincount(yb, minlength=n))])[blocks]
    k_y = y_upto - y_before_block
    z_total = np.bincount(zb, minlength=n)[blocks]
    z_upto = np.cumsum(kind == 2)
    z_before_block = np.concatenate([[0], np.cumsum(np.bincount(zb, minlength=n))])[blocks]
    m_z = z_total - (z_upto - z_before_block)
    rel = starts - blocks * tau
    with np.errstate(invalid="ignore"):
        lo0 = (
            log_odds(priors)[blocks]
            + _times(k_y, beta_y)
            + _times(m_z, beta_z)
            - params.a_y * rel
            - params.a_z * (tau - rel)
        )
    ends = np.r_[starts[1:], y.horizon]
    slopes = np.full(starts.size, params.a_z - params.a_y)
    return PosteriorPath(y.horizon, starts, ends, lo0, slopes, blocks, priors)


def two_sided_posterior(
    model: BlockInputModel,
    params: ChannelParams,
    y: PointProcess,
    z: PointProcess,
    t: float,
    condition: str = "none",
    path=None,
) -> float:
    """Posterior mean at time ``t`` combining past y-arrivals and future z-arrivals in the block."""
    value = float(two_sided_path(model, params, y, z, condition, path).value(t))
    if math.isnan(value):
        raise ImpossibleObservation(f"observation impossible under the conditioning at t={t}")
    return value


# ------------------------------------------------- log-likelihood ratios


def block_llr(prior_lo, rows, blocks, rel, a: float, lam: float, tau: float) -> np.ndarray:
    """Log-likelihood ratio against a unit-rate Poisson reference, one value per row.

    ``prior_lo`` has shape (R, n) with per-block prior log-odds; arrivals are
    given by their row, block and in-block time, sorted by (row, block, time).
    Each row evaluates sum log(a*Pi + lam) at arrivals + n*tau*(1 - lam)
    - integral of a*Pi, with Pi the causal block posterior.
    """
    prior_lo = np.asarray(prior_lo, dtype=float)
    R, n = prior_lo.shape
    beta = jump_log_ratio(a, lam)
    key = np.asarray(rows, dtype=np.int64) * n + np.asarray(blocks, dtype=np.int64)
    rel = np.asarray(rel, dtype=float)
    flat_prior = prior_lo.reshape(-1)
    m = key.size
    arrival_sum = np.zeros(R)
    last_rel = np.zeros(R * n)
    counts = np.bincount(key, minlength=R * n) if m else np.zeros(R * n, dtype=np.int64)
    if m:
        first = np.r_[True, key[1:] != key[:-1]]
        group_start = np.flatnonzero(first)
        group = np.cumsum(first) - 1
        j = np.arange(m) - group_start[group]
        prev = np.where(first, 0.0, np.r_[0.0, rel[:-1]])
        with np.errstate(invalid="ignore"):
            base = flat_prior[key] + _times(j, beta)
            terms = log_intensity(base - a * rel, a, lam) - segment_integral(base - a * prev, a, rel - prev)
        arrival_sum = np.bincount(key // n, weights=terms, minlength=R)
        last = np.r_[group_start[1:], m] - 1
        last_rel[key[last]] = rel[last]
    with np.errstate(invalid="ignore"):
        final = segment_integral(flat_prior + _times(counts, beta) - a * last_rel, a, tau - last_rel)
    return arrival_sum - final.reshape(R, n).sum(axis=1) + n * tau * (1.0 - lam)


def _arrival_layout(pps, tau: float, n: int):
    rows, blocks, rel = [], [], []
    for r, pp in enumerate(pps):
        b = _block_of(pp.arrivals, tau, n)
        rows.append(np.full(b.size, r, dtype=np.int64))
        blocks.append(b)
        rel.append(pp.arrivals - b * tau)
    if not rows:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    return np.concatenate(rows), np.concatenate(blocks), np.concatenate(rel)


def log_likelihood_ratio(
    model: BlockInputModel,
    params: ChannelParams,
    receiver: str,
    pp: PointProcess,
    condition: str = "none",
    path=None,
) -> float:
    """log dP(pp | conditioning)/dP0(pp) with P0 the unit-rate Poisson law on [0, T]."""
    _check_horizon(model, pp)
    a, lam = params.gain(receiver)
    prior = log_odds(_prior_probs(model, condition, path))[None, :]
    rows, blocks, rel = _arrival_layout([pp], model.tau, model.n)
    return float(block_llr(prior, rows, blocks, rel, a, lam, model.tau)[0])


def llr_many_paths(model: BlockInputModel, params: ChannelParams, receiver: str, pp: PointProcess, prior_probs):
    """Log-likelihood ratios of one process under many per-block prior rows (shape (R, n))."""
    a, lam = params.gain(receiver)
    prior_lo = log_odds(np.atleast_2d(prior_probs))
    R = prior_lo.shape[0]
    b = _block_of(pp.arrivals, model.tau, model.n)
    rel = pp.arrivals - b * model.tau
    rows = np.repeat(np.arange(R), b.size)
    return block_llr(prior_lo, rows, np.tile(b, R), np.tile(rel, R), a, lam, model.tau)


# ------------------------------------------------------ information densities


@dataclass(frozen=True)
class InfoDensitySample:
    value: float
    kind: str
    normalized: float
    valid: bool


def _density_name(kind: str, receiver: str) -> str:
    u = receiver.upper()
    return {"x": f"i(X;{u})", "v": f"i(V;{u})", "x|v": f"i(X;{u}|V)"}[kind]


def info_density(
    model: BlockInputModel,
    params: ChannelParams,
    receiver: str,
    realization,
    kind: str,
) -> InfoDensitySample:
    """Pathwise information density of the chosen kind on one receiver.

    ``kind`` is ``'x'`` for i(X;U), ``'v'`` for i(V;U) and ``'x|v'`` for i(X;U|V).
    Non-finite values (an observation impossible under a conditioning) are
    returned as they are with ``valid=False``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    pp = realization.output(receiver)
    a, _ = params.gain(receiver)
    if a == 0:
        value = 0.0
    else:
        conds = {"x": ("input_path", "none"), "v": ("aux_path", "none"), "x|v": ("input_path", "aux_path")}[kind]
        paths = {"none": None, "aux_path": realization.v_bar, "input_path": realization.x_bar}
        num, den = (log_likelihood_ratio(model, params, receiver, pp, c, paths[c]) for c in conds)
        with np.errstate(invalid="ignore"):
            value = float(num - den)
    horizon = model.horizon
    return InfoDensitySample(value, _density_name(kind, receiver), value / horizon, math.isfinite(value))


def density_batch(model: BlockInputModel, params: ChannelParams, realizations) -> dict:
    """All four densities (nats) for a batch of realizations, as arrays keyed by name."""
    R, n, tau = len(realizations), model.n, model.tau
    v = np.stack([r.v_bar for r in realizations]).astype(int)
    x = np.stack([r.x_bar for r in realizations]).astype(float)
    none = log_odds(np.full((R, n), model.mean_input))
    aux = log_odds(np.asarray(model.cond_bernoulli)[v])
    inp = log_odds(x)
    out = {}
    for receiver, priors in (("y", (none, aux, inp)), ("z", (none, aux))):
        a, lam = params.gain(receiver)
        layout = _arrival_layout([r.output(receiver) for r in realizations], tau, n)
        out[receiver] = [block_llr(p, *layout, a, lam, tau) for p in priors]
    y_none, y_aux, y_in = out["y"]
    z_none, z_aux = out["z"]
    zero_y = params.a_y == 0
    zero_z = params.a_z == 0
    with np.errstate(invalid="ignore"):
        res = {
            "i(X;Y)": np.zeros(R) if zero_y else y_in - y_none,
            "i(V;Y)": np.zeros(R) if zero_y else y_aux - y_none,
            "i(X;Y|V)": np.zeros(R) if zero_y else y_in - y_aux,
            "i(V;Z)": np.zeros(R) if zero_z else z_aux - z_none,
        }
    return res


def sample_densities(model, params, trials: int, seed: int, first_trial: int = 0, batch: int = 256) -> dict:
    """Sampled densities for trials ``first_trial .. first_trial + trials - 1``."""
    chunks = {name: [] for name in DENSITY_NAMES}
    for start in range(first_trial, first_trial + trials, batch):
        stop = min(start + batch, first_trial + trials)
        reals = [sample_realization(model, params, seed, t) for t in range(start, stop)]
        for name, vals in density_batch(model, params, reals).items():
            chunks[name].append(vals)
    return {name: np.concatenate(v) for name, v in chunks.items()}


# ---------------------------------------------------------- exact block MI


def _poisson_support(mean: float) -> np.ndarray:
    kmax = int(math.ceil(mean + POISSON_TAIL_SIGMAS * math.sqrt(mean) + POISSON_TAIL_GUARD))
    return np.arange(kmax + 1)


def _log_pmf(ks, mean):
    if mean == 0:
        return np.where(ks == 0, 0.0, -np.inf)
    return poisson.logpmf(ks, mean)


def _mixture_mi(weights, components, ks) -> float:
    """I(S; K) where K | S=s has log-pmf ``components[s]`` over ``ks``."""
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    weights, comps = weights[keep], np.asarray(components)[keep]
    log_marg = logsumexp(comps + np.log(weights)[:, None], axis=0)
    with np.errstate(invalid="ignore"):
        pk = np.exp(comps)
        terms = np.where(pk > 0, pk * (comps - log_marg[None, :]), 0.0)
    return max(float(math.fsum((weights[:, None] * terms).ravel())), 0.0)


def exact_block_mi(model: BlockInputModel, params: ChannelParams, receiver: str, kind: str) -> float:
    """Exact single-block mutual information (nats) between a latent symbol and the block count.

    ``kind``: ``'x'`` for I(X;K), ``'v'`` for I(V;K), ``'x|v'`` for I(X;K|V).
    The Poisson sums are truncated at mean + 12 sqrt(mean) + 30.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    a, lam = params.gain(receiver)
    if a == 0:
        return 0.0
    tau = model.tau
    ks = _poisson_support((a + lam) * tau)
    log_on, log_off = _log_pmf(ks, (a + lam) * tau), _log_pmf(ks, lam * tau)

    def bern_mix(p):
        with np.errstate(divide="ignore"):
            return np.logaddexp(np.log(p) + log_on, np.log1p(-p) + log_off)

    alpha, p = np.asarray(model.aux_probs), np.asarray(model.cond_bernoulli)
    if kind == "x":
        pbar = model.mean_input
        return _mixture_mi([1 - pbar, pbar], [log_off, log_on], ks)
    if kind == "v":
        return _mixture_mi(alpha, [bern_mix(pj) for pj in p], ks)
    return math.fsum(aj * _mixture_mi([1 - pj, pj], [log_off, log_on], ks) for aj, pj in zip(alpha, p) if aj > 0)


def jensen_rate(params: ChannelParams, receiver: str, weights, points) -> float:
    """E[phi(S)] - phi(E[S]) for a discrete S on [0, 1]: the small-block limit of I/tau."""
    a, lam = params.gain(receiver)
    w, x = np.asarray(weights, dtype=float), np.asarray(points, dtype=float)
    return float(np.sum(w * rate_entropy(a * x + lam)) - rate_entropy(a * np.sum(w * x) + lam))


# ---------------------------------------------------------- verification


@dataclass
class VerificationReport:
    check: str
    estimate: float
    std_error: float
    trials: int
    seed: int
    params: dict
    model: dict
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def mean_and_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / v.size
    if v.size < 2:
        return mean, math.inf
    var = math.fsum((v - mean) ** 2) / (v.size - 1)
    return mean, math.sqrt(var / v.size)


def _rate_entropy_fn(params: ChannelParams, receiver: str):
    a, lam = params.gain(receiver)
    return lambda pi: rate_entropy(a * pi + lam)


def identity_terms(model: BlockInputModel, params: ChannelParams, realization) -> dict:
    """Per-realization integrals over [0, T] entering the forward/backward exchange identity,
    with the auxiliary path as the conditioning."""
    v = realization.v_bar
    fy, fz = _rate_entropy_fn(params, "y"), _rate_entropy_fn(params, "z")
    causal_y = causal_posterior(model, params, "y", realization.y, "aux_path", v)
    anti_z = anticausal_posterior(model, params, "z", realization.z, "aux_path", v)
    both = two_sided_path(model, params, realization.y, realization.z, "aux_path", v)
    return {
        "phi_y_causal_y": causal_y.integrate(fy),
        "phi_z_anticausal_z": anti_z.integrate(fz),
        "phi_y_two_sided": both.integrate(fy),
        "phi_z_two_sided": both.integrate(fz),
        "phi_z_causal_y": causal_y.integrate(fz),
    }


def _collect_terms(model, params, trials, seed):
    rows = [identity_terms(model, params, sample_realization(model, params, seed, t)) for t in range(trials)]
    return {k: np.array([r[k] for r in rows]) for k in rows[0]}


def verify_csiszar_identity(
    model: BlockInputModel, params: ChannelParams, trials: int, seed: int, sigmas: float = 3.0
) -> VerificationReport:
    """Monte Carlo check that
    E int phi_y(E[X|Y past, V]) - phi_z(E[X|Z future, V]) dt equals
    E int phi_y(E[X|Y past, Z future, V]) - phi_z(same) dt.

    The estimate is the per-unit-time difference of the two sides; it passes
    when within ``sigmas`` standard errors of zero.
    """
    terms = _collect_terms(model, params, trials, seed)
    T = model.horizon
    lhs = (terms["phi_y_causal_y"] - terms["phi_z_anticausal_z"]) / T
    rhs = (terms["phi_y_two_sided"] - terms["phi_z_two_sided"]) / T
    est, se = mean_and_se(lhs - rhs)
    lhs_mean, lhs_se = mean_and_se(lhs)
    rhs_mean, rhs_se = mean_and_se(rhs)
    passed = bool(abs(est) <= sigmas * se + ROUNDOFF_FLOOR)
    return VerificationReport(
        "identity", est, se, trials, seed, params.as_dict(), model.as_dict(), passed,
        {"lhs": lhs_mean, "lhs_se": lhs_se, "rhs": rhs_mean, "rhs_se": rhs_se, "sigmas": sigmas},
    )


def verify_mc_inequality(
    model: BlockInputModel, params: ChannelParams, trials: int, seed: int, sigmas: float = 3.0
) -> VerificationReport:
    """Monte Carlo estimate of E int phi_z(E[X|Y past, V]) - phi_z(E[X|Z future, V]) dt per unit time.

    Passes when the estimate is at least ``-sigmas`` standard errors.
    """
    terms = _collect_terms(model, params, trials, seed)
    diff = (terms["phi_z_causal_y"] - terms["phi_z_anticausal_z"]) / model.horizon
    est, se = mean_and_se(diff)
    passed = bool(est >= -sigmas * se - ROUNDOFF_FLOOR)
    return VerificationReport(
        "mc-inequality", est, se, trials, seed, params.as_dict(), model.as_dict(), passed, {"sigmas": sigmas}
    )


LLN_TARGETS = {"i(X;Y)": ("y", "x"), "i(V;Z)": ("z", "v"), "i(X;Y|V)": ("y", "x|v"), "i(V;Y)": ("y", "v")}


def verify_lln(
    model: BlockInputModel,
    params: ChannelParams,
    trials: int,
    seed: int,
    block_counts=(100, 1000, 10000),
    sigmas: float = 3.0,
    floor: float = 1e-3,
) -> VerificationReport:
    """Compare sampled normalized densities with exact per-block information rates for each n.

    A row passes when |mean - target| <= max(sigmas*SE, floor).
    """
    rows = []
    targets = {name: exact_block_mi(model, params, r, k) / model.tau for name, (r, k) in LLN_TARGETS.items()}
    for n in block_counts:
        m = model.with_blocks(int(n))
        dens = sample_densities(m, params, trials, seed)
        for name, vals in dens.items():
            est, se = mean_and_se(vals / m.horizon)
            ok = bool(abs(est - targets[name]) <= max(sigmas * se, floor))
            rows.append({"n": int(n), "density": name, "estimate": est, "std_error": se,
                         "target": targets[name], "passed": ok})
    worst = max(rows, key=lambda r: abs(r["estimate"] - r["target"]))
    return VerificationReport(
        "lln", worst["estimate"] - worst["target"], worst["std_error"], trials, seed,
        params.as_dict(), model.as_dict(), all(r["passed"] for r in rows), {"rows": rows, "floor": floor},
    )
