"""Point-process realizations and exact simulation of block-constant doubly-stochastic
Poisson outputs.

Random numbers come from counter-based Philox streams keyed by
``(seed, trial, purpose)``, so a trial's output never depends on which other
trials ran, in which order, or on how many threads were used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from poissonbc.channel import ChannelParams

# stream purposes
INPUT, RECEIVER_Y, RECEIVER_Z, CODEBOOK, MESSAGE = range(5)
_RECEIVER_STREAM = {"y": RECEIVER_Y, "z": RECEIVER_Z}
_OPEN_UNIT_BITS = 53


def stream(seed: int, trial: int = 0, purpose: int = 0) -> np.random.Generator:
    """Independent generator for one ``(seed, trial, purpose)`` key."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(trial), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    k = rng.integers(0, 2**_OPEN_UNIT_BITS, size=size, dtype=np.int64)
    return (k + 0.5) / 2.0**_OPEN_UNIT_BITS


@dataclass(frozen=True)
class PointProcess:
    """Arrival times of a counting process on ``[0, horizon]``; arrivals lie in (0, horizon]."""

    horizon: float
    arrivals: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.arrivals, dtype=float).reshape(-1)
        horizon = float(self.horizon)
        if not (math.isfinite(horizon) and horizon > 0):
            raise ValueError("horizon must be positive and finite")
        if arr.size:
            if np.any(np.diff(arr) <= 0):
                raise ValueError("arrivals must be strictly increasing")
            if arr[0] <= 0 or arr[-1] > horizon:
                raise ValueError("arrivals must lie in (0, horizon]")
        arr.setflags(write=False)
        object.__setattr__(self, "arrivals", arr)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self):
        return self.arrivals.size

    def __eq__(self, other):
        if not isinstance(other, PointProcess):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.arrivals, other.arrivals)

    __hash__ = None

    def count(self, t1: float, t2: float) -> int:
        """Number of arrivals in (t1, t2]."""
        return int(np.searchsorted(self.arrivals, t2, "right") - np.searchsorted(self.arrivals, t1, "right"))

    def to_csv(self, path) -> None:
        """Write ``path`` (header ``t``) and a ``<path>.json`` sidecar with horizon and count."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write("t\n")
            for t in self.arrivals:
                fh.write(f"{float(t)!r}\n")
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps({"horizon": self.horizon, "count": len(self)}, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PointProcess":
        path = Path(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        lines = path.read_text().splitlines()
        if not lines or lines[0].strip() != "t":
            raise ValueError(f"{path}: expected header 't'")
        arrivals = np.array([float(v) for v in lines[1:] if v.strip()], dtype=float)
        if arrivals.size != int(meta["count"]):
            raise ValueError(f"{path}: sidecar count {meta['count']} != {arrivals.size} rows")
        return cls(meta["horizon"], arrivals)


@dataclass(frozen=True)
class BlockInputModel:
    """Block-i.i.d. binary input law.

    ``n`` blocks of length ``tau``; each block draws an auxiliary symbol
    ``v`` (0-based index into ``aux_probs``) and then ``X = 1`` with probability
    ``cond_bernoulli[v]``.
    """

    tau: float
    n: int
    aux_probs: tuple
    cond_bernoulli: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.aux_probs)
        p = tuple(float(b) for b in self.cond_bernoulli)
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError("tau must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if len(alpha) == 0 or len(alpha) != len(p):
            raise ValueError("aux_probs and cond_bernoulli must be non-empty and of equal length")
        if any(a < 0 for a in alpha) or abs(math.fsum(alpha) - 1.0) > 1e-12:
            raise ValueError("aux_probs must be non-negative and sum to 1")
        if any(not 0.0 <= b <= 1.0 for b in p):
            raise ValueError("cond_bernoulli entries must lie in [0, 1]")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "aux_probs", alpha)
        object.__setattr__(self, "cond_bernoulli", p)

    @classmethod
    def binary(cls, tau, n, alpha, p, q) -> "BlockInputModel":
        """Auxiliary symbol 0 w.p. ``alpha`` (input mean ``p``), symbol 1 otherwise (mean ``q``)."""
        return cls(tau, n, (alpha, 1.0 - alpha), (p, q))

    @property
    def horizon(self) -> float:
        return self.n * self.tau

    @property
    def mean_input(self) -> float:
        return math.fsum(a * b for a, b in zip(self.aux_probs, self.cond_bernoulli))

    def with_blocks(self, n: int) -> "BlockInputModel":
        return BlockInputModel(self.tau, n, self.aux_probs, self.cond_bernoulli)

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "n": self.n,
            "aux_probs": list(self.aux_probs),
            "cond_bernoulli": list(self.cond_bernoulli),
        }


@dataclass(frozen=True)
class ChannelRealization:
    v_bar: np.ndarray
    x_bar: np.ndarray
    y: PointProcess
    z: PointProcess

    def output(self, receiver: str) -> PointProcess:
        if receiver == "y":
            return self.y
        if receiver == "z":
            return self.z
        raise ValueError(f"receiver must be 'y' or 'z', got {receiver!r}")


def draw_inputs(model: BlockInputModel, rng: np.random.Generator, size=None):
    """Draw auxiliary and input block paths; shape ``(n,)`` or ``size + (n,)``."""
    shape = (model.n,) if size is None else tuple(np.atleast_1d(size)) + (model.n,)
    alpha = np.asarray(model.aux_probs)
    cdf = np.cumsum(alpha)
    cdf[-1] = 1.0
    v = np.searchsorted(cdf, rng.random(shape), side="right")
    v = np.minimum(v, alpha.size - 1)
    p = np.asarray(model.cond_bernoulli)[v]
    x = (rng.random(shape) < p).astype(np.int8)
    return v.astype(np.int16), x


def block_arrivals(rates: np.ndarray, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Exact arrivals for piecewise-constant ``rates`` over consecutive blocks of length ``tau``.

    Per block: count ~ Poisson(rate * tau), then the arrivals are sorted uniforms
    in the open block.
    """
    rates = np.asarray(rates, dtype=float)
    counts = rng.poisson(rates * tau)
    total = int(counts.sum())
    block = np.repeat(np.arange(rates.size), counts)
    times = (block + open_uniform(rng, total)) * tau
    times.sort()
    # floating rounding can collide at a block edge; keep the sequence strict
    return np.unique(times)


def transmit(x_bar, tau: float, params: ChannelParams, rng_y, rng_z):
    """Outputs ``(y, z)`` for a fixed input block path."""
    x = np.asarray(x_bar, dtype=float)
    horizon = x.size * tau
    y = PointProcess(horizon, block_arrivals(params.a_y * x + params.lambda_y, tau, rng_y))
    z = PointProcess(horizon, block_arrivals(params.a_z * x + params.lambda_z, tau, rng_z))
    return y, z


def transmit_seeded(x_bar, tau: float, params: ChannelParams, seed: int, trial: int = 0):
    return transmit(x_bar, tau, params, stream(seed, trial, RECEIVER_Y), stream(seed, trial, RECEIVER_Z))


def sample_realization(model: BlockInputModel, params: ChannelParams, seed: int, trial: int = 0) -> ChannelRealization:
    """Draw one realization: block symbols, block inputs and both receivers' arrivals."""
    v, x = draw_inputs(model, stream(seed, trial, INPUT))
    y, z = transmit_seeded(x, model.tau, params, seed, trial)
    return ChannelRealization(v, x, y, z)


def restrict_window(pp: PointProcess, t1: float, t2: float) -> PointProcess:
    """Arrivals of ``pp`` in (t1, t2]; the horizon is kept."""
    if not (0 <= t1 < t2 <= pp.horizon):
        raise ValueError(f"invalid window ({t1}, {t2}] for horizon {pp.horizon}")
    a = pp.arrivals
    return PointProcess(pp.horizon, a[(a > t1) & (a <= t2)])


def time_reverse(pp: PointProcess) -> PointProcess:
    """Map each arrival s to T - s. An arrival exactly at T would land on 0 and is dropped,
    as is any arrival that rounds onto its neighbour's reflection."""
    rev = pp.horizon - pp.arrivals[::-1]
    return PointProcess(pp.horizon, np.unique(rev[rev > 0]))
