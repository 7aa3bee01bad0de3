"""Channel constants, the rate-entropy functions phi_u / Phi and the ordering classifier.

All logarithms are natural; 0*log(0) is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

RECEIVERS = ("y", "z")
DOMAIN_TOL = 1e-12
ORDER_RTOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Attenuation ``a_u`` and dark-current rate ``lambda_u`` for both receivers."""

    a_y: float
    lambda_y: float
    a_z: float
    lambda_z: float

    def __post_init__(self):
        for name in ("a_y", "lambda_y", "a_z", "lambda_z"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)

    def gain(self, receiver: str) -> tuple[float, float]:
        """Return ``(a_u, lambda_u)`` for receiver ``'y'`` or ``'z'``."""
        if receiver == "y":
            return self.a_y, self.lambda_y
        if receiver == "z":
            return self.a_z, self.lambda_z
        raise ValueError(f"receiver must be 'y' or 'z', got {receiver!r}")

    def swapped(self) -> "ChannelParams":
        return ChannelParams(self.a_z, self.lambda_z, self.a_y, self.lambda_y)

    def as_dict(self) -> dict:
        return {"a_y": self.a_y, "lambda_y": self.lambda_y, "a_z": self.a_z, "lambda_z": self.lambda_z}


@dataclass(frozen=True)
class OrderingVerdict:
    more_capable_y_over_z: bool
    more_capable_z_over_y: bool
    degraded_y_over_z: bool
    # failing x in [0, 1] for each false ordering flag; degradedness has no x witness
    witnesses: dict = field(default_factory=dict)

    @property
    def less_noisy_y_over_z(self) -> bool:
        # equivalent to more capable for this channel
        return self.more_capable_y_over_z

    @property
    def less_noisy_z_over_y(self) -> bool:
        return self.more_capable_z_over_y

    def as_dict(self) -> dict:
        return {
            "more_capable_y_over_z": self.more_capable_y_over_z,
            "more_capable_z_over_y": self.more_capable_z_over_y,
            "less_noisy_y_over_z": self.less_noisy_y_over_z,
            "less_noisy_z_over_y": self.less_noisy_z_over_y,
            "degraded_y_over_z": self.degraded_y_over_z,
            "witnesses": dict(self.witnesses),
        }


def _check_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < -DOMAIN_TOL) or np.any(arr > 1 + DOMAIN_TOL):
        raise ValueError("input amplitude must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def rate_entropy(rate):
    """``r*log(r)`` with ``0*log(0) = 0``; accepts scalars or arrays."""
    r = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def phi(params: ChannelParams, receiver: str, x):
    """phi_u(x) = (a_u x + lambda_u) log(a_u x + lambda_u), nats per unit time."""
    a, lam = params.gain(receiver)
    return rate_entropy(a * _check_unit(x) + lam)


def capital_phi(params: ChannelParams, x):
    """Phi(x) = phi_y(x) - phi_z(x)."""
    x = _check_unit(x)
    out = rate_entropy(params.a_y * x + params.lambda_y) - rate_entropy(params.a_z * x + params.lambda_z)
    return float(out) if np.ndim(out) == 0 else out


def phi_second_derivative(params: ChannelParams, x):
    """Phi''(x) = a_y^2/(a_y x + lambda_y) - a_z^2/(a_z x + lambda_z); +/-inf where a rate vanishes."""
    x = np.asarray(x, dtype=float)

    def term(a, lam):
        if a == 0:
            return np.zeros_like(x)
        den = a * x + lam
        with np.errstate(divide="ignore"):
            return np.where(den > 0, a * a / np.where(den > 0, den, 1.0), np.inf)

    with np.errstate(invalid="ignore"):
        out = term(params.a_y, params.lambda_y) - term(params.a_z, params.lambda_z)
    return float(out) if out.ndim == 0 else out


def _convex_on_unit(a1, l1, a2, l2):
    """Whether phi_1 - phi_2 is convex on [0, 1]; returns (flag, failing x or None)."""
    if a2 == 0:
        # phi_2 is constant, phi_1 is convex
        return True, None
    if a1 == 0:
        # -phi_2 is strictly concave
        return False, 1.0
    # a1^2 (a2 x + l2) >= a2^2 (a1 x + l1): affine in x, so endpoints decide
    for x in (0.0, 1.0):
        lhs = a1 * a1 * (a2 * x + l2)
        rhs = a2 * a2 * (a1 * x + l1)
        if lhs - rhs < -ORDER_RTOL * max(abs(lhs), abs(rhs)):
            return False, x
    return True, None


def classify_ordering(params: ChannelParams) -> OrderingVerdict:
    """Decide the more-capable (equivalently less-noisy) ordering in both directions,
    and stochastic degradedness of receiver z with respect to receiver y."""
    y_over_z, wit_yz = _convex_on_unit(params.a_y, params.lambda_y, params.a_z, params.lambda_z)
    z_over_y, wit_zy = _convex_on_unit(params.a_z, params.lambda_z, params.a_y, params.lambda_y)

    def ge(lhs, rhs):
        return lhs - rhs >= -ORDER_RTOL * max(abs(lhs), abs(rhs))

    degraded = ge(params.a_y, params.a_z) and ge(params.a_y * params.lambda_z, params.a_z * params.lambda_y)

    witnesses: dict[str, Optional[float]] = {}
    if not y_over_z:
        witnesses["more_capable_y_over_z"] = wit_yz
    if not z_over_y:
        witnesses["more_capable_z_over_y"] = wit_zy
    if not degraded:
        witnesses["degraded_y_over_z"] = None
    return OrderingVerdict(y_over_z, z_over_y, degraded, witnesses)
