"""Capacity computations: point-to-point, broadcast region, secrecy capacity and the
degraded-message-sets region.

Rates are in nats per unit time. Region boundaries come from a support-function
sweep: for each weight angle the weighted sum of rates is maximized by a coarse
grid, a Pareto prefilter and coordinate-wise golden-section refinement from the
best grid cells, and the maximizers are then hulled.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from poissonbc.channel import ChannelParams, classify_ordering, rate_entropy
from poissonbc.optim import HULL_TOL, coordinate_refine, maximize_1d, pareto_front, upper_right_hull

DEFAULT_ANGLES = 181
DEFAULT_STARTS = 16
BC_RESOLUTION = 200
DMS_RESOLUTION = 50
_CHUNK = 1 << 20


class OrderingWarning(UserWarning):
    """Formula evaluated outside the ordering under which it is a capacity."""


def _rate_fn(params: ChannelParams, receiver: str):
    a, lam = params.gain(receiver)

    def f(x):
        return rate_entropy(a * np.clip(x, 0.0, 1.0) + lam)

    return f


def point_gain(params: ChannelParams, receiver: str, kappa):
    """kappa*phi(1) + (1-kappa)*phi(0) - phi(kappa): the on-off rate at duty cycle kappa."""
    f = _rate_fn(params, receiver)
    kappa = np.asarray(kappa, dtype=float)
    return kappa * f(1.0) + (1.0 - kappa) * f(0.0) - f(kappa)


def pp_capacity(params: ChannelParams, receiver: str) -> tuple[float, float]:
    """Single-receiver capacity and its maximizing duty cycle."""
    a, _ = params.gain(receiver)
    if a == 0:
        return 0.0, 0.0
    kappa, value = maximize_1d(lambda k: point_gain(params, receiver, k))
    return max(value, 0.0), kappa


def secrecy_objective(params: ChannelParams, alpha):
    fy, fz = _rate_fn(params, "y"), _rate_fn(params, "z")

    def big_phi(x):
        return fy(x) - fz(x)

    alpha = np.asarray(alpha, dtype=float)
    return alpha * big_phi(1.0) + (1.0 - alpha) * big_phi(0.0) - big_phi(alpha)


def wiretap_capacity(params: ChannelParams) -> tuple[float, float]:
    """Secrecy capacity and its maximizing duty cycle.

    Emits ``OrderingWarning`` when y is not more capable than z; the value is
    then the maximized formula, not a proven capacity.
    """
    if not classify_ordering(params).more_capable_y_over_z:
        warnings.warn("receiver y is not more capable than z; secrecy formula is not a capacity here", OrderingWarning)
    # a signal-free receiver is handled exactly: no secrecy via y, or no leakage to z
    if params.a_y == 0:
        return 0.0, 0.0
    if params.a_z == 0:
        return pp_capacity(params, "y")
    alpha, value = maximize_1d(lambda x: secrecy_objective(params, x))
    if value <= 0.0:
        return 0.0, 0.0
    # the z Jensen gap is >= 0, so the point-to-point capacity of y bounds the value;
    # enforce it against rounding in the cancelling phi_z terms
    return min(value, pp_capacity(params, "y")[0]), alpha


@dataclass(frozen=True)
class RatePoint:
    r_y: float
    r_other: float
    parameters: dict
    support_angle: Optional[float] = None


@dataclass
class RegionBoundary:
    """Upper-right boundary of a two-dimensional rate region.

    ``other`` names the second rate: ``'r_z'`` for independent messages,
    ``'r_0'`` for the common message.
    """

    kind: str
    other: str
    points: list
    angles: np.ndarray
    support_values: np.ndarray
    warning: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def r_y(self) -> np.ndarray:
        return np.array([p.r_y for p in self.points])

    @property
    def r_other(self) -> np.ndarray:
        return np.array([p.r_other for p in self.points])

    def intercepts(self) -> tuple[float, float]:
        """(largest r_y, largest second rate) on the boundary."""
        return float(self.r_y.max()), float(self.r_other.max())

    def weights(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def support(self, mu_y: float, mu_other: float) -> float:
        """Max of mu_y*r_y + mu_other*r_other over the hull of the boundary points."""
        return float(np.max(mu_y * self.r_y + mu_other * self.r_other))

    def contains(self, r_y: float, r_other: float, tol: float = 1e-9) -> bool:
        if r_y < -tol or r_other < -tol:
            return False
        w = self.weights()
        return bool(np.all(w[:, 0] * r_y + w[:, 1] * r_other <= self.support_values + tol))


# ---------------------------------------------------------------- broadcast


def bc_rates(params: ChannelParams, theta):
    """(C_y, C_z) for rows ``theta = (alpha, p, q)``."""
    theta = np.asarray(theta, dtype=float)
    alpha, p, q = theta[..., 0], theta[..., 1], theta[..., 2]
    fz = _rate_fn(params, "z")
    c_y = alpha * point_gain(params, "y", p) + (1 - alpha) * point_gain(params, "y", q)
    c_z = alpha * fz(p) + (1 - alpha) * fz(q) - fz(alpha * p + (1 - alpha) * q)
    return c_y, c_z


def bc_jensen_y(params: ChannelParams, theta):
    """alpha*phi_y(p) + (1-alpha)*phi_y(q) - phi_y(alpha p + (1-alpha) q)."""
    theta = np.asarray(theta, dtype=float)
    alpha, p, q = theta[..., 0], theta[..., 1], theta[..., 2]
    fy = _rate_fn(params, "y")
    return alpha * fy(p) + (1 - alpha) * fy(q) - fy(alpha * p + (1 - alpha) * q)


def _angles(count: int) -> np.ndarray:
    return np.linspace(0.0, math.pi / 2, count)


def _sweep(front_values, front_params, objective, angles, starts, lower, upper, width):
    """Per-angle multi-start refinement from the best prefiltered grid points.

    ``front_values`` has shape (F, 2); ``objective(theta, weights)`` evaluates
    row-wise weighted objectives. Returns per-angle best (params, value).
    """
    w = np.column_stack([np.cos(angles), np.sin(angles)])
    scores = front_values @ w.T  # (F, angles)
    k = min(starts, scores.shape[0])
    top = np.argsort(-scores, axis=0, kind="stable")[:k].T  # (angles, k)
    grid_best = scores.max(axis=0)
    x0 = front_params[top.reshape(-1)]
    row_w = np.repeat(w, k, axis=0)
    x, fx = coordinate_refine(lambda th: objective(th, row_w), x0, lower, upper, width)
    fx = fx.reshape(len(angles), k)
    best = np.argmax(fx, axis=1)
    x = x.reshape(len(angles), k, -1)[np.arange(len(angles)), best]
    values = np.maximum(fx[np.arange(len(angles)), best], grid_best)
    return x, values


def _boundary(kind, other, names, params_rows, rates, angles, values, warning, meta):
    r1, r2 = rates
    r1 = np.maximum(r1, 0.0)
    r2 = np.maximum(r2, 0.0)
    keep = upper_right_hull(r1, r2, HULL_TOL)
    points = [
        RatePoint(float(r1[i]), float(r2[i]), dict(zip(names, map(float, params_rows[i]))), float(angles[i]))
        for i in keep
    ]
    return RegionBoundary(kind, other, points, angles, values, warning, meta)


def bc_grid(params: ChannelParams, resolution: int = BC_RESOLUTION):
    """Pareto-optimal (C_y, C_z) pairs and their (alpha, p, q) over the coarse grid."""
    alphas = np.arange(resolution // 2 + 1) / resolution
    pq = np.arange(resolution + 1) / resolution
    P, Q = np.meshgrid(pq, pq, indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    vals, pars = [], []
    for a in alphas:
        theta = np.column_stack([np.full(P.size, a), P, Q])
        c_y, c_z = bc_rates(params, theta)
        keep = pareto_front(c_y, c_z)
        vals.append(np.column_stack([c_y[keep], c_z[keep]]))
        pars.append(theta[keep])
    vals, pars = np.concatenate(vals), np.concatenate(pars)
    keep = pareto_front(vals[:, 0], vals[:, 1])
    return vals[keep], pars[keep]


def bc_region(
    params: ChannelParams,
    resolution: int = BC_RESOLUTION,
    angles: int = DEFAULT_ANGLES,
    starts: int = DEFAULT_STARTS,
) -> RegionBoundary:
    """Broadcast region for independent messages with superposition inputs.

    The region is the hull of (C_y, C_z) over alpha in [0, 1/2], p, q in [0, 1].
    It is a capacity region only when y is more capable than z; otherwise the
    boundary carries a warning and ``OrderingWarning`` is emitted.
    """
    warning = None
    if not classify_ordering(params).more_capable_y_over_z:
        warning = "receiver y is not more capable than z; region formula is not a proven capacity region"
        warnings.warn(warning, OrderingWarning)
    theta_angles = _angles(angles)
    front_vals, front_pars = bc_grid(params, resolution)

    def objective(theta, w):
        c_y, c_z = bc_rates(params, theta)
        return w[:, 0] * c_y + w[:, 1] * c_z

    hi = np.array([0.5, 1.0, 1.0])

    def lower(x, k):
        return np.zeros(x.shape[0])

    def upper(x, k):
        return np.full(x.shape[0], hi[k])

    x, values = _sweep(front_vals, front_pars, objective, theta_angles, starts, lower, upper, 2.0 / resolution)
    rates = bc_rates(params, x)
    return _boundary(
        "bc", "r_z", ("alpha", "p", "q"), x, rates, theta_angles, values, warning,
        {"resolution": resolution, "starts": starts},
    )


# --------------------------------------------------- degraded message sets


def dms_rates(params: ChannelParams, theta):
    """(C_z, hat C_y, tilde C_y) for rows ``theta = (alpha1, alpha2, alpha3, p1, p2, p3)``."""
    theta = np.asarray(theta, dtype=float)
    alpha = theta[..., :3]
    p = theta[..., 3:]
    fy, fz = _rate_fn(params, "y"), _rate_fn(params, "z")
    mean = np.sum(alpha * p, axis=-1)
    c_z = np.sum(alpha * fz(p), axis=-1) - fz(mean)
    hat_y = np.sum(alpha * point_gain(params, "y", p), axis=-1)
    tilde_y = np.sum(alpha * fy(p), axis=-1) - fy(mean)
    return c_z, hat_y, tilde_y


def dms_corner(params: ChannelParams, theta):
    """Sum-rate bound S and common-rate corner m of the pentagon for fixed parameters.

    The region is {R_0 <= C_z, R_0 + R_y <= S} with S = hat C_y + min(tilde C_y, C_z);
    its corners are (R_y, R_0) = (S, 0) and (S - m, m) with m = min(C_z, S).
    """
    c_z, hat_y, tilde_y = dms_rates(params, theta)
    c_z = np.maximum(c_z, 0.0)
    s = np.maximum(hat_y + np.minimum(tilde_y, c_z), 0.0)
    return s, np.minimum(c_z, s)


def _dms_support(s, m, w):
    # weights (mu_y, mu_0) both >= 0
    return w[..., 0] * s + np.maximum(w[..., 1] - w[..., 0], 0.0) * m


def _compositions(resolution: int):
    """Integer triples i <= j <= k summing to ``resolution``."""
    for i in range(resolution // 3 + 1):
        for j in range(i, (resolution - i) // 2 + 1):
            yield i, j, resolution - i - j


def dms_grid(params: ChannelParams, resolution: int = DMS_RESOLUTION):
    """Pareto-optimal (S, m) pairs and parameters over the coarse grid.

    Joint permutations of (alpha_i, p_i) leave the rates unchanged, so only
    sorted alpha triples are scanned.
    """
    ps = np.arange(resolution + 1) / resolution
    idx = np.array(list(itertools.product(range(resolution + 1), repeat=3)))
    P = ps[idx]
    fy, fz = _rate_fn(params, "y"), _rate_fn(params, "z")
    # per-symbol terms tabulated once; only the mixture term varies per point
    tab_y, tab_z, tab_g = fy(ps)[idx], fz(ps)[idx], point_gain(params, "y", ps)[idx]
    vals, pars = [], []
    for comp in _compositions(resolution):
        alpha = np.asarray(comp, dtype=float) / resolution
        mean = P @ alpha
        c_z = np.maximum(tab_z @ alpha - fz(mean), 0.0)
        hat_y = tab_g @ alpha
        tilde_y = tab_y @ alpha - fy(mean)
        s = np.maximum(hat_y + np.minimum(tilde_y, c_z), 0.0)
        m = np.minimum(c_z, s)
        keep = pareto_front(s, m)
        vals.append(np.column_stack([s[keep], m[keep]]))
        pars.append(np.column_stack([np.broadcast_to(alpha, (keep.size, 3)), P[keep]]))
    vals, pars = np.concatenate(vals), np.concatenate(pars)
    keep = pareto_front(vals[:, 0], vals[:, 1])
    return vals[keep], pars[keep]


def dms_region(
    params: ChannelParams,
    resolution: int = DMS_RESOLUTION,
    angles: int = DEFAULT_ANGLES,
    starts: int = DEFAULT_STARTS,
) -> RegionBoundary:
    """Degraded-message-sets region over (R_y, R_0); valid for any ordering.

    Optimized over (alpha1, alpha2, p1, p2, p3) with alpha3 = 1 - alpha1 - alpha2.
    """
    theta_angles = _angles(angles)
    front_vals, front_pars = dms_grid(params, resolution)
    w = np.column_stack([np.cos(theta_angles), np.sin(theta_angles)])
    grid_scores = _dms_support(front_vals[:, None, 0], front_vals[:, None, 1], w[None, :, :])
    k = min(starts, front_vals.shape[0])
    top = np.argsort(-grid_scores, axis=0, kind="stable")[:k].T
    grid_best = grid_scores.max(axis=0)

    def full(x):
        return np.column_stack([x[:, 0], x[:, 1], 1.0 - x[:, 0] - x[:, 1], x[:, 2:]])

    row_w = np.repeat(w, k, axis=0)

    def objective(x):
        s, m = dms_corner(params, full(x))
        return _dms_support(s, m, row_w)

    def lower(x, k_):
        return np.zeros(x.shape[0])

    def upper(x, k_):
        if k_ < 2:
            return np.clip(1.0 - x[:, 1 - k_], 0.0, 1.0)
        return np.ones(x.shape[0])

    start = front_pars[top.reshape(-1)]
    x0 = np.column_stack([start[:, 0], start[:, 1], start[:, 3:]])
    x, fx = coordinate_refine(objective, x0, lower, upper, 2.0 / resolution)
    fx = fx.reshape(len(theta_angles), k)
    best = np.argmax(fx, axis=1)
    x = full(x).reshape(len(theta_angles), k, -1)[np.arange(len(theta_angles)), best]
    x[:, 2] = np.maximum(x[:, 2], 0.0)
    values = np.maximum(fx[np.arange(len(theta_angles)), best], grid_best)

    s, m = dms_corner(params, x)
    # the common-rate corner is active exactly when mu_0 > mu_y
    use_corner = w[:, 1] > w[:, 0]
    r_y = np.where(use_corner, s - m, s)
    r_0 = np.where(use_corner, m, 0.0)
    return _boundary(
        "dms", "r_0", ("alpha1", "alpha2", "alpha3", "p1", "p2", "p3"), x, (r_y, r_0), theta_angles, values, None,
        {"resolution": resolution, "starts": starts},
    )
