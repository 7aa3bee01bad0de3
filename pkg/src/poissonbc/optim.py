"""Derivative-free maximization and upper-right hull utilities.

Everything here is vectorized over independent problems so that a whole weight
sweep (angles x multi-starts) refines in lockstep.
"""

from __future__ import annotations

import math

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
HULL_TOL = 1e-12


def golden_iterations(width: float, tol: float) -> int:
    if width <= tol:
        return 0
    return int(math.ceil(math.log(tol / width) / math.log(INVPHI)))


def golden_max(f, lo, hi, tol=1e-10):
    """Golden-section search for the maximum of ``f`` on ``[lo, hi]``, elementwise.

    ``f`` maps an array of abscissae (same shape as ``lo``) to values.
    Returns ``(x, fx)`` of the best point seen, endpoints included.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    width = float(np.max(hi - lo)) if lo.size else 0.0
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(golden_iterations(width, tol)):
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - INVPHI * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + INVPHI * (hi - lo))
        probe = np.where(left, nx1, nx2)
        fp = f(probe)
        f1, f2 = np.where(left, fp, f2), np.where(left, f1, fp)
        x1, x2 = nx1, nx2
    candidates = [(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))]
    best_x, best_f = candidates[0]
    for cx, cf in candidates[1:]:
        better = cf > best_f
        best_x = np.where(better, cx, best_x)
        best_f = np.where(better, cf, best_f)
    return best_x, best_f


def maximize_1d(f, lo=0.0, hi=1.0, grid=2001, starts=4, tol=1e-12):
    """Grid scan then golden-section refinement around the best ``starts`` cells.

    ``f`` must accept numpy arrays. Returns ``(x*, f(x*))`` as floats.
    """
    xs = np.linspace(lo, hi, grid)
    fs = f(xs)
    order = np.argsort(-fs, kind="stable")[:starts]
    h = (hi - lo) / (grid - 1)
    a = np.maximum(xs[order] - h, lo)
    b = np.minimum(xs[order] + h, hi)
    x, fx = golden_max(f, a, b, tol=tol)
    k = int(np.argmax(fx))
    best_x, best_f = float(x[k]), float(fx[k])
    g = int(np.argmax(fs))
    if fs[g] > best_f:
        best_x, best_f = float(xs[g]), float(fs[g])
    return best_x, best_f


def coordinate_refine(f, x0, lower, upper, width, sweeps=6, tol=1e-9):
    """Coordinate-wise golden-section ascent for a batch of starting points.

    ``x0`` has shape (N, d). ``lower(x, k)`` / ``upper(x, k)`` give the feasible
    range of coordinate ``k`` with the other coordinates held at ``x``. Each
    coordinate is searched in a window of half-width ``width`` (halved every
    sweep) and a move is accepted only if it improves, so the result is never
    worse than the start.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    w = float(width)
    for _ in range(sweeps):
        for k in range(x.shape[1]):
            lo = np.maximum(lower(x, k), x[:, k] - w)
            hi = np.minimum(upper(x, k), x[:, k] + w)
            hi = np.maximum(hi, lo)

            def along(t, k=k):
                trial = x.copy()
                trial[:, k] = t
                return f(trial)

            t, ft = golden_max(along, lo, hi, tol=tol)
            better = ft > fx
            x[better, k] = t[better]
            fx = np.where(better, ft, fx)
        w *= 0.5
    return x, fx


def pareto_front(r1, r2):
    """Indices of points not weakly dominated in the (max r1, max r2) sense."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1.size == 0:
        return np.zeros(0, dtype=int)
    # single-key pass keeps a superset of the front (ties in r1 survive)
    order = np.argsort(-r1)
    r2s = r2[order]
    prev_best = np.concatenate(([-np.inf], np.maximum.accumulate(r2s)[:-1]))
    cand = order[r2s >= prev_best]
    order = cand[np.lexsort((-r2[cand], -r1[cand]))]
    r2s = r2[order]
    prev_best = np.concatenate(([-np.inf], np.maximum.accumulate(r2s)[:-1]))
    return order[r2s > prev_best]


def upper_right_hull(r1, r2, tol=HULL_TOL):
    """Indices (ordered by increasing r1) of the concave upper-right hull chain.

    Andrew's monotone chain on the upper hull, kept from the max-r2 vertex to
    the max-r1 vertex. Collinear points within ``tol`` are dropped.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1.size == 0:
        return []
    order = np.lexsort((-r2, r1))
    chain: list[int] = []
    for i in order:
        if chain and r1[chain[-1]] == r1[i]:
            continue  # same abscissa, lower ordinate
        while len(chain) >= 2:
            o, a = chain[-2], chain[-1]
            cross = (r1[a] - r1[o]) * (r2[i] - r2[o]) - (r2[a] - r2[o]) * (r1[i] - r1[o])
            if cross >= -tol:
                chain.pop()
            else:
                break
        chain.append(int(i))
    top = max(range(len(chain)), key=lambda j: (r2[chain[j]], r1[chain[j]]))
    return chain[top:]
