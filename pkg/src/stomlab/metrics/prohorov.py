"""Prohorov, vague and space-time (STOM) distances between atomic measures."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..exceptions import InputError
from ..spaces import AtomicMeasure, FinitePointMetricSpace, SpaceTimeAtomicMeasure
from .flow import max_transport

BRUTE_FORCE_MAX_ATOMS = 16


def _prohorov_flow(a: np.ndarray, b: np.ndarray, cross: np.ndarray) -> float:
    # For eps in [d_i, d_{i+1}) the edge set {cross <= d_i} is fixed, so the
    # worst deficit max_A (mu(A) - nu(A^eps)) is the constant
    # total - maxflow_i; the answer is min_i max(d_i, deficit_i).
    ta, tb = float(a.sum()), float(b.sum())
    if len(a) == 0 or len(b) == 0:
        return max(ta, tb)
    levels = np.unique(np.concatenate(([0.0], cross.ravel())))
    top = max(ta, tb)
    cache: dict[int, float] = {}

    def deficit(i: int) -> float:
        if i not in cache:
            cache[i] = max(top - max_transport(a, b, cross <= levels[i]), 0.0)
        return cache[i]

    # deficits are nonincreasing in i, levels increasing: locate the crossing
    lo, hi = 0, len(levels) - 1
    if deficit(hi) > levels[hi]:
        return deficit(hi)
    while lo < hi:
        mid = (lo + hi) // 2
        if deficit(mid) <= levels[mid]:
            hi = mid
        else:
            lo = mid + 1
    best = float(levels[lo])
    if lo > 0:
        best = min(best, max(float(levels[lo - 1]), deficit(lo - 1)))
    return best


def _prohorov_subsets(a: np.ndarray, b: np.ndarray, cross: np.ndarray) -> float:
    # enumerate every subset A of each side and every candidate radius
    if len(a) > BRUTE_FORCE_MAX_ATOMS or len(b) > BRUTE_FORCE_MAX_ATOMS:
        raise InputError(f"subset enumeration limited to {BRUTE_FORCE_MAX_ATOMS} atoms per side")
    ta, tb = float(a.sum()), float(b.sum())
    if len(a) == 0 or len(b) == 0:
        return max(ta, tb)
    levels = np.unique(np.concatenate(([0.0], cross.ravel())))

    def worst(src, dst, dmat, eps):
        near = dmat <= eps
        best = 0.0
        for r in range(1, len(src) + 1):
            for A in itertools.combinations(range(len(src)), r):
                reach = near[list(A)].any(axis=0)
                best = max(best, src[list(A)].sum() - dst[reach].sum())
        return best

    out = math.inf
    for eps in levels:
        g = max(worst(a, b, cross, eps), worst(b, a, cross.T, eps))
        out = min(out, max(float(eps), g))
    return out


def prohorov_atoms(a, b, cross, method: str = "flow") -> float:
    """Prohorov distance between two atomic measures given cross distances.

    ``cross[i, j]`` is the distance between atom ``i`` of the first measure and
    atom ``j`` of the second.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.asarray(cross, dtype=float).reshape(len(a), len(b))
    if method == "flow":
        return _prohorov_flow(a, b, cross)
    if method == "subsets":
        return _prohorov_subsets(a, b, cross)
    raise InputError(f"unknown method {method!r}")


def prohorov_distance(mu: AtomicMeasure, nu: AtomicMeasure,
                      space: FinitePointMetricSpace, method: str = "flow") -> float:
    """Prohorov distance on a finite space, for measures of any total mass.

    The infimum of ``eps`` with ``mu(A) <= nu(A^eps) + eps`` and the symmetric
    inequality for all ``A``; ``A^eps`` is the closed eps-neighborhood.
    ``method="subsets"`` enumerates all subsets (at most 16 atoms per side).
    """
    ia, ib = space.indices(mu.points), space.indices(nu.points)
    return prohorov_atoms(mu.masses, nu.masses, space.dist[np.ix_(ia, ib)], method)


def _restricted(measure: AtomicMeasure, space, r: float):
    idx = space.indices(measure.points)
    keep = space.root_distance[idx] <= r
    return measure.masses[keep], idx[keep]


def vague_distance(mu: AtomicMeasure, nu: AtomicMeasure, space: FinitePointMetricSpace,
                   return_profile: bool = False):
    """``int_0^inf e^{-r} (1 ^ prohorov(mu|_r, nu|_r)) dr`` as an exact breakpoint sum.

    ``mu|_r`` is the restriction to the closed ball of radius ``r`` about the
    root.  With ``return_profile=True`` the integrand values on each piece are
    returned as ``(value, [(r_start, r_end, integrand), ...])``.
    """
    ia, ib = space.indices(mu.points), space.indices(nu.points)
    radii = np.unique(np.concatenate(([0.0], space.root_distance[ia], space.root_distance[ib])))
    total, profile = 0.0, []
    for k, r in enumerate(radii):
        r_next = radii[k + 1] if k + 1 < len(radii) else math.inf
        ma, ja = _restricted(mu, space, r)
        mb, jb = _restricted(nu, space, r)
        val = min(1.0, prohorov_atoms(ma, mb, space.dist[np.ix_(ja, jb)]))
        weight = math.exp(-r) - (0.0 if math.isinf(r_next) else math.exp(-r_next))
        total += val * weight
        profile.append((float(r), float(r_next), val))
    return (total, profile) if return_profile else total


def _product_atoms(sigma: SpaceTimeAtomicMeasure, space, t: float, cell: float):
    sites, times, masses = sigma.discretize(cell, upto=t)
    return space.indices(sites), times, masses


def stom_prohorov_at(s1: SpaceTimeAtomicMeasure, s2: SpaceTimeAtomicMeasure,
                     space: FinitePointMetricSpace, t: float, cell: float) -> float:
    """Prohorov distance between the restrictions to ``S x [0, t]``.

    The product space carries the max metric ``d_S v |s - u|``.
    """
    ia, ta, ma = _product_atoms(s1, space, t, cell)
    ib, tb, mb = _product_atoms(s2, space, t, cell)
    cross = np.maximum(space.dist[np.ix_(ia, ib)], np.abs(ta[:, None] - tb[None, :]))
    return prohorov_atoms(ma, mb, cross)


def stom_distance(s1: SpaceTimeAtomicMeasure, s2: SpaceTimeAtomicMeasure,
                  space: FinitePointMetricSpace, cell: float | None = None,
                  nodes: int = 4) -> float:
    """``int_0^inf e^{-t} (1 ^ prohorov(S1|_{[0,t]}, S2|_{[0,t]})) dt``.

    When both measures consist of time atoms only the integrand is piecewise
    constant and the value is an exact breakpoint sum.  Interval atoms are
    lumped into point masses on cells of width ``cell`` (default horizon/50),
    which moves each Prohorov value by at most ``cell/2``, and each piece
    between breakpoints is integrated with ``nodes``-point Gauss-Legendre.
    """
    if not math.isclose(s1.horizon, s2.horizon):
        raise InputError("space-time measures have different horizons")
    for s in (s1, s2):
        for a in s.atoms:
            if a.site not in space.index:
                raise InputError(f"site {a.site!r} is not in the space")
    T = s1.horizon
    cell = T / 50 if cell is None else cell
    pts = np.unique(np.concatenate((s1.breakpoints(), s2.breakpoints())))
    pure_atoms = all(a.end is None for a in s1.atoms + s2.atoms)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if pure_atoms:
            val = min(1.0, stom_prohorov_at(s1, s2, space, lo, cell))
            total += val * (math.exp(-lo) - math.exp(-hi))
            continue
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for x, w in zip(xg, wg):
            t = mid + half * x
            val = min(1.0, stom_prohorov_at(s1, s2, space, t, cell))
            total += half * w * math.exp(-t) * val
    # both restrictions are frozen beyond the horizon
    total += min(1.0, stom_prohorov_at(s1, s2, space, T, cell)) * math.exp(-T)
    return total
