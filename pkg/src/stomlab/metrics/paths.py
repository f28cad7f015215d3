"""Distances between step paths (L0, J1-Skorohod) and monotone paths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InputError
from ..spaces import CadlagStepPath, FinitePointMetricSpace, MonotonePath

_TIME_TOL = 1e-12


def _union_breakpoints(*paths: CadlagStepPath) -> np.ndarray:
    return np.unique(np.concatenate([[0.0]] + [p.jump_times for p in paths]))


def _exp_weight(lo: float, hi: float) -> float:
    return math.exp(-lo) - (0.0 if math.isinf(hi) else math.exp(-hi))


def l0_distance(xi: CadlagStepPath, eta: CadlagStepPath, space: FinitePointMetricSpace) -> float:
    """``int_0^inf e^{-t} (1 ^ d(xi_t, eta_t)) dt``, exact over jump-time breakpoints."""
    pts = _union_breakpoints(xi, eta)
    total = 0.0
    for k, lo in enumerate(pts):
        hi = pts[k + 1] if k + 1 < len(pts) else math.inf
        d = space.distance(xi.value_at(lo), eta.value_at(lo))
        total += min(1.0, d) * _exp_weight(lo, hi)
    return total


def _j1_feasible(a, b, dxy, D) -> bool:
    # Is there an increasing time change with sup|lambda - id| <= D and
    # sup d(eta, xi o lambda) <= D?  States (i, j): xi o lambda is in its i-th
    # value, eta in its j-th.  best[i, j] is the earliest time the pair can be
    # entered; entering earlier never hurts, so the DP over earliest times is
    # exact.  c below is the preimage lambda^{-1}(a_i) of a xi-jump.
    p, q = len(a), len(b)
    tol = _TIME_TOL * (1.0 + max(a[-1] if p else 0.0, b[-1] if q else 0.0))
    if dxy[0, 0] > D:
        return False
    ok = dxy <= D
    best = np.full((p + 1, q + 1), math.inf)
    best[0, 0] = 0.0
    for i in range(p + 1):
        for j in range(q + 1):
            tau = best[i, j]
            if tau == math.inf:
                continue
            if i < p and ok[i + 1, j]:
                c = max(tau, a[i] - D)
                if c <= a[i] + D + tol and (j == q or c <= b[j] + tol):
                    best[i + 1, j] = min(best[i + 1, j], c)
            if j < q and ok[i, j + 1] and b[j] >= tau - tol:
                if i == p or b[j] <= a[i] + D + tol:
                    best[i, j + 1] = min(best[i, j + 1], b[j])
            if i < p and j < q and ok[i + 1, j + 1] and b[j] >= tau - tol \
                    and abs(a[i] - b[j]) <= D + tol:
                best[i + 1, j + 1] = min(best[i + 1, j + 1], b[j])
    return best[p, q] < math.inf


def j1_increasing(a, xs, b, ys, space: FinitePointMetricSpace) -> float:
    """``d^{J1,t}`` over increasing time changes for paths with jumps before ``t``.

    ``a`` are xi's jump times (visiting ``xs[1:]``), ``b`` eta's (``ys[1:]``).
    The infimum is attained on the finite candidate set of state distances
    and jump-time gaps, which is searched by bisection.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    dxy = space.dist[np.ix_(space.indices(xs), space.indices(ys))]
    cands = np.unique(np.concatenate(([0.0], dxy.ravel(), np.abs(a[:, None] - b[None, :]).ravel())))
    lo, hi = 0, len(cands) - 1
    # the largest candidate is always feasible: it dominates every gap and distance
    while lo < hi:
        mid = (lo + hi) // 2
        if _j1_feasible(a, b, dxy, cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


@dataclass
class SkorohodResult:
    """Value of the J1 integral with its certificate.

    ``exact`` is True when every integrand value is provably the infimum over
    all continuous bijections: a decreasing bijection of ``[0, t]`` moves 0 to
    ``t``, so it cannot beat an increasing one whose value is at most ``t``
    (or when both are clipped at 1).  Otherwise ``value`` is an upper bound.
    """

    value: float
    exact: bool
    pieces: list = field(default_factory=list)

    def __float__(self) -> float:
        return self.value


def skorohod_distance(xi: CadlagStepPath, eta: CadlagStepPath,
                      space: FinitePointMetricSpace) -> SkorohodResult:
    """``int_0^inf e^{-t} (1 ^ d^{J1,t}(xi, eta)) dt`` for step paths.

    ``d^{J1,t}`` only changes when ``t`` passes a jump time, so the integral is
    a finite sum; on each piece the time-change problem is solved by the
    alignment DP of :func:`j1_increasing`.
    """
    pts = _union_breakpoints(xi, eta)
    total, exact, pieces = 0.0, True, []
    for k, lo in enumerate(pts):
        hi = pts[k + 1] if k + 1 < len(pts) else math.inf
        ma = xi.jump_times <= lo
        mb = eta.jump_times <= lo
        a, b = xi.jump_times[ma], eta.jump_times[mb]
        xs = xi.visited[: 1 + int(ma.sum())]
        ys = eta.visited[: 1 + int(mb.sum())]
        d = j1_increasing(a, xs, b, ys, space)
        val = min(1.0, d)
        piece_exact = bool(val == 0.0 or val <= lo or (len(a) == 0 and len(b) == 0))
        exact = exact and piece_exact
        total += val * _exp_weight(lo, hi)
        pieces.append((float(lo), float(hi), val, piece_exact))
    return SkorohodResult(total, exact, pieces)


def upc_distance(phi1: MonotonePath, phi2: MonotonePath) -> float:
    """``sum_{n>=1} 2^{-n} (1 ^ sup_{[0,n]} |phi1 - phi2|)``.

    The difference is piecewise linear, so each window supremum is attained at
    a breakpoint or at ``n``; past the last breakpoint both paths are flat and
    the remaining geometric tail is summed in closed form.
    """
    if not (isinstance(phi1, MonotonePath) and isinstance(phi2, MonotonePath)):
        raise InputError("upc_distance expects MonotonePath arguments")
    H = max(phi1.horizon, phi2.horizon)
    N = max(1, math.ceil(H))
    grid = np.unique(np.concatenate((phi1.times, phi2.times, np.arange(1, N + 1, dtype=float))))
    diff = np.abs(phi1(grid) - phi2(grid))
    running = np.maximum.accumulate(diff)
    total = 0.0
    for n in range(1, N + 1):
        sup_n = running[np.searchsorted(grid, n, side="right") - 1]
        total += 2.0 ** -n * min(1.0, sup_n)
    total += 2.0 ** -N * min(1.0, running[-1])
    return total
