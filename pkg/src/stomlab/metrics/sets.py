"""Hausdorff and Fell distances between point sets, and graph distances of functions."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping

import numpy as np

from ..spaces import FinitePointMetricSpace


def _hausdorff_from_cross(cross: np.ndarray) -> float:
    na, nb = cross.shape
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return math.inf
    return float(max(cross.min(axis=1).max(), cross.min(axis=0).max()))


def hausdorff_distance(A: Iterable, B: Iterable, space: FinitePointMetricSpace) -> float:
    """Hausdorff distance between two subsets of a finite space.

    Infinite exactly when one of the sets is empty and the other is not.
    """
    ia = np.unique(space.indices(A))
    ib = np.unique(space.indices(B))
    return _hausdorff_from_cross(space.dist[np.ix_(ia, ib)])


def _exp_weight(r: float, r_next: float) -> float:
    return math.exp(-r) - (0.0 if math.isinf(r_next) else math.exp(-r_next))


def fell_distance(A: Iterable, B: Iterable, space: FinitePointMetricSpace) -> float:
    """``int_0^inf e^{-r} (1 ^ d_H(A|_r, B|_r)) dr`` summed exactly over breakpoints.

    ``A|_r`` is the intersection with the closed root ball of radius ``r``;
    the integrand only changes at root distances of points of ``A`` and ``B``.
    """
    ia = np.unique(space.indices(A))
    ib = np.unique(space.indices(B))
    rd = space.root_distance
    radii = np.unique(np.concatenate(([0.0], rd[ia], rd[ib])))
    total = 0.0
    for k, r in enumerate(radii):
        r_next = radii[k + 1] if k + 1 < len(radii) else math.inf
        ja, jb = ia[rd[ia] <= r], ib[rd[ib] <= r]
        val = min(1.0, _hausdorff_from_cross(space.dist[np.ix_(ja, jb)]))
        total += val * _exp_weight(r, r_next)
    return total


def _value_metric(value_metric):
    if value_metric is not None:
        return value_metric
    return lambda u, v: float(np.max(np.abs(np.asarray(u, float) - np.asarray(v, float)), initial=0.0))


def hatc_graph_distance(f1: Mapping, f2: Mapping, ambient: FinitePointMetricSpace,
                        value_metric: Callable | None = None, rooted: bool = False) -> float:
    """Distance between functions with possibly different finite domains.

    ``f1`` and ``f2`` map points of ``ambient`` to values; ``value_metric``
    defaults to the sup-norm distance of the values.  With ``rooted=False``
    this is the Hausdorff distance between the graphs in the max product
    metric.  With ``rooted=True`` it is ``int e^{-r} (1 ^ graph distance of the
    restrictions to the root ball of radius r) dr``.
    """
    vm = _value_metric(value_metric)
    d1, d2 = list(f1), list(f2)
    i1, i2 = ambient.indices(d1), ambient.indices(d2)
    vals = np.array([[vm(f1[x], f2[y]) for y in d2] for x in d1]).reshape(len(d1), len(d2))
    cross = np.maximum(ambient.dist[np.ix_(i1, i2)], vals)
    if not rooted:
        return _hausdorff_from_cross(cross)
    rd = ambient.root_distance
    r1, r2 = rd[i1], rd[i2]
    radii = np.unique(np.concatenate(([0.0], r1, r2)))
    total = 0.0
    for k, r in enumerate(radii):
        r_next = radii[k + 1] if k + 1 < len(radii) else math.inf
        sub = cross[np.ix_(r1 <= r, r2 <= r)]
        total += min(1.0, _hausdorff_from_cross(sub)) * _exp_weight(r, r_next)
    return total
