"""Collision measures of two independent walks and their moments.

For independent walks ``X^1, X^2`` with reference measures ``m^1, m^2`` and a
weighting measure ``mu``, the collision measure is
``Pi(dx dt) = 1{X^1_t = X^2_t = x} mu(x) / (m^1(x) m^2(x)) dt``.  It is the
occupation measure of the product chain for the diagonal measure
``mu(x)`` at ``(x, x)``, so its moments follow from the Kac formula on the
product chain.  The product heat kernel factorizes, which lets the first two
moments be computed without building the ``n^2``-state chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .exceptions import InputError, UnsupportedOrderError
from .markov import FiniteSymmetricChain, exp_integral
from .pcaf import kac_moment
from .spaces import AtomicMeasure, CadlagStepPath, SpaceTimeAtom, SpaceTimeAtomicMeasure

#: the product chain is built explicitly only up to this many product states
MATERIALIZE_MAX_STATES = 400
#: Gauss-Legendre panels and nodes for the outer time integral of the second moment
_PANELS, _NODES = 24, 16


@dataclass(frozen=True)
class ProductChain:
    """Two independent chains on the same state list.

    The product generator is ``Q1 (+) Q2`` with reference ``m1 (x) m2``; the
    kernel is ``p1(t, x1, y1) p2(t, x2, y2)``.
    """

    c1: FiniteSymmetricChain
    c2: FiniteSymmetricChain

    @property
    def states(self) -> tuple:
        return self.c1.states

    @property
    def n(self) -> int:
        return len(self.c1)

    @property
    def materializable(self) -> bool:
        return self.n ** 2 <= MATERIALIZE_MAX_STATES

    def pair_index(self, x1, x2) -> int:
        return self.c1.index[x1] * self.n + self.c2.index[x2]

    def kernel(self, t: float) -> np.ndarray:
        """Dense ``n^2 x n^2`` product kernel (pairs ordered ``x1 * n + x2``)."""
        return np.kron(self.c1.kernel_matrix(t), self.c2.kernel_matrix(t))

    @cached_property
    def chain(self) -> FiniteSymmetricChain:
        if not self.materializable:
            raise InputError(f"product of {self.n}-state chains is too large to materialize")
        I = np.eye(self.n)
        Q = np.kron(self.c1.Q, I) + np.kron(I, self.c2.Q)
        states = [(a, b) for a in self.c1.states for b in self.c2.states]
        return FiniteSymmetricChain(states, Q, np.kron(self.c1.m, self.c2.m))


def product_chain(c1: FiniteSymmetricChain, c2: FiniteSymmetricChain,
                  check_times: Iterable[float] = (0.37, 1.9)) -> ProductChain:
    """Product of two chains on the same states, with the factorization checked."""
    if c1.states != c2.states:
        raise InputError("chains must share the same state list")
    pc = ProductChain(c1, c2)
    if pc.materializable:
        for t in check_times:
            direct = pc.chain.kernel_matrix(t)
            if np.abs(direct - pc.kernel(t)).max() > 1e-10 * max(1.0, float(direct.max())):
                raise InputError("product kernel does not factorize")
    return pc


def canonical_weighting(c1: FiniteSymmetricChain, c2: FiniteSymmetricChain) -> AtomicMeasure:
    """``mu(x) = m^1(x) m^2(x)``: every collision then has unit density."""
    if c1.states != c2.states:
        raise InputError("chains must share the same state list")
    return AtomicMeasure.from_vector(c1.states, c1.m * c2.m)


def collision_measure_from_paths(path1: CadlagStepPath, path2: CadlagStepPath,
                                 weighting: AtomicMeasure, c1: FiniteSymmetricChain,
                                 c2: FiniteSymmetricChain | None = None) -> SpaceTimeAtomicMeasure:
    """Exact collision measure: density ``mu(x) / (m1(x) m2(x))`` on co-occupation intervals."""
    c2 = c1 if c2 is None else c2
    if not math.isclose(path1.horizon, path2.horizon):
        raise InputError("paths must share the horizon")
    T = min(path1.horizon, path2.horizon)
    w = weighting.as_dict()
    atoms = []
    I1, I2 = path1.intervals(T), path2.intervals(T)
    i = j = 0
    while i < len(I1) and j < len(I2):
        x, a0, a1 = I1[i]
        y, b0, b1 = I2[j]
        lo, hi = max(a0, b0), min(a1, b1)
        if x == y and hi > lo and w.get(x, 0.0) > 0:
            dens = w[x] / (c1.m[c1.index[x]] * c2.m[c2.index[x]])
            atoms.append(SpaceTimeAtom(x, lo, hi, dens))
        if a1 <= b1:
            i += 1
        else:
            j += 1
    return SpaceTimeAtomicMeasure(atoms, T, kind="collision", meta={"weighting": w})


def _site_weights(c1: FiniteSymmetricChain, weighting: AtomicMeasure | None, sites) -> np.ndarray:
    w = c1.vector(weighting)
    if sites is not None:
        keep = np.zeros(len(c1), dtype=bool)
        keep[c1.idx(sites)] = True
        w = np.where(keep, w, 0.0)
    return w


def _overlap_coefficients(c1, c2, w) -> np.ndarray:
    # G[k, l] = sum_y psi1_k(y) psi2_l(y) w(y)
    _, psi1 = c1.spectrum
    _, psi2 = c2.spectrum
    return psi1.T @ (w[:, None] * psi2)


def collision_kato_integral(c1: FiniteSymmetricChain, c2: FiniteSymmetricChain,
                            weighting: AtomicMeasure | None, delta: float, K=None) -> float:
    """``sup_{x1, x2 in K} int_0^delta sum_{y in K} p1(t, x1, y) p2(t, x2, y) mu(y) dt``."""
    if not delta > 0:
        raise InputError("delta must be positive")
    w = _site_weights(c1, weighting, K)
    if not w.any():
        return 0.0
    lam1, psi1 = c1.spectrum
    lam2, psi2 = c2.spectrum
    G = _overlap_coefficients(c1, c2, w) * exp_integral(lam1[:, None] + lam2[None, :], delta)
    M = psi1 @ G @ psi2.T
    idx = np.arange(len(c1)) if K is None else c1.idx(K)
    return float(M[np.ix_(idx, idx)].max())


def diagonal_measure(pc: ProductChain, weighting: AtomicMeasure | None, sites=None) -> AtomicMeasure:
    w = _site_weights(pc.c1, weighting, sites)
    return AtomicMeasure(((x, x), float(v)) for x, v in zip(pc.states, w) if v > 0)


def _first_moment_factorized(pc, w, a1, a2, T) -> float:
    lam1, psi1 = pc.c1.spectrum
    lam2, psi2 = pc.c2.spectrum
    G = _overlap_coefficients(pc.c1, pc.c2, w) * exp_integral(lam1[:, None] + lam2[None, :], T)
    return float(psi1[pc.c1.index[a1]] @ G @ psi2[pc.c2.index[a2]])


def _second_moment_factorized(pc, w, a1, a2, T) -> float:
    # 2 int_0^T sum_y p1(t, a1, y) p2(t, a2, y) w(y) H(T - t, y) dt, with
    # H(s, y) = int_0^s sum_z p1(u, y, z) p2(u, y, z) w(z) du in closed form
    lam1, psi1 = pc.c1.spectrum
    lam2, psi2 = pc.c2.spectrum
    G = _overlap_coefficients(pc.c1, pc.c2, w)
    L = lam1[:, None] + lam2[None, :]
    r1, r2 = psi1[pc.c1.index[a1]], psi2[pc.c2.index[a2]]
    xg, wg = np.polynomial.legendre.leggauss(_NODES)
    # panels graded towards both ends, where the integrand varies fastest
    u = np.linspace(0.0, 1.0, _PANELS + 1)
    edges = T * (0.5 - 0.5 * np.cos(np.pi * u))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for x, wt in zip(xg, wg):
            t = mid + half * x
            p1 = psi1 @ (np.exp(lam1 * t) * r1)
            p2 = psi2 @ (np.exp(lam2 * t) * r2)
            H = np.einsum("yk,kl,yl->y", psi1, G * exp_integral(L, T - t), psi2, optimize=True)
            total += half * wt * float(np.sum(p1 * p2 * w * H))
    return 2.0 * total


def collision_moment(pc: ProductChain, weighting: AtomicMeasure | None, start: tuple,
                     k: int = 1, T: float = 1.0, sites=None, method: str = "auto") -> float:
    """``E[Pi(E x [0, T])^k]`` for walks started at ``start = (x1, x2)``.

    ``method="materialize"`` runs the Kac formula on the explicit product
    chain with the diagonal measure; ``"factorized"`` uses the factorized
    kernel (``k <= 2``) and never builds the product; ``"auto"`` picks the
    former when the product has at most 400 states.
    """
    if k > 3:
        raise UnsupportedOrderError("collision moments are supported up to order 3")
    if k < 1:
        raise InputError("k must be a positive integer")
    a1, a2 = start
    w = _site_weights(pc.c1, weighting, sites)
    if not w.any():
        return 0.0
    if method == "auto":
        method = "materialize" if pc.materializable else "factorized"
    if method == "materialize":
        return kac_moment(pc.chain, diagonal_measure(pc, weighting, sites), None, (a1, a2), k, T)
    if method != "factorized":
        raise InputError(f"unknown method {method!r}")
    if k == 1:
        return _first_moment_factorized(pc, w, a1, a2, T)
    if k == 2:
        return _second_moment_factorized(pc, w, a1, a2, T)
    raise UnsupportedOrderError("the factorized method supports k <= 2")


def independence_integral(c1: FiniteSymmetricChain, c2: FiniteSymmetricChain,
                          weighting: AtomicMeasure | None, start: tuple, T: float,
                          sites=None) -> float:
    """``int_0^T sum_x P(X1_s = x) P(X2_s = x) mu(x) / (m1(x) m2(x)) ds``."""
    w = _site_weights(c1, weighting, sites) / (c1.m * c2.m)
    return _first_moment_factorized(ProductChain(c1, c2), w * c1.m * c2.m, start[0], start[1], T)
