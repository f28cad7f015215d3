"""Reusable experiment tables shared by the command line and the test suite."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.integrate

from .collision import ProductChain, collision_moment
from .graphs import lattice_segment
from .markov import FiniteSymmetricChain
from .network import walk_generator
from .pcaf import SmoothMeasureSpec, mollified_stom, smooth_truncate_measure, stom_from_path
from .simulate import DEFAULT_SEED, RngStream, sample_paths
from .spaces import AtomicMeasure, FinitePointMetricSpace

# ------------------------------------------------------------ lattice collisions


def lattice_walk(L: int) -> FiniteSymmetricChain:
    """Walk on ``{-L..L}`` whose rescaling ``X / L`` approaches standard Brownian motion.

    Each edge is crossed at rate ``L^2 / 2`` and the reference measure gives
    mass ``1 / L`` to every site (metric scale ``L / 2``, measure scale ``L``).
    """
    return walk_generator(lattice_segment(L), "VSRW", metric_scale=L / 2, measure_scale=L)


def lattice_weighting(chain: FiniteSymmetricChain) -> AtomicMeasure:
    """Twice the reference measure: the lattice version of ``2 Leb``."""
    return AtomicMeasure.from_vector(chain.states, 2.0 * chain.m)


def lattice_collision_moment(L: int, t: float, k: int = 1) -> float:
    """``E[Pi(S x [0, t])^k]`` for two lattice walks started at the origin."""
    c = lattice_walk(L)
    return collision_moment(ProductChain(c, c), lattice_weighting(c), (0, 0), k, t,
                            method="factorized")


def _gauss0(var: float) -> float:
    return 1.0 / math.sqrt(2 * math.pi * var)


def continuum_collision_moment(t: float, k: int = 1) -> float:
    """Moments of the collision measure of two standard Brownian motions with ``2 Leb``.

    The first moment is ``int_0^t 2 g(2s) ds`` with ``g(v)`` the centered
    Gaussian density at 0 with variance ``v``; the second is the Kac double
    integral ``2 int_0^t h(s) H(t - s) ds`` with ``h(s) = 2 g(2s)`` and
    ``H`` its primitive.  Both are evaluated by quadrature.
    """
    h = lambda s: 2.0 * _gauss0(2.0 * s)
    H = lambda u: scipy.integrate.quad(h, 0.0, u, epsabs=0, epsrel=1e-12)[0] if u > 0 else 0.0
    if k == 1:
        return H(t)
    if k == 2:
        val, _ = scipy.integrate.quad(lambda s: h(s) * H(t - s), 0.0, t, epsabs=0, epsrel=1e-10)
        return 2.0 * val
    raise ValueError("only k = 1, 2 are tabulated")


def lattice_table(Ls: Sequence[int], t: float, ks: Sequence[int] = (1, 2)) -> list[dict]:
    rows = []
    for k in ks:
        target = continuum_collision_moment(t, k)
        for L in Ls:
            v = lattice_collision_moment(L, t, k)
            rows.append({"k": k, "L": L, "value": v, "continuum": target,
                         "rel_error": abs(v - target) / target})
    return rows


# -------------------------------------------------------------- mollifiers


def mollifier_sweep(chain: FiniteSymmetricChain, mu: AtomicMeasure, start, T: float,
                    deltas: Sequence[float], R: float | None = None,
                    space: FinitePointMetricSpace | None = None, paths: int = 50,
                    seed: int = DEFAULT_SEED, stream: int = 0) -> list[dict]:
    """Mean ``|Pi^(delta,R)(S x [0,T]) - Pi^(*,R)(S x [0,T])|`` over sampled paths.

    The same paths are used for every ``delta``.
    """
    nu = smooth_truncate_measure(mu, R, space) if R is not None else mu
    spec = SmoothMeasureSpec(nu, chain)
    sample = sample_paths(chain, start, T, paths, RngStream(seed, stream))
    exact = np.array([stom_from_path(p, spec).mass() for p in sample])
    rows = []
    for d in deltas:
        moll = np.array([mollified_stom(chain, mu, p, d, R, space).mass() for p in sample])
        diff = np.abs(moll - exact)
        se = float(diff.std(ddof=1) / math.sqrt(len(diff))) if len(diff) > 1 else 0.0
        rows.append({"delta": float(d), "mean_abs_diff": float(diff.mean()), "se": se,
                     "exact_mean": float(exact.mean())})
    return rows


def dyadic(j0: int, j1: int) -> list[float]:
    """``[2^-j0, ..., 2^-j1]``."""
    return [2.0 ** -j for j in range(j0, j1 + 1)]
