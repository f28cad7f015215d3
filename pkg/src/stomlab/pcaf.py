"""Additive functionals and space-time occupation measures of finite chains.

On a finite chain every measure ``mu`` is smooth and its additive functional
is ``A_t = int_0^t f(X_s) ds`` with ``f = mu / m``.  The occupation measure
puts density ``f(x)`` on each interval the path spends at ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import InputError, UnsupportedOrderError
from .markov import FiniteSymmetricChain, phi1, potential_norm
from .reports import FalsificationRecord
from .simulate import DEFAULT_SEED, RngStream, simulate_batch
from .spaces import (AtomicMeasure, CadlagStepPath, FinitePointMetricSpace, MonotonePath,
                     SpaceTimeAtom, SpaceTimeAtomicMeasure)

#: largest moment order supported by :func:`kac_moment`
MAX_KAC_ORDER = 5


@dataclass(frozen=True)
class SmoothMeasureSpec:
    """A measure on the states of a chain with its density ``f = mu / m``."""

    base: AtomicMeasure
    chain: FiniteSymmetricChain

    def __post_init__(self):
        self.base.vector(self.chain.states)  # raises for atoms off the chain

    @cached_property
    def density(self) -> np.ndarray:
        return self.base.vector(self.chain.states) / self.chain.m

    def f(self, x) -> float:
        return float(self.density[self.chain.index[x]])


def pcaf_from_path(path: CadlagStepPath, spec: SmoothMeasureSpec,
                   horizon: float | None = None) -> MonotonePath:
    """``A_t = int_0^t f(xi_s) ds`` as an exact piecewise linear path on ``[0, T]``."""
    times, values, acc = [0.0], [0.0], 0.0
    for x, s, e in path.intervals(horizon):
        acc += spec.f(x) * (e - s)
        times.append(e)
        values.append(acc)
    return MonotonePath(times, values)


def stom_from_path(path: CadlagStepPath, spec: SmoothMeasureSpec,
                   horizon: float | None = None) -> SpaceTimeAtomicMeasure:
    """``int 1_{(xi_t, t)} dA_t``: density ``f(x)`` on every constancy interval at ``x``."""
    T = path.horizon if horizon is None else horizon
    atoms = [SpaceTimeAtom(x, s, e, spec.f(x)) for x, s, e in path.intervals(T)]
    return SpaceTimeAtomicMeasure(atoms, T)


def _check_R(R: float) -> None:
    if not R > 1:
        raise InputError(f"truncation radius must exceed 1, got {R}")


def truncation_weights(space: FinitePointMetricSpace, R: float) -> dict:
    """``chi(x) = int_{R-1}^R 1{d(root, x) <= r} dr = clamp(R - d(root, x), 0, 1)``."""
    _check_R(R)
    chi = np.clip(R - space.root_distance, 0.0, 1.0)
    return dict(zip(space.points, chi.tolist()))


def smooth_truncate_measure(mu: AtomicMeasure, R: float,
                            space: FinitePointMetricSpace) -> AtomicMeasure:
    """Each atom scaled by ``clamp(R - d(root, x), 0, 1)``."""
    mu.check_on(space)
    chi = truncation_weights(space, R)
    return AtomicMeasure((p, w * chi[p]) for p, w in zip(mu.points, mu.masses))


def truncate_stom(sigma: SpaceTimeAtomicMeasure, R: float,
                  space: FinitePointMetricSpace) -> SpaceTimeAtomicMeasure:
    """Site-wise smooth truncation of a space-time measure."""
    chi = truncation_weights(space, R)
    for a in sigma.atoms:
        if a.site not in chi:
            raise InputError(f"site {a.site!r} is not in the space")
    return sigma.scale_sites(chi)


def mollifier_kernel(chain: FiniteSymmetricChain, delta: float) -> np.ndarray:
    """``(1/delta) int_delta^{2 delta} p(u, x, z) du`` for all pairs, in closed form."""
    if not delta > 0:
        raise InputError(f"delta must be positive, got {delta}")
    lam, psi = chain.spectrum
    # (1/delta) int_delta^{2delta} e^{lam u} du = e^{lam delta} phi1(lam delta)
    w = np.exp(lam * delta) * phi1(lam * delta)
    K = (psi * w) @ psi.T
    return 0.5 * (K + K.T)


def mollified_stom(chain: FiniteSymmetricChain, mu: AtomicMeasure, path: CadlagStepPath,
                   delta: float, R: float | None = None,
                   space: FinitePointMetricSpace | None = None) -> SpaceTimeAtomicMeasure:
    """Heat-kernel mollified occupation measure.

    At time ``t`` the measure has density ``K_delta(xi_t, z) nu(dz)`` in space,
    where ``K_delta`` is :func:`mollifier_kernel` and ``nu`` is ``mu``
    smoothly truncated at radius ``R`` in ``space`` (no truncation when
    ``R`` is None).  The output is piecewise constant in time.
    """
    if R is not None:
        if space is None:
            raise InputError("a truncation radius needs a space")
        mu = smooth_truncate_measure(mu, R, space)
    K = mollifier_kernel(chain, delta)
    nu = chain.vector(mu)
    support = np.flatnonzero(nu)
    atoms = []
    for x, s, e in path.intervals():
        i = chain.index[x]
        for j in support:
            atoms.append(SpaceTimeAtom(chain.states[j], s, e, float(K[i, j] * nu[j])))
    return SpaceTimeAtomicMeasure(atoms, path.horizon, meta={"delta": delta, "R": R})


def _weight_pieces(chain: FiniteSymmetricChain, f, T: float):
    # normalize a site-time weight to [(duration, per-state vector), ...]
    n = len(chain)
    if f is None:
        return [(T, np.ones(n))]
    if isinstance(f, dict):
        return [(T, np.array([float(f.get(s, 0.0)) for s in chain.states]))]
    arr = np.asarray(f, dtype=object)
    if arr.ndim == 1 and len(arr) == n and all(np.isscalar(v) for v in arr):
        return [(T, np.asarray(f, dtype=float))]
    pieces, prev = [], 0.0
    for t_end, vec in f:
        t_end = min(float(t_end), T)
        if t_end > prev:
            pieces.append((t_end - prev, np.asarray(vec, dtype=float)))
            prev = t_end
    if prev < T:
        raise InputError("site-time weight does not cover [0, T]")
    return pieces


def kac_moment(chain: FiniteSymmetricChain, mu: AtomicMeasure | None, f=None, x0=None,
               k: int = 1, T: float = 1.0) -> float:
    """``E_{x0}[Pi(f 1_{[0,T]})^k]`` by the Kac moment formula.

    The ``k``-fold time-ordered integral
    ``k! int_{t_1<...<t_k<T} prod p(t_i - t_{i-1}, x_{i-1}, x_i) f(x_i, t_i) mu(dx_i)``
    equals ``k!`` times the corner block of the exponential of the block
    bidiagonal matrix with ``Q`` on the diagonal and ``diag(f mu / m)`` above
    it, so it is evaluated exactly (up to the matrix exponential).  ``f`` is
    None (constant 1), a per-state vector or dict, or a step function in time
    given as ``[(t_end, vector), ...]``.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InputError("k must be a positive integer")
    if k > MAX_KAC_ORDER:
        raise UnsupportedOrderError(f"moment order {k} exceeds {MAX_KAC_ORDER}")
    if not T > 0:
        raise InputError("horizon must be positive")
    x0 = chain.states[0] if x0 is None else x0
    dens = chain.vector(mu) / chain.m
    if not dens.any():
        return 0.0
    n = len(chain)
    N = (k + 1) * n
    prod = np.eye(N)
    for dt, g in _weight_pieces(chain, f, T):
        if np.any(g < 0):
            raise InputError("weights must be nonnegative")
        B = np.zeros((N, N))
        for b in range(k + 1):
            B[b * n:(b + 1) * n, b * n:(b + 1) * n] = chain.Q
            if b < k:
                B[b * n:(b + 1) * n, (b + 1) * n:(b + 2) * n] = np.diag(g * dens)
        prod = prod @ scipy.linalg.expm(dt * B)
    i = chain.index[x0]
    corner = prod[i, k * n:(k + 1) * n].sum()
    return float(math.factorial(k) * max(corner, 0.0))


def pcaf_l2_bound(chain: FiniteSymmetricChain, mu: AtomicMeasure, nu: AtomicMeasure,
                  alpha: float, T: float) -> float:
    """Right side of the PCAF difference estimate, from exact potentials."""
    a, b = chain.vector(mu), chain.vector(nu)
    Ua, Ub, Ud = (potential_norm(chain, v, alpha) for v in (a, b, a - b))
    U1a, U1b = potential_norm(chain, a, 1.0), potential_norm(chain, b, 1.0)
    return (18 * (Ua + Ub) * Ud
            + 4 * math.exp(2 * T) * (-math.expm1(-alpha * T)) * (U1a ** 2 + U1b ** 2))


def pcaf_l2_difference_bound_check(chain: FiniteSymmetricChain, mu: AtomicMeasure,
                                   nu: AtomicMeasure, alpha: float, T: float,
                                   replicates: int = 10_000, seed: int = DEFAULT_SEED,
                                   starts: Sequence | None = None, z: float = 3.0) -> FalsificationRecord:
    """Monte Carlo check of
    ``sup_x E_x[sup_{t<=T} |A_t - B_t|^2] <= 18 (|U^a mu| + |U^a nu|) |U^a mu - U^a nu|
    + 4 e^{2T} (1 - e^{-aT}) (|U^1 mu|^2 + |U^1 nu|^2)``.

    Both functionals are evaluated on the same paths; each starting state uses
    its own stream ``(seed, index)``.  A start whose estimate exceeds the
    right side by more than ``z`` standard errors is recorded as a violation.
    """
    if not (alpha > 0 and T > 0):
        raise InputError("alpha and T must be positive")
    right = pcaf_l2_bound(chain, mu, nu, alpha, T)
    g = (chain.vector(mu) - chain.vector(nu)) / chain.m
    rec = FalsificationRecord("pcaf-l2-difference", details={"alpha": alpha, "T": T, "right": right})
    starts = chain.states if starts is None else starts
    worst = 0.0
    for s in starts:
        stream = RngStream(seed, chain.index[s])
        if not g.any():
            mean, se = 0.0, 0.0
        else:
            res = simulate_batch(chain, s, T, replicates, stream, drift=g)
            x = res.sup_abs ** 2
            mean, se = float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))
        rec.seeds[str(s)] = stream.key()
        worst = max(worst, mean)
        if mean - z * se > right:
            rec.violate(start=s, left=mean, se=se, right=right)
    rec.details.update(left=worst, margin=right - worst)
    return rec
