"""Heat kernels, resolvents, potentials and Kato diagnostics of finite symmetric chains.

A chain is a conservative generator ``Q`` that is symmetric with respect to a
reference measure ``m`` (``m(x) Q(x, y) = m(y) Q(y, x)``).  Its heat kernel is
the density ``p(t, x, y) = exp(tQ)[x, y] / m(y)``.  Everything is computed
through the spectral decomposition of ``M^{1/2} Q M^{-1/2}``, which is a real
symmetric matrix, so time integrals of the kernel have closed forms.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .exceptions import InputError, NumericalError
from .reports import FalsificationRecord
from .spaces import AtomicMeasure

#: tolerance for the heat-kernel invariants (symmetry, conservativeness)
HK_TOL = 1e-10
#: above this ratio max(m)/min(m) the expm fallback is used
CONDITION_LIMIT = 1e12


def phi1(z):
    """``(e^z - 1) / z`` with the removable singularity at 0, elementwise."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    zz = z[~small]
    out[~small] = np.expm1(zz) / zz
    out[small] = 1.0 + z[small] / 2 + z[small] ** 2 / 6
    return out


def exp_integral(lam, t: float):
    """``int_0^t e^{lam s} ds`` elementwise in ``lam``."""
    return t * phi1(np.asarray(lam, dtype=float) * t)


class FiniteSymmetricChain:
    """Continuous-time Markov chain on finitely many states, reversible w.r.t. ``m``.

    Parameters
    ----------
    states : sequence of hashable ids
    Q : (n, n) generator; rows sum to zero, off-diagonal entries nonnegative
    m : positive reference masses, one per state
    """

    def __init__(self, states: Sequence, Q, m, rtol: float = 1e-12):
        self.states = tuple(states)
        n = len(self.states)
        Q = np.array(Q, dtype=float)
        m = np.array(m, dtype=float).reshape(-1)
        if Q.shape != (n, n) or m.shape != (n,):
            raise InputError("generator and reference measure must match the states")
        if len(set(self.states)) != n:
            raise InputError("duplicate state ids")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise InputError("reference measure must be positive")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise InputError("off-diagonal rates must be nonnegative")
        scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
        if np.any(np.abs(Q.sum(axis=1)) > 1e-10 * scale):
            raise InputError("rows must sum to zero (killing is not supported)")
        flux = m[:, None] * off
        if np.any(np.abs(flux - flux.T) > rtol * max(1.0, float(flux.max(initial=0.0)))):
            raise InputError("generator is not symmetric with respect to m")
        Q.setflags(write=False)
        m.setflags(write=False)
        self.Q = Q
        self.m = m

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        return f"FiniteSymmetricChain(n={len(self)})"

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def idx(self, states: Iterable) -> np.ndarray:
        try:
            return np.fromiter((self.index[s] for s in states), dtype=int)
        except KeyError as exc:
            raise InputError(f"{exc.args[0]!r} is not a state of the chain") from None

    def vector(self, mu: AtomicMeasure | None) -> np.ndarray:
        """Masses of ``mu`` laid out along the states."""
        if mu is None:
            return np.zeros(len(self))
        return mu.vector(self.states)

    @property
    def rates(self) -> np.ndarray:
        """Total jump rate ``-Q(x, x)`` per state."""
        return -np.diag(self.Q)

    @cached_property
    def well_conditioned(self) -> bool:
        return float(self.m.max() / self.m.min()) < CONDITION_LIMIT

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues ``lam`` (ascending, all <= 0) and ``psi = M^{-1/2} V``.

        ``p(t) = psi diag(e^{lam t}) psi^T`` and ``psi^T diag(m) psi = I``.
        """
        r = np.sqrt(self.m)
        S = r[:, None] * self.Q / r[None, :]
        S = 0.5 * (S + S.T)
        lam, V = np.linalg.eigh(S)
        lam = np.minimum(lam, 0.0)
        psi = V / r[:, None]
        return lam, psi

    def kernel_matrix(self, t: float) -> np.ndarray:
        if self.well_conditioned:
            lam, psi = self.spectrum
            p = (psi * np.exp(lam * t)) @ psi.T
            return 0.5 * (p + p.T)
        return scipy.linalg.expm(t * self.Q) / self.m[None, :]

    def transition(self, t: float) -> np.ndarray:
        """Transition probabilities ``exp(tQ)``."""
        return self.kernel_matrix(t) * self.m[None, :]

    def kernel_time_integral(self, t: float) -> np.ndarray:
        """``int_0^t p(s, ., .) ds`` in closed form."""
        lam, psi = self.spectrum
        return (psi * exp_integral(lam, t)) @ psi.T

    def to_json(self) -> dict:
        rows, cols = np.nonzero(self.Q)
        return {"states": list(self.states),
                "Q": [[self.states[i], self.states[j], float(self.Q[i, j])] for i, j in zip(rows, cols)],
                "m": self.m.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteSymmetricChain":
        states = data["states"]
        index = {s: i for i, s in enumerate(states)}
        Q = np.zeros((len(states), len(states)))
        for a, b, v in data["Q"]:
            Q[index[a], index[b]] = v
        return cls(states, Q, data["m"])


@dataclass(frozen=True)
class HeatKernelEvaluation:
    t: float
    p: np.ndarray
    states: tuple

    def __call__(self, x, y) -> float:
        i = self.states.index(x)
        j = self.states.index(y)
        return float(self.p[i, j])


def _check_time(t: float) -> None:
    if not (t > 0 and math.isfinite(t)):
        raise InputError(f"time must be positive and finite, got {t}")


def heat_kernel(chain: FiniteSymmetricChain, t: float) -> HeatKernelEvaluation:
    """``p(t, x, y) = exp(tQ)[x, y] / m(y)``, checked for symmetry and conservativeness."""
    _check_time(t)
    p = chain.kernel_matrix(t)
    scale = max(1.0, float(np.abs(p).max()))
    if np.abs(p - p.T).max() > HK_TOL * scale:
        raise NumericalError("heat kernel lost symmetry")
    if np.abs(p @ chain.m - 1.0).max() > HK_TOL:
        raise NumericalError("heat kernel is not conservative")
    return HeatKernelEvaluation(float(t), p, chain.states)


def chapman_kolmogorov_residual(chain: FiniteSymmetricChain, t: float, s: float) -> float:
    """``max |p(t+s) - p(t) diag(m) p(s)|``."""
    pt, ps, pts = chain.kernel_matrix(t), chain.kernel_matrix(s), chain.kernel_matrix(t + s)
    return float(np.abs(pts - (pt * chain.m[None, :]) @ ps).max())


def _check_alpha(alpha: float) -> None:
    if not (alpha > 0 and math.isfinite(alpha)):
        raise InputError(f"alpha must be positive, got {alpha}")


def resolvent_density(chain: FiniteSymmetricChain, alpha: float) -> np.ndarray:
    """``r^alpha(x, y) = (alpha I - Q)^{-1}[x, y] / m(y)``."""
    _check_alpha(alpha)
    n = len(chain)
    G = np.linalg.solve(alpha * np.eye(n) - chain.Q, np.eye(n))
    return G / chain.m[None, :]


def potential(chain: FiniteSymmetricChain, mu: AtomicMeasure | None, alpha: float) -> np.ndarray:
    """``U^alpha mu(x) = sum_y r^alpha(x, y) mu(y)``."""
    _check_alpha(alpha)
    v = chain.vector(mu)
    if not v.any():
        return np.zeros(len(chain))
    # (alpha - Q) u = v / m solves without forming the full resolvent
    return np.linalg.solve(alpha * np.eye(len(chain)) - chain.Q, v / chain.m)


def _restrict(chain, mu: AtomicMeasure | None, K) -> np.ndarray:
    v = chain.vector(mu)
    if K is None:
        return v
    keep = np.zeros(len(chain), dtype=bool)
    keep[chain.idx(K)] = True
    return np.where(keep, v, 0.0)


def potential_norm(chain, mu_vec: np.ndarray, alpha: float) -> float:
    if not mu_vec.any():
        return 0.0
    u = np.linalg.solve(alpha * np.eye(len(chain)) - chain.Q, mu_vec / chain.m)
    return float(np.abs(u).max())


def kato_bound(chain: FiniteSymmetricChain, mu: AtomicMeasure | None, K, alpha: float) -> float:
    """The discrete Kato bound ``alpha^{-1} sum_{y in K} mu(y) / m(y)``."""
    _check_alpha(alpha)
    return float((_restrict(chain, mu, K) / chain.m).sum() / alpha)


def kato_profile(chain: FiniteSymmetricChain, mu: AtomicMeasure | None, K,
                 alphas: Iterable[float]) -> list[tuple[float, float]]:
    """``[(alpha, ||U^alpha(mu|_K)||_inf), ...]``; ``K=None`` means all states."""
    v = _restrict(chain, mu, K)
    out = []
    for a in alphas:
        _check_alpha(a)
        out.append((float(a), potential_norm(chain, v, a)))
    return out


@dataclass
class SandwichResult:
    lower: float
    mid: float
    upper: float
    record: FalsificationRecord

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lower, self.mid, self.upper)


def heat_mass_integral(chain: FiniteSymmetricChain, mu_vec: np.ndarray, t: float) -> np.ndarray:
    """``x -> int_0^t sum_y p(s, x, y) mu(y) ds`` in eigen-closed form."""
    lam, psi = chain.spectrum
    return psi @ (exp_integral(lam, t) * (psi.T @ mu_vec))


def sandwich_check(chain: FiniteSymmetricChain, mu: AtomicMeasure | None, D, t: float,
                   slack: float = 1e-9) -> SandwichResult:
    """Check ``(1/e) sup_x I(x) <= ||U^{1/t}(mu|_D)|| <= sup_{x in D} I(x) / (1 - 1/e)``.

    Here ``I(x) = int_0^t int_D p(s, x, y) mu(dy) ds``; on a finite space the
    closure of ``D`` is ``D``.  Violations beyond ``slack`` (relative to the
    middle term) are recorded, never raised.
    """
    _check_time(t)
    v = _restrict(chain, mu, D)
    rec = FalsificationRecord("potential-sandwich", details={"t": t})
    if not v.any():
        return SandwichResult(0.0, 0.0, 0.0, rec)
    I = heat_mass_integral(chain, v, t)
    inD = np.zeros(len(chain), dtype=bool)
    inD[chain.idx(chain.states if D is None else D)] = True
    lower = float(I.max()) / math.e
    mid = potential_norm(chain, v, 1.0 / t)
    upper = float(I[inD].max()) / (1.0 - math.exp(-1.0))
    tol = slack * max(1.0, mid)
    if lower > mid + tol:
        rec.violate(side="lower", lower=lower, mid=mid)
    if mid > upper + tol:
        rec.violate(side="upper", mid=mid, upper=upper)
    rec.details.update(lower=lower, mid=mid, upper=upper)
    return SandwichResult(lower, mid, upper, rec)


def volume_heat_bound_check(chain: FiniteSymmetricChain, R: np.ndarray,
                            times: Iterable[float], radii: Iterable[float],
                            tol: float = 1e-10) -> FalsificationRecord:
    """Check ``p(t, x, x) <= 2s/t + sqrt(2) / m(D_R(x, s))`` on a grid.

    ``R`` is the resistance metric of the network the chain comes from (in
    the chain's state order); ``D_R`` is the closed ball.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (len(chain), len(chain)):
        raise InputError("resistance matrix does not match the chain")
    rec = FalsificationRecord("volume-heat-kernel-bound")
    radii = list(radii)
    times = list(times)
    ball_mass = {s: ((R <= s) * chain.m[None, :]).sum(axis=1) for s in radii}
    worst = -math.inf
    for t in times:
        _check_time(t)
        diag = np.diag(chain.kernel_matrix(t))
        for s in radii:
            bound = 2 * s / t + math.sqrt(2) / ball_mass[s]
            gap = diag - bound
            worst = max(worst, float(gap.max()))
            for i in np.flatnonzero(gap > tol * np.maximum(1.0, bound)):
                rec.violate(state=chain.states[i], t=t, s=s, p=float(diag[i]), bound=float(bound[i]))
    rec.details.update(checked=len(times) * len(radii) * len(chain), worst_gap=worst)
    return rec


def write_chain_json(chain: FiniteSymmetricChain, path) -> None:
    with open(path, "w") as fh:
        json.dump(chain.to_json(), fh)


def read_chain_json(path) -> FiniteSymmetricChain:
    with open(path) as fh:
        return FiniteSymmetricChain.from_json(json.load(fh))


def write_kernel_csv(chain: FiniteSymmetricChain, t: float, path) -> None:
    """Dense CSV dump of ``p(t, ., .)`` with state ids as header and first column."""
    p = heat_kernel(chain, t).p
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t=" + repr(float(t))] + list(chain.states))
        for s, row in zip(chain.states, p):
            w.writerow([s] + [f"{v:.17g}" for v in row])
