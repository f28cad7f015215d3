"""Example networks, conditioned Galton-Watson trees, degree measures,
volume profiles, and the threshold function ``trf_beta``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .exceptions import DivergentSeriesError, InputError
from .network import ElectricalNetwork
from .simulate import DEFAULT_SEED, RngStream
from .spaces import AtomicMeasure, FinitePointMetricSpace

# ---------------------------------------------------------------- networks


def path_graph(n_edges: int, conductance: float = 1.0) -> ElectricalNetwork:
    """Vertices ``0..n_edges`` in a line, rooted at 0."""
    return ElectricalNetwork.from_edges([(i, i + 1, conductance) for i in range(n_edges)], root=0)


def cycle_graph(n: int) -> ElectricalNetwork:
    if n < 3:
        raise InputError("a cycle needs at least 3 vertices")
    return ElectricalNetwork.from_edges([(i, (i + 1) % n) for i in range(n)], root=0)


def star_graph(k: int) -> ElectricalNetwork:
    """Center 0 with leaves ``1..k``."""
    return ElectricalNetwork.from_edges([(0, i) for i in range(1, k + 1)], root=0)


def grid_graph(w: int, h: int, periodic: bool = False) -> ElectricalNetwork:
    """``w x h`` grid (torus when ``periodic``), vertices ``(i, j)``, root ``(0, 0)``."""
    edges = set()
    for i in range(w):
        for j in range(h):
            for di, dj in ((1, 0), (0, 1)):
                a, b = i + di, j + dj
                if periodic:
                    a, b = a % w, b % h
                elif a >= w or b >= h:
                    continue
                if (a, b) != (i, j):
                    edges.add(tuple(sorted([(i, j), (a, b)])))
    verts = [(i, j) for i in range(w) for j in range(h)]
    return ElectricalNetwork.from_edges(sorted(edges), root=(0, 0), vertices=verts)


def torus_graph(w: int, h: int) -> ElectricalNetwork:
    if w < 3 or h < 3:
        raise InputError("torus sides must be at least 3")
    return grid_graph(w, h, periodic=True)


def lattice_segment(L: int) -> ElectricalNetwork:
    """Unit path on ``{-L, ..., L}`` rooted at 0."""
    return ElectricalNetwork.from_edges([(i, i + 1) for i in range(-L, L)], root=0,
                                        vertices=list(range(-L, L + 1)))


# ------------------------------------------------------- Galton-Watson laws


@dataclass(frozen=True)
class GWSpec:
    """Critical offspring law.

    ``pmf(k)`` gives ``pi_k``; ``support_max`` is None for infinite support.
    ``draw(rng, shape)`` samples i.i.d. offspring counts.
    """

    name: str
    pmf: Callable[[int], float]
    draw: Callable
    support_max: int | None = None
    variance: float = field(default=math.nan)

    @staticmethod
    def poisson() -> "GWSpec":
        return GWSpec("poisson", lambda k: math.exp(-1.0 - math.lgamma(k + 1)),
                      lambda rng, shape: rng.poisson(1.0, size=shape), None, 1.0)

    @staticmethod
    def geometric() -> "GWSpec":
        """``pi_k = 2^{-(k+1)}``, variance 2."""
        return GWSpec("geometric", lambda k: 2.0 ** -(k + 1),
                      lambda rng, shape: rng.geometric(0.5, size=shape) - 1, None, 2.0)

    @staticmethod
    def binary() -> "GWSpec":
        """``pi_0 = pi_2 = 1/2``, variance 1, period 2."""
        return GWSpec.from_pmf([0.5, 0.0, 0.5], name="binary")

    @staticmethod
    def from_pmf(pmf: Sequence[float], name: str = "finite") -> "GWSpec":
        p = np.asarray(pmf, dtype=float)
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise InputError("offspring law must be a probability vector")
        k = np.arange(len(p))
        if not math.isclose(float(k @ p), 1.0, abs_tol=1e-12):
            raise InputError("offspring law must have mean 1")
        if len(p) > 1 and p[1] >= 1:
            raise InputError("pi_1 must be below 1")
        var = float((k ** 2) @ p - 1.0)
        cum = np.cumsum(p)
        cum[-1] = 1.0
        table = p.copy()
        return GWSpec(name, lambda j: float(table[j]) if 0 <= j < len(table) else 0.0,
                      lambda rng, shape: np.searchsorted(cum, rng.random(shape), side="right"),
                      len(p) - 1, var)

    @cached_property
    def period(self) -> int:
        """gcd of the positive offspring values that have positive probability."""
        top = self.support_max if self.support_max is not None else 60
        vals = [k for k in range(1, top + 1) if self.pmf(k) > 0]
        return reduce(math.gcd, vals, 0) or 1

    def admissible(self, n: int) -> bool:
        """Whether a tree with exactly ``n`` vertices has positive probability."""
        if n < 1:
            return False
        if n == 1:
            return self.pmf(0) > 0
        if self.support_max is None:
            return (n - 1) % self.period == 0
        # n - 1 must be a sum of at most n positive support values
        pos = [k for k in range(1, self.support_max + 1) if self.pmf(k) > 0]
        best = np.full(n, np.inf)
        best[0] = 0
        for s in range(1, n):
            for k in pos:
                if k <= s and best[s - k] + 1 < best[s]:
                    best[s] = best[s - k] + 1
        return best[n - 1] <= n


@dataclass(frozen=True)
class PlaneTree:
    """Rooted plane tree with vertices ``0..n-1`` in depth-first (lexicographic) order.

    ``parents[0] = -1``; ``children[v]`` is the offspring count of ``v``.
    """

    parents: np.ndarray
    children: np.ndarray

    @classmethod
    def from_offspring(cls, offspring: Sequence[int]) -> "PlaneTree":
        """Tree from its depth-first offspring sequence (a Lukasiewicz word)."""
        c = np.asarray(offspring, dtype=int)
        n = len(c)
        s = np.cumsum(c - 1)
        if n == 0 or s[-1] != -1 or (n > 1 and s[:-1].min() < 0):
            raise InputError("not a valid depth-first offspring sequence")
        parents = np.full(n, -1)
        stack: list[list[int]] = []  # [vertex, remaining children]
        for v in range(n):
            if stack:
                parents[v] = stack[-1][0]
                stack[-1][1] -= 1
                if stack[-1][1] == 0:
                    stack.pop()
            if c[v] > 0:
                stack.append([v, int(c[v])])
        return cls(parents, c)

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def degrees(self) -> np.ndarray:
        d = self.children.copy()
        d[1:] += 1
        return d

    def edges(self) -> list[tuple[int, int]]:
        return [(int(p), v) for v, p in enumerate(self.parents) if p >= 0]

    def network(self) -> ElectricalNetwork:
        return ElectricalNetwork.from_edges(self.edges(), root=0, vertices=list(range(self.n)))

    def distances(self) -> np.ndarray:
        """Graph distance matrix (equal to the resistance metric for unit conductances)."""
        n = self.n
        if n == 1:
            return np.zeros((1, 1))
        e = np.array(self.edges())
        A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return shortest_path(A, unweighted=True, directed=False)


def _lukasiewicz_ok(Y: np.ndarray) -> np.ndarray:
    s = np.cumsum(Y - 1, axis=1)
    ok = s[:, -1] == -1
    if Y.shape[1] > 1:
        ok &= s[:, :-1].min(axis=1) >= 0
    return ok


def _rotate(Y: np.ndarray) -> np.ndarray:
    # cycle lemma: start right after the first index of the minimal partial sum
    s = np.cumsum(Y - 1)
    k = int(np.argmin(s))
    return np.roll(Y, -(k + 1))


def sample_conditioned_gw(spec: GWSpec, n: int, seed: int = DEFAULT_SEED, stream: int = 0,
                          batch: int | None = None) -> PlaneTree:
    """GW tree conditioned on exactly ``n`` vertices, deterministic under the seed.

    For ``n <= 50`` whole offspring sequences are drawn until one is a valid
    depth-first code.  Beyond that, sequences are drawn until the total is
    ``n - 1`` and the unique valid cyclic rotation is taken (cycle lemma).
    """
    if not spec.admissible(n):
        raise InputError(f"n={n} is not an admissible size for the {spec.name} law "
                         f"(period {spec.period})")
    if n == 1:
        return PlaneTree(np.array([-1]), np.array([0]))
    rng = RngStream(seed, stream).generator()
    direct = n <= 50
    if batch is None:
        batch = int(min(4096, max(64, 4 * math.sqrt(n) * (n if direct else 1) ** 0.5)))
    while True:
        Y = spec.draw(rng, (batch, n)).astype(np.int64)
        if direct:
            hit = np.flatnonzero(_lukasiewicz_ok(Y))
            if hit.size:
                return PlaneTree.from_offspring(Y[hit[0]])
        else:
            hit = np.flatnonzero(Y.sum(axis=1) == n - 1)
            if hit.size:
                return PlaneTree.from_offspring(_rotate(Y[hit[0]]))


def degree_measures(tree: PlaneTree, q: float = 2.0) -> tuple[AtomicMeasure, AtomicMeasure]:
    """``mu(x) = deg(x)`` and ``mu^q(x) = deg(x)^q``."""
    if not q > 0:
        raise InputError("q must be positive")
    d = tree.degrees.astype(float)
    ids = range(tree.n)
    return AtomicMeasure.from_vector(ids, d), AtomicMeasure.from_vector(ids, d ** q)


def degree_moment_limit(spec: GWSpec, q: float = 2.0, k0: int = 0, tol: float = 1e-15,
                        kmax: int = 100_000) -> float:
    """``sum_{k >= k0} (k + 1)^q pi_k`` with a certified geometric tail bound."""
    if spec.support_max is not None:
        return float(sum((k + 1) ** q * spec.pmf(k) for k in range(k0, spec.support_max + 1)))
    total = 0.0
    prev = None
    for k in range(k0, kmax):
        term = (k + 1) ** q * spec.pmf(k)
        total += term
        if prev is not None and prev > 0:
            r = term / prev
            # successive ratios of these laws decrease, so the tail is geometric
            if r < 1 and term * r / (1 - r) <= tol * max(total, 1e-300):
                return total
        prev = term
    raise DivergentSeriesError(f"series did not converge within {kmax} terms")


def gw_sample_degree_moment(spec: GWSpec, n: int, count: int, q: float = 2.0,
                            seed: int = DEFAULT_SEED) -> np.ndarray:
    """``(1/n) sum_x deg(x)^q`` for ``count`` independent conditioned trees."""
    return np.array([float((sample_conditioned_gw(spec, n, seed, s).degrees ** q).sum()) / n
                     for s in range(count)])


# ------------------------------------------------------------ scaled spaces


@dataclass(frozen=True)
class MetricMeasureSpace:
    space: FinitePointMetricSpace
    measure: AtomicMeasure


def rescaled_space(obj, a: float = 1.0, b: float = 1.0,
                   measure: AtomicMeasure | None = None) -> MetricMeasureSpace:
    """Graph metric divided by ``a`` and measure divided by ``b``.

    ``obj`` is a :class:`PlaneTree` (default measure: degrees) or an
    :class:`ElectricalNetwork` (default measure: counting).
    """
    if not (a > 0 and b > 0):
        raise InputError("scales must be positive")
    if isinstance(obj, PlaneTree):
        D, pts = obj.distances(), tuple(range(obj.n))
        mu = degree_measures(obj, 1.0)[0] if measure is None else measure
        root = 0
    elif isinstance(obj, ElectricalNetwork):
        D, pts, root = obj.graph_distance(), obj.vertices, obj.root
        mu = AtomicMeasure.from_vector(pts, np.ones(len(pts))) if measure is None else measure
    else:
        raise InputError("expected a PlaneTree or an ElectricalNetwork")
    space = FinitePointMetricSpace(pts, D / a, root, validate=False)
    return MetricMeasureSpace(space, mu.scaled(1.0 / b))


def volume_profile(space: FinitePointMetricSpace, measure: AtomicMeasure,
                   radii: Iterable[float]) -> list[tuple[float, float]]:
    """``[(s, min_x measure(D(x, s))), ...]`` over closed balls ``D``."""
    w = measure.vector(space.points)
    out = []
    for s in radii:
        if not s > 0:
            raise InputError("radii must be positive")
        out.append((float(s), float(((space.dist <= s) @ w).min())))
    return out


def fit_volume_exponent(profile, s_min: float = 0.0, s_max: float = math.inf) -> tuple[float, float]:
    """Least-squares ``(C, alpha)`` for ``V(s) ~ C s^alpha`` on a log-log window."""
    pts = [(s, v) for s, v in profile if s_min <= s <= s_max and v > 0]
    if len(pts) < 2:
        raise InputError("need at least two positive profile points in the window")
    x = np.log([s for s, _ in pts])
    y = np.log([v for _, v in pts])
    alpha, logC = np.polyfit(x, y, 1)
    return float(math.exp(logC)), float(alpha)


# ------------------------------------------------------------------- trf


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise InputError("beta must be positive")


def trf(beta: float, t: float) -> float:
    """``1 / (log(1/t) (log log(1/t))^{1+beta})`` on ``(0, 1/e)``."""
    _check_beta(beta)
    if not 0 < t < math.exp(-1):
        raise InputError("t must lie in (0, 1/e)")
    L = math.log(1 / t)
    return 1.0 / (L * math.log(L) ** (1 + beta))


def _loglog_root(beta: float, log_inv_v: float) -> float:
    # u = log log(1/t) solves u + (1 + beta) log u = log(1/v)
    g = lambda u: u + (1 + beta) * math.log(u) - log_inv_v
    lo, hi = 1e-300, max(2.0, abs(log_inv_v) + 2.0)
    while g(hi) < 0:
        hi *= 2
    return scipy.optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def trf_inverse_neglog(beta: float, v: float | None = None, log_inv_v: float | None = None) -> float:
    """``-log trf_beta^{-1}(v)``; pass ``log_inv_v = log(1/v)`` for tiny ``v``."""
    _check_beta(beta)
    if log_inv_v is None:
        if v is None or not v > 0:
            raise InputError("v must be positive")
        log_inv_v = math.log(1 / v)
    return math.exp(_loglog_root(beta, log_inv_v))


def trf_inverse(beta: float, v: float) -> float:
    """The ``t`` in ``(0, 1/e)`` with ``trf_beta(t) = v`` (may underflow to 0)."""
    return math.exp(-trf_inverse_neglog(beta, v))


def trf_asymptotic_ratio(beta: float, t: float | None = None, log10_inv_t: float | None = None) -> float:
    """``-log trf^{-1}(t) * t * (log(1/t))^{1+beta}``, which tends to 1 as ``t -> 0``."""
    if log10_inv_t is None:
        log10_inv_t = -math.log10(t)
    L = log10_inv_t * math.log(10)           # log(1/t)
    _check_beta(beta)
    # log(-log trf^{-1}(t)) is the loglog root; multiply by t (log 1/t)^{1+beta} in log space
    return math.exp(_loglog_root(beta, L) - L + (1 + beta) * math.log(L))


def trf_log_integral(beta: float, delta: float) -> float:
    """``int_0^delta trf_beta(t) / t dt = 1 / (beta (log log(1/delta))^beta)``."""
    trf(beta, delta)
    return 1.0 / (beta * math.log(math.log(1 / delta)) ** beta)


def trf_log_integral_numeric(beta: float, delta: float) -> float:
    """The same integral by quadrature in ``w = log log(1/t)``.

    The substitution turns the integrand into ``w^{-1-beta}`` on
    ``[log log(1/delta), inf)``, whose algebraic tail quadrature handles well.
    """
    trf(beta, delta)
    w0 = math.log(math.log(1 / delta))
    val, _ = scipy.integrate.quad(lambda w: w ** (-1 - beta), w0, np.inf,
                                  epsabs=0, epsrel=1e-12, limit=500)
    return val


def trf_power_integral(beta: float, alpha: float, delta: float) -> float:
    """``int_0^delta trf_beta(t)^{-alpha} dt`` by quadrature in ``s = log(1/t)``."""
    trf(beta, delta)
    a = math.log(1 / delta)
    f = lambda s: math.exp(alpha * math.log(s) + alpha * (1 + beta) * math.log(math.log(s)) - s)
    val, _ = scipy.integrate.quad(f, a, np.inf, epsabs=0, epsrel=1e-10, limit=500)
    return val
