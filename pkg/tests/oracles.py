"""Reference computations used by the tests.

Each oracle takes a different route from the library code it checks: matrix
exponentials or ODE integration instead of eigendecompositions, subset
enumeration instead of max-flow, fine grids instead of breakpoint sums.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.integrate
import scipy.linalg

from stomlab.network import ElectricalNetwork


# ------------------------------------------------------------- random inputs


def random_network(rng: np.random.Generator, n: int, extra: float = 0.3) -> ElectricalNetwork:
    """Connected network: a random spanning tree plus random extra edges."""
    order = rng.permutation(n)
    edges = {}
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges[(min(a, b), max(a, b))] = float(rng.uniform(0.2, 3.0))
    for _ in range(int(extra * n)):
        a, b = rng.choice(n, 2, replace=False)
        edges.setdefault((int(min(a, b)), int(max(a, b))), float(rng.uniform(0.2, 3.0)))
    return ElectricalNetwork.from_edges([(a, b, c) for (a, b), c in edges.items()], root=0,
                                        vertices=list(range(n)))


def random_metric(rng: np.random.Generator, n: int, dim: int = 2) -> np.ndarray:
    pts = rng.uniform(0, 2, size=(n, dim))
    return np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)


# ------------------------------------------------------------------- markov


def expm_kernel(Q: np.ndarray, m: np.ndarray, t: float) -> np.ndarray:
    """``p(t, x, y) = exp(tQ)[x, y] / m(y)`` through scipy's Pade expm."""
    return scipy.linalg.expm(t * Q) / m[None, :]


def laplace_resolvent(Q: np.ndarray, m: np.ndarray, alpha: float) -> np.ndarray:
    """``int_0^inf e^{-alpha t} p(t) dt`` by adaptive vector quadrature."""
    f = lambda t: math.exp(-alpha * t) * expm_kernel(Q, m, t)
    head, _ = scipy.integrate.quad_vec(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11)
    tail, _ = scipy.integrate.quad_vec(f, 1.0, np.inf, epsabs=1e-13, epsrel=1e-11)
    return head + tail


def moment_ode(Q: np.ndarray, dens: np.ndarray, T: float, k: int, x0: int) -> float:
    """``E_x0[(int_0^T f(X_s) ds)^k]`` from the Feynman-Kac moment ODEs.

    ``u_j(t, x) = E_x[A_t^j]`` solves ``u_j' = Q u_j + j f u_{j-1}`` with
    ``u_0 = 1`` and ``u_j(0) = 0``; integrated with an explicit Runge-Kutta
    method at tight tolerance.
    """
    n = len(Q)

    def rhs(_, y):
        u = y.reshape(k, n)
        out = np.empty_like(u)
        prev = np.ones(n)
        for j in range(k):
            out[j] = Q @ u[j] + (j + 1) * dens * prev
            prev = u[j]
        return out.ravel()

    sol = scipy.integrate.solve_ivp(rhs, (0.0, T), np.zeros(k * n), method="DOP853",
                                    rtol=1e-12, atol=1e-14)
    return float(sol.y[:, -1].reshape(k, n)[k - 1, x0])


# ----------------------------------------------------------------- measures


def prohorov_subsets(a, b, cross) -> float:
    """Prohorov distance by enumerating every subset of both supports.

    For a fixed set ``A`` the admissible ``eps`` form an up-set, so the
    distance is the largest of the per-set thresholds.  On the interval
    where ``nu(A^eps)`` is constant the threshold is explicit.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    cross = np.asarray(cross, float).reshape(len(a), len(b))

    def one_side(wa, wb, C):
        levels = np.unique(np.concatenate(([0.0], C.ravel())))
        worst = 0.0
        for r in range(1, len(wa) + 1):
            for A in itertools.combinations(range(len(wa)), r):
                mA = wa[list(A)].sum()
                dmin = C[list(A)].min(axis=0) if len(wb) else np.zeros(0)
                best = math.inf
                for k, lev in enumerate(levels):
                    nxt = levels[k + 1] if k + 1 < len(levels) else math.inf
                    cover = wb[dmin <= lev].sum() if len(wb) else 0.0
                    eps = max(lev, mA - cover)
                    if eps < nxt or nxt == math.inf:
                        best = eps
                        break
                worst = max(worst, best)
        return worst

    return max(one_side(a, b, cross), one_side(b, a, cross.T))


# -------------------------------------------------------------------- paths


def path_values(path, space, grid: np.ndarray) -> np.ndarray:
    """Indices of ``path(t)`` on a time grid."""
    k = np.searchsorted(path.jump_times, grid, side="right")
    visited = space.indices(path.visited)
    return visited[k]


def l0_riemann(xi, eta, space, step: float = 1e-6, upto: float | None = None) -> float:
    """Midpoint rule on ``[0, upto]`` plus the exact tail after the last jump."""
    last = max([0.0] + list(xi.jump_times) + list(eta.jump_times))
    upto = last + step if upto is None else upto
    total = 0.0
    for lo in np.arange(0.0, upto, 1e6 * step):
        hi = min(upto, lo + 1e6 * step)
        t = np.arange(lo + step / 2, hi, step)
        d = space.dist[path_values(xi, space, t), path_values(eta, space, t)]
        total += float(np.sum(np.exp(-t) * np.minimum(1.0, d)) * step)
    d_end = space.dist[path_values(xi, space, np.array([upto]))[0],
                       path_values(eta, space, np.array([upto]))[0]]
    return total + math.exp(-upto) * min(1.0, d_end)


def j1_single_jump_grid(a: float, b: float, jump_dist: float, t: float, h: float = 1e-3) -> float:
    """``d^{J1,t}`` for two paths that each make the same jump once.

    Piecewise linear time changes with a single knot ``lam(p) = q`` are
    searched over a grid of step ``h``.  Away from the jumps both paths agree,
    so the path mismatch is ``jump_dist`` on the set where ``eta`` and
    ``xi o lam`` sit on different sides of their jumps.
    """
    if a > t and b > t:
        return 0.0
    if a > t or b > t:
        # only one path has jumped by time t, and lam fixes t
        return jump_dist
    grid = np.arange(h, t - h / 2, h)
    best = jump_dist  # identity: mismatch on [min(a, b), max(a, b))
    for p in grid:
        q = grid
        # preimage of a under lam, linear on [0, p] and [p, t]
        pre_a = np.where(a <= q, a * p / q, p + (a - q) * (t - p) / (t - q))
        mism = np.abs(pre_a - b) > h / 4
        best = min(best, float(np.min(np.maximum(np.abs(p - q), np.where(mism, jump_dist, 0.0)))))
    return best


def upc_grid(phi1, phi2, step: float = 1e-4, nmax: int = 60) -> float:
    H = max(phi1.horizon, phi2.horizon)
    grid = np.arange(0.0, math.ceil(H) + step, step)
    diff = np.abs(phi1(grid) - phi2(grid))
    running = np.maximum.accumulate(diff)
    total = 0.0
    for n in range(1, nmax + 1):
        sup_n = running[min(len(grid) - 1, int(round(n / step)))]
        total += 2.0 ** -n * min(1.0, sup_n)
    return total


def radial_midpoint(integrand, upto: float, step: float) -> float:
    """``int_0^upto e^{-r} integrand(r) dr + e^{-upto} integrand(upto)``."""
    r = np.arange(step / 2, upto, step)
    vals = np.array([integrand(x) for x in r])
    return float(np.sum(np.exp(-r) * vals) * step + math.exp(-upto) * integrand(upto))


# ---------------------------------------------------------------------- GW


def lukasiewicz_words(pmf, n: int):
    """All depth-first offspring words of ``n``-vertex trees with their probabilities."""
    support = [k for k, p in enumerate(pmf) if p > 0]
    out = {}
    for word in itertools.product(support, repeat=n):
        s = np.cumsum(np.array(word) - 1)
        if s[-1] == -1 and (n == 1 or s[:-1].min() >= 0):
            out[word] = math.prod(pmf[c] for c in word)
    Z = sum(out.values())
    return {w: p / Z for w, p in out.items()}
