"""Electrical networks: effective resistance, resistance metrics and random walks."""

from __future__ import annotations

import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .exceptions import DisconnectedNetworkError, InputError, NumericalError
from .markov import FiniteSymmetricChain
from .spaces import AtomicMeasure, FinitePointMetricSpace, check_metric_matrix


class ElectricalNetwork:
    """Connected simple graph with symmetric positive conductances.

    Parameters
    ----------
    vertices : ordered vertex ids
    conductance : symmetric (n, n) array or sparse matrix; zero means no edge
    root : a vertex id (defaults to the first vertex)
    """

    def __init__(self, vertices: Sequence, conductance, root=None):
        self.vertices = tuple(vertices)
        n = len(self.vertices)
        if n < 2:
            raise InputError("a network needs at least two vertices")
        if len(set(self.vertices)) != n:
            raise InputError("duplicate vertex ids")
        C = sp.csr_matrix(conductance, dtype=float)
        if C.shape != (n, n):
            raise InputError("conductance matrix does not match the vertex list")
        if C.nnz and C.data.min() < 0:
            raise InputError("conductances must be nonnegative")
        if C.diagonal().any():
            raise InputError("self-loops are not allowed")
        if abs(C - C.T).max() > 0:
            raise InputError("conductances must be symmetric")
        C.eliminate_zeros()
        ncomp, _ = connected_components(C, directed=False)
        if ncomp != 1:
            raise DisconnectedNetworkError(f"network has {ncomp} connected components")
        self.conductance = C
        self.root = self.vertices[0] if root is None else root
        if self.root not in self.index:
            raise InputError(f"root {self.root!r} is not a vertex")

    @classmethod
    def from_edges(cls, edges: Iterable, root=None, vertices: Sequence | None = None):
        """Build from ``(u, v)`` or ``(u, v, conductance)`` records (unit default)."""
        edges = [tuple(e) for e in edges]
        if vertices is None:
            seen: dict = {}
            for e in edges:
                seen.setdefault(e[0], None)
                seen.setdefault(e[1], None)
            vertices = list(seen)
        index = {v: i for i, v in enumerate(vertices)}
        rows, cols, vals = [], [], []
        for e in edges:
            u, v = e[0], e[1]
            c = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise InputError(f"self-loop at {u!r}")
            rows += [index[u], index[v]]
            cols += [index[v], index[u]]
            vals += [c, c]
        n = len(vertices)
        C = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        return cls(vertices, C, root)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def idx(self, vs: Iterable) -> np.ndarray:
        try:
            return np.fromiter((self.index[v] for v in vs), dtype=int)
        except KeyError as exc:
            raise InputError(f"{exc.args[0]!r} is not a vertex") from None

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> list[tuple]:
        C = sp.triu(self.conductance).tocoo()
        return [(self.vertices[i], self.vertices[j], float(c)) for i, j, c in zip(C.row, C.col, C.data)]

    @cached_property
    def weights(self) -> np.ndarray:
        """Conductance measure ``mu(x) = sum_y mu(x, y)``."""
        return np.asarray(self.conductance.sum(axis=1)).ravel()

    @cached_property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.weights) - self.conductance.toarray()

    @cached_property
    def _grounded_factor(self):
        # Cholesky factor of the Laplacian with the root row/column removed
        keep = np.arange(len(self)) != self.index[self.root]
        return keep, scipy.linalg.cho_factor(self.laplacian[np.ix_(keep, keep)])

    @cached_property
    def green_grounded(self) -> np.ndarray:
        """Green function killed at the root, padded with a zero row/column there."""
        keep, fac = self._grounded_factor
        n = len(self)
        G = np.zeros((n, n))
        G[np.ix_(keep, keep)] = scipy.linalg.cho_solve(fac, np.eye(n - 1))
        return 0.5 * (G + G.T)

    def graph_distance(self) -> np.ndarray:
        """Hop-count distance matrix."""
        return shortest_path(self.conductance, unweighted=True, directed=False)

    def to_edge_list(self) -> str:
        lines = [f"root {self.root}"]
        lines += [f"{u} {v} {c!r}" for u, v, c in self.edges]
        return "\n".join(lines) + "\n"


def effective_resistance(net: ElectricalNetwork, x, y) -> float:
    """``R(x, y) = (e_x - e_y)^T L^+ (e_x - e_y)`` via the root-grounded solve."""
    i, j = net.idx([x, y])
    if i == j:
        return 0.0
    keep, fac = net._grounded_factor
    b = np.zeros(len(net))
    b[i] += 1.0
    b[j] -= 1.0
    u = np.zeros(len(net))
    u[keep] = scipy.linalg.cho_solve(fac, b[keep])
    return float(u[i] - u[j])


def resistance_between_sets(net: ElectricalNetwork, A: Iterable, B: Iterable) -> float:
    """``1 / inf{E(f, f) : f = 1 on A, f = 0 on B}`` via the harmonic extension."""
    ia, ib = np.unique(net.idx(A)), np.unique(net.idx(B))
    if len(ia) == 0 or len(ib) == 0:
        raise InputError("both sets must be nonempty")
    if np.intersect1d(ia, ib).size:
        raise InputError("the sets must be disjoint")
    L = net.laplacian
    f = np.zeros(len(net))
    f[ia] = 1.0
    inner = np.setdiff1d(np.arange(len(net)), np.concatenate((ia, ib)))
    if inner.size:
        f[inner] = np.linalg.solve(L[np.ix_(inner, inner)], -L[np.ix_(inner, ia)].sum(axis=1))
    energy = float(f @ L @ f)
    if energy <= 0:
        raise NumericalError("nonpositive Dirichlet energy")
    return 1.0 / energy


def resistance_metric_matrix(net: ElectricalNetwork, check: bool = True) -> np.ndarray:
    """All pairwise effective resistances, validated as a metric."""
    G = net.green_grounded
    d = np.diag(G)
    R = d[:, None] + d[None, :] - 2 * G
    np.fill_diagonal(R, 0.0)
    R = np.maximum(0.5 * (R + R.T), 0.0)
    if check:
        try:
            check_metric_matrix(R)
        except InputError as exc:
            raise NumericalError(f"resistance matrix is not a metric: {exc}") from None
    return R


def resistance_space(net: ElectricalNetwork) -> FinitePointMetricSpace:
    return FinitePointMetricSpace(net.vertices, resistance_metric_matrix(net), net.root, validate=False)


def recurrence_profile(net: ElectricalNetwork, radii: Iterable[float],
                       ball_metric: str = "resistance") -> list[tuple[float, float]]:
    """``[(r, R(root, B(root, r)^c)), ...]`` with open balls ``B``.

    ``ball_metric`` selects the metric defining the balls: ``"resistance"``
    (the default) or ``"graph"`` (hop count).  An empty complement gives
    ``inf``.
    """
    if ball_metric == "resistance":
        G = net.green_grounded
        dist = np.diag(G)  # R(root, x) = G[x, x] when grounded at the root
    elif ball_metric == "graph":
        dist = net.graph_distance()[net.index[net.root]]
    else:
        raise InputError(f"unknown ball metric {ball_metric!r}")
    out = []
    for r in radii:
        if not r > 0:
            raise InputError("radii must be positive")
        outside = [net.vertices[i] for i in np.flatnonzero(dist >= r)]
        val = math.inf if not outside else resistance_between_sets(net, [net.root], outside)
        out.append((float(r), val))
    return out


def walk_generator(net: ElectricalNetwork, kind: str = "VSRW",
                   metric_scale: float = 1.0, measure_scale: float = 1.0) -> FiniteSymmetricChain:
    """Variable- or constant-speed random walk on the network.

    The walk with rates ``mu(x, y) / m(x)`` has ``m`` = counting measure
    (VSRW) or the conductance measure (CSRW).  With scales ``a`` (metric) and
    ``b`` (measure) the walk associated with resistance ``R / a`` and
    reference measure ``m / b`` is returned: rates ``a b mu(x, y) / m(x)``.
    """
    kind = kind.upper()
    if kind == "VSRW":
        m = np.ones(len(net))
    elif kind == "CSRW":
        m = net.weights.copy()
    else:
        raise InputError(f"unknown walk kind {kind!r}")
    if not (metric_scale > 0 and measure_scale > 0):
        raise InputError("scales must be positive")
    C = net.conductance.toarray()
    Q = (metric_scale * measure_scale) * C / m[:, None]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return FiniteSymmetricChain(net.vertices, Q, m / measure_scale)


def conductance_measure(net: ElectricalNetwork) -> AtomicMeasure:
    return AtomicMeasure.from_vector(net.vertices, net.weights)


def _parse_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_edge_list(text: str) -> ElectricalNetwork:
    """Parse ``u v conductance`` lines; ``# ...`` comments; ``root <id>`` header."""
    root, edges = None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "root":
            if len(toks) != 2:
                raise InputError(f"line {lineno}: expected 'root <id>'")
            root = _parse_id(toks[1])
            continue
        if len(toks) not in (2, 3):
            raise InputError(f"line {lineno}: expected 'u v [conductance]'")
        try:
            c = float(toks[2]) if len(toks) == 3 else 1.0
        except ValueError:
            raise InputError(f"line {lineno}: bad conductance {toks[2]!r}") from None
        edges.append((_parse_id(toks[0]), _parse_id(toks[1]), c))
    if not edges:
        raise InputError("edge list is empty")
    return ElectricalNetwork.from_edges(edges, root=root)


def read_edge_list(path) -> ElectricalNetwork:
    with open(path) as fh:
        return parse_edge_list(fh.read())
