"""Finite rooted metric spaces, atomic measures, step paths and monotone paths.

These are the concrete stand-ins for the continuum objects: every space is a
finite point set with a distance matrix, every measure is a finite list of
atoms, and every trajectory is piecewise constant (or piecewise linear for
additive functionals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .exceptions import InputError

Point = Hashable

#: metric-axiom tolerance (absolute, scaled by the diameter)
METRIC_TOL = 1e-9
#: the O(n^3) triangle check is skipped above this size unless forced
TRIANGLE_CHECK_MAX = 400


def check_metric_matrix(dist: np.ndarray, tol: float = METRIC_TOL,
                        triangle: bool | None = None) -> None:
    """Raise :class:`InputError` unless ``dist`` is a (pseudo)metric matrix."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.ndim != 2 or dist.shape != (n, n):
        raise InputError("distance matrix must be square")
    if not np.all(np.isfinite(dist)):
        raise InputError("distance matrix has non-finite entries")
    scale = tol * max(1.0, float(dist.max(initial=0.0)))
    if np.any(dist < -scale):
        raise InputError("negative distance")
    if np.any(np.abs(np.diag(dist)) > scale):
        raise InputError("nonzero self-distance")
    if np.any(np.abs(dist - dist.T) > scale):
        raise InputError("distance matrix is not symmetric")
    if triangle is None:
        triangle = n <= TRIANGLE_CHECK_MAX
    if triangle:
        for k in range(n):
            # d(i,j) <= d(i,k) + d(k,j) for all i, j
            if np.any(dist > dist[:, k, None] + dist[None, k, :] + scale):
                raise InputError("triangle inequality violated")


@dataclass(frozen=True, eq=False)
class FinitePointMetricSpace:
    """A rooted finite metric space.

    Parameters
    ----------
    points : sequence of hashable ids
    dist : (n, n) array of distances, indexed like ``points``
    root : one of ``points``
    """

    points: tuple
    dist: np.ndarray
    root: Point
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        d = np.array(self.dist, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if len(set(pts)) != len(pts):
            raise InputError("duplicate point ids")
        if d.shape != (len(pts), len(pts)):
            raise InputError("distance matrix shape does not match points")
        if self.root not in self.index:
            raise InputError(f"root {self.root!r} is not a point of the space")
        if self.validate:
            check_metric_matrix(d)

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    def __len__(self) -> int:
        return len(self.points)

    @property
    def root_index(self) -> int:
        return self.index[self.root]

    @cached_property
    def root_distance(self) -> np.ndarray:
        return self.dist[self.root_index]

    def indices(self, pts: Iterable[Point]) -> np.ndarray:
        try:
            return np.fromiter((self.index[p] for p in pts), dtype=int)
        except KeyError as exc:
            raise InputError(f"point {exc.args[0]!r} is not in the space") from None

    def distance(self, x: Point, y: Point) -> float:
        return float(self.dist[self.index[x], self.index[y]])

    @property
    def diameter(self) -> float:
        return float(self.dist.max(initial=0.0))

    def scaled(self, factor: float) -> "FinitePointMetricSpace":
        """Same points with every distance multiplied by ``factor``."""
        return FinitePointMetricSpace(self.points, self.dist * factor, self.root,
                                      validate=False)

    def relabeled(self, mapping: Mapping) -> "FinitePointMetricSpace":
        return FinitePointMetricSpace(tuple(mapping[p] for p in self.points),
                                      self.dist, mapping[self.root], validate=False)

    @classmethod
    def from_coordinates(cls, coords, points=None, root=None) -> "FinitePointMetricSpace":
        """Euclidean point cloud (1-d input is treated as points on a line)."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
        pts = tuple(range(len(x))) if points is None else tuple(points)
        return cls(pts, d, pts[0] if root is None else root, validate=False)


class AtomicMeasure:
    """Finite measure given by atoms ``(point, mass)``.

    Repeated points are merged; zero-mass atoms are kept out.  The measure is
    not tied to a space object; operations that need distances take the space
    as an argument and check membership there.
    """

    __slots__ = ("points", "masses")

    def __init__(self, atoms: Iterable[tuple[Point, float]] | Mapping = ()):
        if isinstance(atoms, Mapping):
            atoms = atoms.items()
        merged: dict = {}
        for p, w in atoms:
            w = float(w)
            if not w >= 0 or not math.isfinite(w):
                raise InputError(f"mass at {p!r} must be finite and nonnegative, got {w}")
            merged[p] = merged.get(p, 0.0) + w
        pts = tuple(p for p, w in merged.items() if w > 0)
        self.points = pts
        self.masses = np.array([merged[p] for p in pts], dtype=float)
        self.masses.setflags(write=False)

    @classmethod
    def from_vector(cls, points: Sequence[Point], masses) -> "AtomicMeasure":
        return cls(zip(points, np.asarray(masses, dtype=float)))

    def as_dict(self) -> dict:
        return dict(zip(self.points, self.masses.tolist()))

    def vector(self, points: Sequence[Point]) -> np.ndarray:
        """Masses laid out along ``points``; atoms outside ``points`` raise."""
        index = {p: i for i, p in enumerate(points)}
        out = np.zeros(len(points))
        for p, w in zip(self.points, self.masses):
            if p not in index:
                raise InputError(f"atom {p!r} is not a point of the carrier space")
            out[index[p]] += w
        return out

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"AtomicMeasure({self.as_dict()!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def restrict(self, keep) -> "AtomicMeasure":
        """Restriction to the points for which ``keep(point)`` is true."""
        return AtomicMeasure((p, w) for p, w in zip(self.points, self.masses) if keep(p))

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure((p, w * factor) for p, w in zip(self.points, self.masses))

    def map_points(self, mapping) -> "AtomicMeasure":
        return AtomicMeasure((mapping[p], w) for p, w in zip(self.points, self.masses))

    def check_on(self, space: FinitePointMetricSpace) -> None:
        for p in self.points:
            if p not in space.index:
                raise InputError(f"atom {p!r} is not a point of the space")


@dataclass(frozen=True, eq=False)
class CadlagStepPath:
    """Right-continuous piecewise constant trajectory on ``[0, horizon]``.

    ``jump_times[i]`` is the time at which the path moves to ``states[i]``.
    Beyond the horizon the path is read as constant.
    """

    initial: Point
    jump_times: np.ndarray
    states: tuple
    horizon: float

    def __post_init__(self):
        times = np.array(self.jump_times, dtype=float).reshape(-1)
        states = tuple(self.states)
        if len(times) != len(states):
            raise InputError("jump_times and states differ in length")
        if not self.horizon > 0:
            raise InputError("horizon must be positive")
        if len(times) and (times[0] <= 0 or times[-1] > self.horizon):
            raise InputError("jump times must lie in (0, horizon]")
        if np.any(np.diff(times) <= 0):
            raise InputError("jump times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "states", states)

    @classmethod
    def constant(cls, state: Point, horizon: float) -> "CadlagStepPath":
        return cls(state, (), (), horizon)

    @cached_property
    def visited(self) -> tuple:
        """State on each constancy interval, starting with the initial state."""
        return (self.initial,) + self.states

    def value_at(self, t: float) -> Point:
        k = int(np.searchsorted(self.jump_times, t, side="right"))
        return self.visited[k]

    def intervals(self, horizon: float | None = None):
        """Constancy intervals ``(state, start, end)`` partitioning ``[0, horizon]``."""
        T = self.horizon if horizon is None else horizon
        edges = np.concatenate(([0.0], self.jump_times[self.jump_times < T], [T]))
        return [(self.visited[i], float(edges[i]), float(edges[i + 1]))
                for i in range(len(edges) - 1) if edges[i + 1] > edges[i]]

    def occupation(self, state: Point, horizon: float | None = None) -> float:
        return sum(e - s for x, s, e in self.intervals(horizon) if x == state)


@dataclass(frozen=True, eq=False)
class MonotonePath:
    """Nondecreasing piecewise linear function through ``(times, values)``.

    Starts at ``(0, 0)`` and is constant after the last breakpoint.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if len(t) != len(v) or len(t) == 0:
            raise InputError("times and values must be nonempty and equal length")
        if t[0] != 0 or v[0] != 0:
            raise InputError("a monotone path starts at (0, 0)")
        if np.any(np.diff(t) <= 0):
            raise InputError("breakpoint times must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise InputError("values must be nondecreasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def linear(cls, slope: float, until: float) -> "MonotonePath":
        return cls([0.0, until], [0.0, slope * until])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


# a space-time atom is an interval atom (density on [start, end)) or a time
# atom (point mass at time start) when end is None
@dataclass(frozen=True)
class SpaceTimeAtom:
    site: Point
    start: float
    end: float | None
    value: float

    @property
    def is_time_atom(self) -> bool:
        return self.end is None

    @property
    def mass(self) -> float:
        return self.value if self.end is None else self.value * (self.end - self.start)


class SpaceTimeAtomicMeasure:
    """Measure on ``S x [0, horizon]`` built from interval and time atoms.

    Interval atoms carry a density in time on ``[start, end)``; time atoms
    carry a point mass at ``(site, start)``.
    """

    def __init__(self, atoms: Iterable, horizon: float, kind: str = "stom",
                 meta: Mapping | None = None):
        if not horizon > 0:
            raise InputError("horizon must be positive")
        clean = []
        for a in atoms:
            if not isinstance(a, SpaceTimeAtom):
                a = SpaceTimeAtom(*a)
            if a.value < 0 or not math.isfinite(a.value):
                raise InputError("atom values must be finite and nonnegative")
            if a.start < 0 or a.start > horizon:
                raise InputError("atom time outside [0, horizon]")
            if a.end is not None and (a.end < a.start or a.end > horizon):
                raise InputError("interval atom must satisfy start <= end <= horizon")
            if a.value == 0 or (a.end is not None and a.end == a.start):
                continue
            clean.append(a)
        self.atoms = tuple(clean)
        self.horizon = float(horizon)
        self.kind = kind
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def sites(self) -> set:
        return {a.site for a in self.atoms}

    def mass(self, sites=None, t0: float = 0.0, t1: float | None = None) -> float:
        """Mass of ``sites x [t0, t1]`` (all sites when ``sites`` is None)."""
        t1 = self.horizon if t1 is None else t1
        keep = None if sites is None else set(sites)
        total = 0.0
        for a in self.atoms:
            if keep is not None and a.site not in keep:
                continue
            if a.end is None:
                if t0 <= a.start <= t1:
                    total += a.value
            else:
                lo, hi = max(a.start, t0), min(a.end, t1)
                if hi > lo:
                    total += a.value * (hi - lo)
        return total

    def time_marginal(self, t) -> np.ndarray:
        """``t -> Sigma(S x [0, t])`` evaluated on an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([self.mass(None, 0.0, float(s)) for s in t])

    def restrict_time(self, t: float) -> "SpaceTimeAtomicMeasure":
        """Restriction to ``S x [0, t]``; the horizon is kept."""
        out = []
        for a in self.atoms:
            if a.start > t:
                continue
            if a.end is None:
                out.append(a)
            else:
                out.append(SpaceTimeAtom(a.site, a.start, min(a.end, t), a.value))
        return SpaceTimeAtomicMeasure(out, self.horizon, self.kind, self.meta)

    def scale_sites(self, weight: Mapping) -> "SpaceTimeAtomicMeasure":
        """Multiply every atom at site ``x`` by ``weight[x]``."""
        return SpaceTimeAtomicMeasure(
            [SpaceTimeAtom(a.site, a.start, a.end, a.value * weight[a.site]) for a in self.atoms],
            self.horizon, self.kind, self.meta)

    def breakpoints(self) -> np.ndarray:
        pts = {0.0, self.horizon}
        for a in self.atoms:
            pts.add(a.start)
            if a.end is not None:
                pts.add(a.end)
        return np.array(sorted(pts))

    def discretize(self, cell: float, upto: float | None = None):
        """Lump interval atoms into point masses at cell midpoints.

        Cells are aligned to the grid ``k * cell`` intersected with each atom's
        interval, so two measures discretized with the same ``cell`` share
        support points.  Returns ``(sites, times, masses)``.
        """
        upto = self.horizon if upto is None else upto
        sites, times, masses = [], [], []
        for a in self.atoms:
            if a.end is None:
                if a.start <= upto:
                    sites.append(a.site)
                    times.append(a.start)
                    masses.append(a.value)
                continue
            lo, hi = a.start, min(a.end, upto)
            if hi <= lo:
                continue
            k0, k1 = int(math.floor(lo / cell)), int(math.ceil(hi / cell))
            for k in range(k0, k1):
                c0, c1 = max(lo, k * cell), min(hi, (k + 1) * cell)
                if c1 > c0:
                    sites.append(a.site)
                    times.append(0.5 * (c0 + c1))
                    masses.append(a.value * (c1 - c0))
        return sites, np.array(times, dtype=float), np.array(masses, dtype=float)

    def __repr__(self) -> str:
        return (f"SpaceTimeAtomicMeasure(kind={self.kind!r}, atoms={len(self.atoms)}, "
                f"horizon={self.horizon})")
