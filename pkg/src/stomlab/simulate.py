"""Exact-event (Gillespie) path sampling and Monte Carlo estimation.

Replicates are simulated in lockstep: every iteration draws one holding time
and one jump for each replicate that has not yet reached the horizon, so the
Python loop runs over jumps of a single path rather than over replicates.
Functionals that only need occupation times are accumulated on the fly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import InputError
from .markov import FiniteSymmetricChain
from .spaces import CadlagStepPath

DEFAULT_SEED = 20261015


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream, counter)``.

    Distinct keys give statistically independent Philox substreams.
    """

    seed: int = DEFAULT_SEED
    stream: int = 0
    counter: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, self.counter))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, counter: int) -> "RngStream":
        return RngStream(self.seed, self.stream, counter)

    def key(self) -> dict:
        return {"seed": self.seed, "stream": self.stream, "counter": self.counter}


@dataclass
class MonteCarloEstimate:
    """Sample mean with its standard error ``std / sqrt(count)``."""

    mean: float
    se: float
    count: int
    seeds: list = field(default_factory=list)

    @classmethod
    def from_samples(cls, samples, seeds=()) -> "MonteCarloEstimate":
        x = np.asarray(samples, dtype=float).ravel()
        if len(x) < 2:
            raise InputError("at least two replicates are needed")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))), len(x), list(seeds))

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return (self.mean - z * self.se, self.mean + z * self.se)

    def agrees_with(self, value: float, z: float = 3.0, atol: float = 1e-12) -> bool:
        return abs(self.mean - value) <= z * self.se + atol

    def to_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se, "count": self.count, "seeds": self.seeds}


def _jump_tables(chain: FiniteSymmetricChain):
    rates = chain.rates.copy()
    P = np.where(rates[:, None] > 0, chain.Q / np.where(rates > 0, rates, 1.0)[:, None], 0.0)
    np.fill_diagonal(P, 0.0)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    return rates, cum


def _choose(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # first column whose cumulative probability exceeds u (zero-probability
    # columns share the previous cumulative value and are never picked)
    return (cum_rows <= u[:, None]).sum(axis=1)


def _window_overlap(a, b, t0, t1):
    return np.clip(np.minimum(b, t1) - np.maximum(a, t0), 0.0, None)


def _discounted(a, b, alpha):
    if alpha == 0:
        return b - a
    return (np.exp(-alpha * a) - np.exp(-alpha * b)) / alpha


@dataclass
class BatchResult:
    """Per-replicate summaries from a lockstep simulation."""

    occupation: np.ndarray          # (replicates, states) time in the window
    jumps: np.ndarray               # number of jumps before the horizon
    sup_abs: np.ndarray | None = None
    events: list | None = None      # (replicate, time, new state index) if recorded


def simulate_batch(chain: FiniteSymmetricChain, start, T: float, replicates: int,
                   stream: RngStream, window: tuple[float, float] | None = None,
                   discount: float = 0.0, drift=None, record: bool = False) -> BatchResult:
    """Run ``replicates`` independent paths of ``chain`` from ``start`` on ``[0, T]``.

    ``occupation[r, x]`` is the (``e^{-discount t}``-weighted) time path ``r``
    spends at ``x`` inside ``window``.  With ``drift`` (a per-state vector
    ``g``), ``sup_abs[r] = sup_{t <= T} |int_0^t g(X_s) ds|`` is tracked too.
    """
    if not T > 0:
        raise InputError("horizon must be positive")
    t0, t1 = (0.0, T) if window is None else window
    rng = stream.generator()
    rates, cum = _jump_tables(chain)
    S = len(chain)
    state = np.full(replicates, chain.index[start], dtype=int)
    now = np.zeros(replicates)
    occ = np.zeros((replicates, S))
    jumps = np.zeros(replicates, dtype=int)
    g = None if drift is None else np.asarray(drift, dtype=float)
    cur = np.zeros(replicates) if g is not None else None
    sup_abs = np.zeros(replicates) if g is not None else None
    events = [] if record else None
    active = np.arange(replicates)
    while active.size:
        s = state[active]
        r = rates[s]
        with np.errstate(divide="ignore"):
            hold = rng.exponential(1.0, size=active.size) / r
        a = now[active]
        b = np.minimum(a + hold, T)
        if discount:
            w = _discounted(np.maximum(a, t0), np.maximum(np.minimum(b, t1), np.maximum(a, t0)), discount)
        else:
            w = _window_overlap(a, b, t0, t1)
        np.add.at(occ, (active, s), w)
        if g is not None:
            cur[active] += g[s] * (b - a)
            sup_abs[active] = np.maximum(sup_abs[active], np.abs(cur[active]))
        moved = a + hold < T
        mv = active[moved]
        u = rng.random(mv.size)
        nxt = _choose(cum[state[mv]], u)
        state[mv] = nxt
        now[mv] = b[moved]
        jumps[mv] += 1
        if record:
            events.append((mv, b[moved], nxt))
        active = mv
    return BatchResult(occ, jumps, sup_abs, events)


def _paths_from_events(chain, start, T, replicates, events) -> list[CadlagStepPath]:
    per = [([], []) for _ in range(replicates)]
    for reps, times, nxt in events:
        for r, t, x in zip(reps.tolist(), times.tolist(), nxt.tolist()):
            per[r][0].append(t)
            per[r][1].append(chain.states[x])
    return [CadlagStepPath(start, ts, xs, T) for ts, xs in per]


def sample_paths(chain: FiniteSymmetricChain, start, T: float, replicates: int,
                 stream: RngStream) -> list[CadlagStepPath]:
    """``replicates`` independent exact paths, deterministic under ``stream``."""
    res = simulate_batch(chain, start, T, replicates, stream, record=True)
    return _paths_from_events(chain, start, T, replicates, res.events)


def sample_path(chain: FiniteSymmetricChain, start, T: float, stream: RngStream) -> CadlagStepPath:
    """One exact path: exponential holding times with rate ``-Q(x, x)``."""
    return sample_paths(chain, start, T, 1, stream)[0]


def simulate_pair_batch(c1: FiniteSymmetricChain, c2: FiniteSymmetricChain, start1, start2,
                        T: float, replicates: int, stream: RngStream,
                        window: tuple[float, float] | None = None) -> np.ndarray:
    """Co-occupation times of two independent walks on a shared state space.

    Returns ``(replicates, states)``: time in ``window`` during which both
    walks sit at ``x``.  The pair is simulated as one chain with total rate
    ``r1(x1) + r2(x2)``, which is the law of two independent walks.
    """
    if c1.states != c2.states:
        raise InputError("the two chains must share their state list")
    t0, t1 = (0.0, T) if window is None else window
    rng = stream.generator()
    r1, cum1 = _jump_tables(c1)
    r2, cum2 = _jump_tables(c2)
    S = len(c1)
    x1 = np.full(replicates, c1.index[start1], dtype=int)
    x2 = np.full(replicates, c2.index[start2], dtype=int)
    now = np.zeros(replicates)
    occ = np.zeros((replicates, S))
    active = np.arange(replicates)
    while active.size:
        a1, a2 = r1[x1[active]], r2[x2[active]]
        tot = a1 + a2
        with np.errstate(divide="ignore"):
            hold = rng.exponential(1.0, size=active.size) / tot
        a = now[active]
        b = np.minimum(a + hold, T)
        same = x1[active] == x2[active]
        w = _window_overlap(a, b, t0, t1) * same
        np.add.at(occ, (active, x1[active]), w)
        moved = a + hold < T
        mv = active[moved]
        u = rng.random(mv.size)
        first = u * tot[moved] < a1[moved]
        v = rng.random(mv.size)
        m1, m2 = mv[first], mv[~first]
        x1[m1] = _choose(cum1[x1[m1]], v[first])
        x2[m2] = _choose(cum2[x2[m2]], v[~first])
        now[mv] = b[moved]
        active = mv
    return occ


@dataclass
class FunctionalSpec:
    """What to estimate.

    kind
        ``"pcaf"``: ``A_T = int_0^T f(X_s) ds`` (optionally raised to ``power``);
        ``"stom_window"``: ``Pi(E x [t0, t1])`` with ``f`` zeroed outside ``sites``;
        ``"collision_window"``: collision mass of ``E x [t0, t1]`` for the
        weighting density ``f(x) = mu(x) / (m1(x) m2(x))``;
        ``"pcaf_supdiff"``: ``sup_{t<=T} |A_t - B_t|^power`` with density
        difference ``f``.
    """

    kind: str
    f: Sequence[float] | None = None
    T: float = 1.0
    window: tuple[float, float] | None = None
    sites: Sequence | None = None
    power: int = 1
    discount: float = 0.0


def _evaluate_stream(chains, starts, spec: FunctionalSpec, n: int, stream: RngStream) -> np.ndarray:
    c1 = chains[0]
    f = np.zeros(len(c1)) if spec.f is None else np.asarray(spec.f, dtype=float)
    if spec.sites is not None:
        mask = np.zeros(len(c1))
        mask[c1.idx(spec.sites)] = 1.0
        f = f * mask
    if spec.kind in ("pcaf", "stom_window"):
        res = simulate_batch(c1, starts[0], spec.T, n, stream, window=spec.window,
                             discount=spec.discount)
        vals = res.occupation @ f
    elif spec.kind == "collision_window":
        occ = simulate_pair_batch(chains[0], chains[1], starts[0], starts[1], spec.T, n,
                                  stream, window=spec.window)
        vals = occ @ f
    elif spec.kind == "pcaf_supdiff":
        res = simulate_batch(c1, starts[0], spec.T, n, stream, drift=f)
        vals = res.sup_abs
    else:
        raise InputError(f"unknown functional kind {spec.kind!r}")
    return vals ** spec.power


def estimate_functional(chains, starts, spec: FunctionalSpec, replicates: int,
                        seed: int = DEFAULT_SEED, streams: int = 1, threads: int = 1,
                        return_samples: bool = False):
    """Monte Carlo estimate of ``spec`` over ``replicates`` paths.

    Replicates are split over ``streams`` independent streams ``(seed, k)``;
    samples are concatenated in stream order, so the result does not depend
    on ``threads``.
    """
    if replicates < 2:
        raise InputError("at least two replicates are needed")
    if isinstance(chains, FiniteSymmetricChain):
        chains = [chains]
    if not isinstance(starts, (list, tuple)):
        starts = [starts]
    streams = max(1, min(streams, replicates))
    sizes = [replicates // streams + (k < replicates % streams) for k in range(streams)]
    keys = [RngStream(seed, k) for k in range(streams)]
    job: Callable = lambda kn: _evaluate_stream(chains, starts, spec, kn[1], kn[0])
    if threads > 1 and streams > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, zip(keys, sizes)))
    else:
        parts = [job(kn) for kn in zip(keys, sizes)]
    samples = np.concatenate(parts)
    est = MonteCarloEstimate.from_samples(samples, [k.key() for k in keys])
    return (est, samples) if return_samples else est
