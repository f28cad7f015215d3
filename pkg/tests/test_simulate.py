import numpy as np
import pytest

from stomlab.exceptions import InputError
from stomlab.markov import FiniteSymmetricChain
from stomlab.network import walk_generator
from stomlab.pcaf import kac_moment
from stomlab.simulate import (FunctionalSpec, MonteCarloEstimate, RngStream, estimate_functional,
                              sample_path, sample_paths, simulate_batch)
from stomlab.spaces import AtomicMeasure

from oracles import random_network


def test_jump_count_poisson(two_state):
    res = simulate_batch(two_state, "a", 2.0, 100_000, RngStream(1))
    est = MonteCarloEstimate.from_samples(res.jumps)
    assert est.agrees_with(2.0)


def test_long_run_occupation_fraction():
    c = FiniteSymmetricChain("xyz", [[-2, 2, 0], [1, -1.5, 0.5], [0, 1, -1]], [1, 2, 1])
    T = 200.0
    res = simulate_batch(c, "x", T, 400, RngStream(2))
    est = MonteCarloEstimate.from_samples(res.occupation[:, 1] / T)
    assert est.agrees_with(0.5)


def test_paths_are_reproducible(two_state):
    p = sample_paths(two_state, "a", 3.0, 5, RngStream(9, 2))
    q = sample_paths(two_state, "a", 3.0, 5, RngStream(9, 2))
    r = sample_paths(two_state, "a", 3.0, 5, RngStream(9, 3))
    assert all(np.array_equal(a.jump_times, b.jump_times) for a, b in zip(p, q))
    assert not all(np.array_equal(a.jump_times, b.jump_times) for a, b in zip(p, r))
    path = sample_path(two_state, "a", 3.0, RngStream(9))
    assert path.initial == "a" and path.horizon == 3.0


def test_occupation_matches_path_occupation(two_state):
    res = simulate_batch(two_state, "b", 2.5, 7, RngStream(4), record=True)
    paths = sample_paths(two_state, "b", 2.5, 7, RngStream(4))
    for r, p in enumerate(paths):
        assert res.occupation[r, 0] == pytest.approx(p.occupation("a"))


def test_estimate_vs_kac(two_state):
    exact = kac_moment(two_state, AtomicMeasure({"a": 1.0}), x0="a", k=1, T=1.0)
    est = estimate_functional(two_state, "a", FunctionalSpec("pcaf", f=[1.0, 0.0], T=1.0), 50_000)
    assert est.agrees_with(exact)


def test_zero_functional(two_state):
    est = estimate_functional(two_state, "a", FunctionalSpec("pcaf", f=[0.0, 0.0]), 100)
    assert est.mean == 0 and est.se == 0


def test_threads_do_not_change_results(rng):
    c = walk_generator(random_network(rng, 5))
    spec = FunctionalSpec("stom_window", f=np.ones(5), T=1.0, window=(0.2, 0.8), sites=[0, 1])
    a = estimate_functional(c, 0, spec, 3000, seed=5, streams=4, threads=1)
    b = estimate_functional(c, 0, spec, 3000, seed=5, streams=4, threads=4)
    assert a.mean == b.mean and a.se == b.se and a.count == 3000


def test_estimate_rejects_bad_input(two_state):
    with pytest.raises(InputError):
        estimate_functional(two_state, "a", FunctionalSpec("pcaf", f=[1, 0]), 1)
    with pytest.raises(InputError):
        estimate_functional(two_state, "a", FunctionalSpec("nope", f=[1, 0]), 10)
