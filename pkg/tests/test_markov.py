import math

import numpy as np
import pytest
import scipy.integrate

from stomlab.exceptions import InputError
from stomlab.graphs import cycle_graph, path_graph
from stomlab.markov import (FiniteSymmetricChain, chapman_kolmogorov_residual, heat_kernel,
                            kato_bound, kato_profile, potential, read_chain_json,
                            resolvent_density, sandwich_check, volume_heat_bound_check,
                            write_chain_json)
from stomlab.network import resistance_metric_matrix, walk_generator
from stomlab.spaces import AtomicMeasure

from oracles import expm_kernel, laplace_resolvent, random_network


def test_two_state_kernel(two_state):
    for t in (0.1, 1.0, 3.7):
        hk = heat_kernel(two_state, t)
        assert hk("a", "a") == pytest.approx((1 + math.exp(-2 * t)) / 2, abs=1e-14)
        assert hk("a", "b") == pytest.approx((1 - math.exp(-2 * t)) / 2, abs=1e-14)


def test_kernel_matches_expm(rng):
    for kind in ("VSRW", "CSRW"):
        c = walk_generator(random_network(rng, 12), kind)
        for t in (0.05, 1.3):
            assert np.allclose(c.kernel_matrix(t), expm_kernel(c.Q, c.m, t), atol=1e-11)
        assert chapman_kolmogorov_residual(c, 0.4, 0.9) < 1e-12


def test_resolvent_two_state(two_state):
    for a in (0.5, 1.0, 4.0):
        r = resolvent_density(two_state, a)
        assert r[0, 0] == pytest.approx((a + 1) / (a * (a + 2)))
        assert r[0, 1] == pytest.approx(1 / (a * (a + 2)))
        U = potential(two_state, AtomicMeasure({"a": 1.0}), a)
        assert U[0] == pytest.approx((a + 1) / (a * (a + 2)))


def test_resolvent_laplace_oracle(rng):
    c = walk_generator(random_network(rng, 6), "CSRW")
    r = resolvent_density(c, 0.7)
    assert np.allclose(r, laplace_resolvent(c.Q, c.m, 0.7), rtol=1e-6)


def test_potential_trivial_cases(rng):
    c = walk_generator(random_network(rng, 7), "CSRW")
    m = AtomicMeasure.from_vector(c.states, c.m)
    assert np.allclose(potential(c, m, 2.5), 1 / 2.5)
    assert not potential(c, AtomicMeasure(), 1.0).any()


def test_kato_profile_examples(two_state):
    prof = kato_profile(two_state, AtomicMeasure({"a": 1}), ["a"], [0.5, 1, 8])
    for a, v in prof:
        assert v == pytest.approx((a + 1) / (a * (a + 2)))
        assert v <= kato_bound(two_state, AtomicMeasure({"a": 1}), ["a"], a)
    m = AtomicMeasure.from_vector(two_state.states, two_state.m)
    assert kato_profile(two_state, m, None, [3.0])[0][1] == pytest.approx(1 / 3)


def test_sandwich_two_state(two_state):
    res = sandwich_check(two_state, AtomicMeasure({"a": 1}), None, 1.0)
    I_a = scipy.integrate.quad(lambda s: (1 + math.exp(-2 * s)) / 2, 0, 1, epsabs=1e-13)[0]
    assert res.lower == pytest.approx(I_a / math.e, abs=1e-8)
    assert res.upper == pytest.approx(I_a / (1 - math.exp(-1)), abs=1e-8)
    assert res.mid == pytest.approx(2 / 3, abs=1e-8)  # (a+1)/(a(a+2)) at a = 1
    assert res.lower <= res.mid <= res.upper and res.record.holds
    zero = sandwich_check(two_state, AtomicMeasure(), None, 1.0)
    assert zero.as_tuple() == (0.0, 0.0, 0.0)


def test_volume_heat_bound(two_state):
    R = np.array([[0, 0.5], [0.5, 0]])
    rec = volume_heat_bound_check(two_state, R, [0.3, 1.0], [0.5, 1.0])
    assert rec.holds
    c = walk_generator(cycle_graph(6), "VSRW")
    grid = [0.1, 0.25, 0.5, 1, 2, 5]
    rec = volume_heat_bound_check(c, resistance_metric_matrix(cycle_graph(6)), grid, grid)
    assert rec.holds and rec.details["checked"] == 6 * 6 * 6


def test_chain_validation():
    with pytest.raises(InputError):
        FiniteSymmetricChain([0, 1], [[-1, 1], [2, -2]], [1, 1])
    with pytest.raises(InputError):
        FiniteSymmetricChain([0, 1], [[-1, 1], [1, -2]], [1, 1])
    with pytest.raises(InputError):
        FiniteSymmetricChain([0, 1], [[1, -1], [-1, 1]], [1, 1])
    with pytest.raises(InputError):
        heat_kernel(walk_generator(path_graph(2)), -1.0)


def test_chain_json_round_trip(tmp_path, rng):
    c = walk_generator(random_network(rng, 5), "CSRW")
    write_chain_json(c, tmp_path / "c.json")
    d = read_chain_json(tmp_path / "c.json")
    assert d.states == c.states and np.array_equal(d.Q, c.Q) and np.array_equal(d.m, c.m)
