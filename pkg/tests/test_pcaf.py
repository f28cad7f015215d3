import math

import numpy as np
import pytest

from stomlab.exceptions import InputError, UnsupportedOrderError
from stomlab.graphs import path_graph
from stomlab.markov import kato_bound, potential_norm
from stomlab.network import resistance_space, walk_generator
from stomlab.pcaf import (MAX_KAC_ORDER, SmoothMeasureSpec, kac_moment, mollified_stom,
                          mollifier_kernel, pcaf_from_path, pcaf_l2_bound,
                          pcaf_l2_difference_bound_check, smooth_truncate_measure,
                          stom_from_path, truncate_stom)
from stomlab.simulate import FunctionalSpec, RngStream, estimate_functional, sample_path
from stomlab.spaces import (AtomicMeasure, CadlagStepPath, FinitePointMetricSpace,
                            SpaceTimeAtom, SpaceTimeAtomicMeasure)

from oracles import moment_ode, random_network


def test_pcaf_hand_path(two_state):
    spec = SmoothMeasureSpec(AtomicMeasure({"a": 2.0, "b": 5.0}), two_state)
    path = CadlagStepPath("a", [0.4], ["b"], 1.0)
    A = pcaf_from_path(path, spec)
    # 2 * 0.4 = 0.8 at the jump, then 0.8 + 5 * 0.6 = 3.8 at the horizon
    assert A(0.4) == pytest.approx(0.8) and A(1.0) == pytest.approx(3.8)
    assert A(0.7) == pytest.approx(0.8 + 5 * 0.3)


def test_stom_from_path(two_state):
    path = CadlagStepPath("a", [0.4, 0.9], ["b", "a"], 2.0)
    spec = SmoothMeasureSpec(AtomicMeasure({"a": 3.0}), two_state)
    sigma = stom_from_path(path, spec)
    assert sigma.mass(["a"]) == pytest.approx(3.0 * path.occupation("a"))
    assert sigma.mass() == pytest.approx(3.0 * (0.4 + 1.1))
    zero = stom_from_path(path, SmoothMeasureSpec(AtomicMeasure(), two_state))
    assert len(zero) == 0


def test_smooth_truncation():
    X = FinitePointMetricSpace.from_coordinates(np.array([[0.0], [1.75], [2.0], [5.0]]))
    mu = AtomicMeasure({0: 1.0, 1: 2.0, 2: 4.0, 3: 1.0})
    out = smooth_truncate_measure(mu, 2.0, X).as_dict()
    assert out[0] == 1.0 and out[1] == pytest.approx(0.5) and 2 not in out and 3 not in out
    sigma = SpaceTimeAtomicMeasure([SpaceTimeAtom(0, 0, 1, 1.0), SpaceTimeAtom(1, 0, 1, 2.0),
                                    SpaceTimeAtom(2, 0, 1, 4.0)], 1.0)
    tr = truncate_stom(sigma, 2.0, X)
    assert tr.mass([0]) == 1.0 and tr.mass([1]) == pytest.approx(0.5) and tr.mass([2]) == 0
    with pytest.raises(InputError):
        smooth_truncate_measure(mu, 1.0, X)


def test_mollified_two_state_slope(two_state):
    path = CadlagStepPath.constant("a", 1.0)
    for d in (0.5, 0.1, 1e-3):
        sig = mollified_stom(two_state, AtomicMeasure({"a": 1.0}), path, d)
        slope = sig.mass()  # horizon 1
        expected = 0.5 + (math.exp(-2 * d) - math.exp(-4 * d)) / (4 * d)
        assert slope == pytest.approx(expected, rel=1e-12)
    assert sig.mass() == pytest.approx(1.0, abs=2e-3)
    assert len(mollified_stom(two_state, AtomicMeasure(), path, 0.5)) == 0


def test_mollifier_kernel_matches_quadrature(rng):
    import scipy.integrate
    from oracles import expm_kernel
    c = walk_generator(random_network(rng, 6), "CSRW")
    d = 0.3
    ref = scipy.integrate.quad_vec(lambda u: expm_kernel(c.Q, c.m, u), d, 2 * d, epsrel=1e-12)[0] / d
    assert np.allclose(mollifier_kernel(c, d), ref, atol=1e-12)


def test_kac_two_state_closed_form(two_state):
    mu = AtomicMeasure({"a": 1.0})
    for t in (0.2, 1.0, 3.0):
        assert kac_moment(two_state, mu, x0="a", k=1, T=t) == \
            pytest.approx(t / 2 + (1 - math.exp(-2 * t)) / 4, abs=1e-12)
    for k in (1, 2, 3):
        assert kac_moment(two_state, AtomicMeasure(), x0="a", k=k) == 0


@pytest.mark.parametrize("seed", range(6))
def test_kac_matches_moment_ode(seed):
    rng = np.random.default_rng(seed)
    c = walk_generator(random_network(rng, int(rng.integers(3, 7))), "CSRW")
    mu = AtomicMeasure.from_vector(c.states, rng.uniform(0, 1, len(c)))
    dens = c.vector(mu) / c.m
    for k in (1, 2, 3, 4):
        exact = kac_moment(c, mu, x0=c.states[1], k=k, T=0.8)
        assert exact == pytest.approx(moment_ode(c.Q, dens, 0.8, k, 1), rel=1e-8)


def test_kac_time_dependent_weight(two_state):
    # weight 1 on [0, 0.5) and 0 afterwards equals the moment over horizon 0.5
    mu = AtomicMeasure({"a": 1.0})
    w = [(0.5, [1.0, 1.0]), (2.0, [0.0, 0.0])]
    for k in (1, 2):
        assert kac_moment(two_state, mu, w, "a", k, 2.0) == \
            pytest.approx(kac_moment(two_state, mu, None, "a", k, 0.5), rel=1e-12)


def test_kac_order_limits(two_state):
    with pytest.raises(UnsupportedOrderError):
        kac_moment(two_state, AtomicMeasure({"a": 1}), k=MAX_KAC_ORDER + 1)
    with pytest.raises(InputError):
        kac_moment(two_state, AtomicMeasure({"a": 1}), k=0)


def test_kac_k2_against_monte_carlo(two_state):
    mu = AtomicMeasure({"a": 1.0})
    exact = kac_moment(two_state, mu, x0="a", k=2, T=1.5)
    est = estimate_functional(two_state, "a", FunctionalSpec("pcaf", f=[1.0, 0.0], T=1.5, power=2),
                              100_000, seed=11)
    assert est.agrees_with(exact)


def test_pcaf_l2_bound_trivial_and_scaled(two_state):
    mu = AtomicMeasure({"a": 1.0, "b": 0.5})
    rec = pcaf_l2_difference_bound_check(two_state, mu, mu, 1.0, 1.0, replicates=200)
    assert rec.holds and rec.details["left"] == 0
    rec = pcaf_l2_difference_bound_check(two_state, mu, mu.scaled(1.05), 1.0, 1.0, replicates=4000)
    assert rec.holds and rec.details["margin"] > 0
    assert set(rec.seeds) == {"a", "b"}


def test_pcaf_l2_bound_large_alpha_stays_bounded(two_state):
    mu, nu = AtomicMeasure({"a": 1.0}), AtomicMeasure({"a": 1.2, "b": 0.1})
    for alpha in (10.0, 1e3, 1e6):
        for v in (mu, nu):
            assert potential_norm(two_state, two_state.vector(v), alpha) <= \
                kato_bound(two_state, v, None, alpha) + 1e-15
    right = [pcaf_l2_bound(two_state, mu, nu, a, 1.0) for a in (10.0, 1e3, 1e6)]
    assert right[-1] <= right[0] * 1.0 + 4 * math.exp(2) * 2 * 1.2 ** 2


def test_mollified_truncated_needs_space(two_state):
    with pytest.raises(InputError):
        mollified_stom(two_state, AtomicMeasure({"a": 1}), CadlagStepPath.constant("a", 1), 0.1, R=2)
    net = path_graph(4)
    c = walk_generator(net)
    sp = resistance_space(net)
    path = sample_path(c, 0, 2.0, RngStream(5))
    sig = mollified_stom(c, AtomicMeasure.from_vector(c.states, c.m), path, 1e-3, R=2.5, space=sp)
    exact = stom_from_path(path, SmoothMeasureSpec(smooth_truncate_measure(
        AtomicMeasure.from_vector(c.states, c.m), 2.5, sp), c))
    assert abs(sig.mass() - exact.mass()) < 0.05
