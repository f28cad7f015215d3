import math

import numpy as np
import pytest

from stomlab.exceptions import DisconnectedNetworkError, InputError
from stomlab.graphs import cycle_graph, path_graph, star_graph
from stomlab.network import (ElectricalNetwork, conductance_measure, effective_resistance,
                             parse_edge_list, recurrence_profile, resistance_between_sets,
                             resistance_metric_matrix, walk_generator)

from oracles import random_network


def pinv_resistance(net):
    """``R(x, y) = L+[x,x] + L+[y,y] - 2 L+[x,y]`` from the Moore-Penrose pseudoinverse."""
    Lp = np.linalg.pinv(net.laplacian)
    d = np.diag(Lp)
    return d[:, None] + d[None, :] - 2 * Lp


def test_triangle_and_path(triangle):
    assert effective_resistance(triangle, 0, 1) == pytest.approx(2 / 3)
    assert effective_resistance(triangle, 2, 2) == 0
    assert resistance_metric_matrix(path_graph(7))[0, 7] == pytest.approx(7)


def test_set_resistance():
    net = path_graph(2)
    assert resistance_between_sets(net, [0, 2], [1]) == pytest.approx(0.5)
    edge = ElectricalNetwork.from_edges([("u", "v", 4.0)])
    assert resistance_between_sets(edge, ["u"], ["v"]) == pytest.approx(0.25)


def test_resistance_matches_pseudoinverse(rng):
    for n in (3, 8, 20):
        net = random_network(rng, n)
        assert np.allclose(resistance_metric_matrix(net), pinv_resistance(net), atol=1e-10)


def test_tree_resistance_is_graph_distance(rng):
    from stomlab.graphs import GWSpec, sample_conditioned_gw
    tree = sample_conditioned_gw(GWSpec.poisson(), 40, seed=3)
    net = tree.network()
    assert np.allclose(resistance_metric_matrix(net), tree.distances(), atol=1e-10)


def test_recurrence_profile_examples():
    prof = recurrence_profile(path_graph(10), [2.5])
    assert prof == [(2.5, pytest.approx(3.0))]
    # on the 4-cycle the resistance ball of radius 1.5 is everything (max resistance is 1)
    assert recurrence_profile(cycle_graph(4), [1.5])[0][1] == math.inf
    # with hop-count balls the complement is the antipode, reached by two parallel 2-paths
    assert recurrence_profile(cycle_graph(4), [1.5], "graph")[0][1] == pytest.approx(1.0)


def test_recurrence_profile_nondecreasing(rng):
    net = random_network(rng, 15)
    vals = [v for _, v in recurrence_profile(net, np.linspace(0.1, 5, 25))]
    finite = [v for v in vals if math.isfinite(v)]
    assert all(b >= a - 1e-12 for a, b in zip(finite, finite[1:]))


def test_walk_generators(triangle):
    edge = ElectricalNetwork.from_edges([(0, 1)])
    c = walk_generator(edge, "CSRW")
    assert np.allclose(c.Q, [[-1, 1], [1, -1]]) and np.allclose(c.m, [1, 1])
    c = walk_generator(triangle, "CSRW")
    assert np.allclose(c.m, 2) and np.allclose(c.Q[0, 1:], 0.5)
    v = walk_generator(triangle, "VSRW")
    assert np.allclose(v.m, 1) and np.allclose(v.Q[0, 1:], 1.0)
    s = walk_generator(triangle, "VSRW", metric_scale=3.0, measure_scale=2.0)
    assert np.allclose(s.Q, 6 * v.Q) and np.allclose(s.m, 0.5)
    assert np.allclose(conductance_measure(triangle).masses, 2.0)


def test_rejects_bad_networks():
    with pytest.raises(DisconnectedNetworkError):
        ElectricalNetwork.from_edges([(0, 1), (2, 3)])
    with pytest.raises(InputError):
        ElectricalNetwork([0], np.zeros((1, 1)))
    with pytest.raises(InputError):
        ElectricalNetwork([0, 1], np.array([[0, 1.0], [2.0, 0]]))
    with pytest.raises(InputError):
        ElectricalNetwork.from_edges([(0, 0)])


def test_edge_list_parsing():
    net = parse_edge_list("# demo\nroot b\na b 2.0\nb c\n")
    assert net.root == "b"
    assert effective_resistance(net, "a", "c") == pytest.approx(1.5)
    with pytest.raises(InputError):
        parse_edge_list("a b c d\n")
    with pytest.raises(InputError):
        parse_edge_list("# nothing\n")
    round_trip = parse_edge_list(net.to_edge_list())
    assert np.allclose(resistance_metric_matrix(round_trip), resistance_metric_matrix(net))


def test_star_resistance():
    R = resistance_metric_matrix(star_graph(5))
    assert R[1, 2] == pytest.approx(2.0) and R[0, 3] == pytest.approx(1.0)
