import numpy as np

from stomlab import io
from stomlab.spaces import (AtomicMeasure, CadlagStepPath, FinitePointMetricSpace, SpaceTimeAtom,
                            SpaceTimeAtomicMeasure)


def test_round_trips(tmp_path):
    X = FinitePointMetricSpace([(0, 0), (0, 1), "z"], [[0, 1, 2.5], [1, 0, 1.5], [2.5, 1.5, 0]], (0, 0))
    mu = AtomicMeasure({(0, 1): 0.1, "z": 1 / 3})
    path = CadlagStepPath("z", [1 / 7, 0.25], [(0, 1), "z"], 2.0)
    sigma = SpaceTimeAtomicMeasure([SpaceTimeAtom("z", 0.1, 0.3, 2.0), SpaceTimeAtom((0, 0), 0.5, None, 1.0)],
                                   1.0, kind="collision", meta={"weighting": "canonical"})
    for k, obj in enumerate((X, mu, path, sigma)):
        f = tmp_path / f"obj{k}.txt"
        io.write(obj, f)
        back = io.read(f)
        assert type(back) is type(obj)
    Xb = io.read(tmp_path / "obj0.txt")
    assert Xb.points == X.points and np.array_equal(Xb.dist, X.dist) and Xb.root == X.root
    mb = io.read(tmp_path / "obj1.txt")
    assert mb.as_dict() == mu.as_dict()
    pb = io.read(tmp_path / "obj2.txt")
    assert pb.states == path.states and np.array_equal(pb.jump_times, path.jump_times)
    sb = io.read(tmp_path / "obj3.txt")
    assert sb.atoms == sigma.atoms and sb.kind == "collision" and sb.meta == sigma.meta
