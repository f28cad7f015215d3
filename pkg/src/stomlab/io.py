"""Line-oriented JSON records for spaces, measures, paths and space-time measures.

Each file starts with a header record carrying ``"type"``; every following
line is one point, atom or jump.  Floats are written with 17 significant
digits so values round-trip exactly.  Tuples used as point ids are written as
JSON arrays and read back as tuples.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable

import numpy as np

from .exceptions import InputError
from .spaces import (AtomicMeasure, CadlagStepPath, FinitePointMetricSpace, SpaceTimeAtom,
                     SpaceTimeAtomicMeasure)


def dumps(obj: Any) -> str:
    """Compact JSON with floats at 17 significant digits."""
    if isinstance(obj, (bool, type(None))):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        s = f"{x:.17g}"
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _pid(p):
    return tuple(_pid(q) for q in p) if isinstance(p, list) else p


def _read(lines: Iterable[str]) -> list[dict]:
    recs = [json.loads(line) for line in lines if line.strip()]
    if not recs or "type" not in recs[0]:
        raise InputError("missing header record")
    return recs


def space_lines(space: FinitePointMetricSpace) -> list[str]:
    out = [dumps({"type": "space", "root": space.root, "n": len(space)})]
    out += [dumps({"point": p, "row": row}) for p, row in zip(space.points, space.dist)]
    return out


def measure_lines(mu: AtomicMeasure) -> list[str]:
    out = [dumps({"type": "measure", "atoms": len(mu)})]
    out += [dumps({"point": p, "mass": w}) for p, w in zip(mu.points, mu.masses)]
    return out


def path_lines(path: CadlagStepPath) -> list[str]:
    out = [dumps({"type": "path", "initial": path.initial, "horizon": path.horizon})]
    out += [dumps({"time": t, "state": s}) for t, s in zip(path.jump_times, path.states)]
    return out


def stom_lines(sigma: SpaceTimeAtomicMeasure) -> list[str]:
    out = [dumps({"type": "stom", "kind": sigma.kind, "horizon": sigma.horizon, "meta": sigma.meta})]
    out += [dumps({"site": a.site, "start": a.start, "end": a.end, "value": a.value})
            for a in sigma.atoms]
    return out


def to_lines(obj) -> list[str]:
    if isinstance(obj, FinitePointMetricSpace):
        return space_lines(obj)
    if isinstance(obj, AtomicMeasure):
        return measure_lines(obj)
    if isinstance(obj, CadlagStepPath):
        return path_lines(obj)
    if isinstance(obj, SpaceTimeAtomicMeasure):
        return stom_lines(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_lines(lines: Iterable[str]):
    recs = _read(lines)
    head, body = recs[0], recs[1:]
    kind = head["type"]
    if kind == "space":
        pts = [_pid(r["point"]) for r in body]
        return FinitePointMetricSpace(pts, [r["row"] for r in body], _pid(head["root"]))
    if kind == "measure":
        return AtomicMeasure((_pid(r["point"]), r["mass"]) for r in body)
    if kind == "path":
        return CadlagStepPath(_pid(head["initial"]), [r["time"] for r in body],
                              [_pid(r["state"]) for r in body], head["horizon"])
    if kind == "stom":
        atoms = [SpaceTimeAtom(_pid(r["site"]), r["start"], r["end"], r["value"]) for r in body]
        return SpaceTimeAtomicMeasure(atoms, head["horizon"], head.get("kind", "stom"),
                                      head.get("meta"))
    raise InputError(f"unknown record type {kind!r}")


def write(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(to_lines(obj)) + "\n")


def read(path):
    with open(path) as fh:
        return from_lines(fh)
