"""Command line experiment runner.

Usage::

    stomlab <subcommand> [--config FILE] [--seed N] [--threads N] [--out-dir DIR]

Subcommands: resist, heatkernel, kato, mollify, collide, gw, metrics.  The
config file is JSON (schema in the README).  Every output file embeds the
resolved config, so re-running it reproduces the numeric columns exactly.

Exit status: 0 success, 2 configuration error, 3 a checked inequality was
falsified.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import os
import sys
from typing import Any

import numpy as np

from . import io as rec_io
from .collision import (canonical_weighting, collision_kato_integral, collision_moment,
                        product_chain)
from .exceptions import StomlabError
from .experiments import dyadic, lattice_table, mollifier_sweep
from .graphs import (GWSpec, cycle_graph, degree_moment_limit, fit_volume_exponent, grid_graph,
                     gw_sample_degree_moment, lattice_segment, path_graph, rescaled_space,
                     sample_conditioned_gw, star_graph, torus_graph, trf, volume_profile)
from .markov import (chapman_kolmogorov_residual, heat_kernel, kato_bound, kato_profile,
                     resolvent_density, sandwich_check)
from .metrics import (fell_distance, gh_upper_bound, hausdorff_distance, l0_distance,
                      prohorov_distance, skorohod_distance, stom_distance, upc_distance,
                      vague_distance)
from .network import (ElectricalNetwork, parse_edge_list, read_edge_list,
                      recurrence_profile, resistance_metric_matrix, walk_generator)
from .pcaf import pcaf_l2_difference_bound_check
from .simulate import DEFAULT_SEED, FunctionalSpec, estimate_functional
from .spaces import AtomicMeasure

EXIT_OK, EXIT_CONFIG, EXIT_FALSIFIED = 0, 2, 3


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ output


class Output:
    """Writes CSV/JSON artifacts that carry the resolved config."""

    def __init__(self, out_dir: str, config: dict):
        self.out_dir = out_dir
        self.config = config
        self.files: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def _header(self) -> str:
        return "# config: " + _config_text(self.config) + "\n"

    def csv(self, name: str, header: list[str], rows) -> None:
        buf = _io.StringIO()
        buf.write(self._header())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        self._write(name, buf.getvalue())

    def json(self, name: str, payload: dict) -> None:
        body = rec_io.dumps(payload)
        self._write(name, '{"config":' + _config_text(self.config) + ',"result":' + body + "}\n")

    def _write(self, name: str, text: str) -> None:
        path = os.path.join(self.out_dir, name)
        with open(path, "w") as fh:
            fh.write(text)
        self.files.append(path)


def _config_text(config: dict) -> str:
    # shortest round-trip floats keep the header identical to the input values
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# ------------------------------------------------------------ config pieces

_GENERATORS = {
    "path": lambda p: path_graph(int(p["n"])),
    "cycle": lambda p: cycle_graph(int(p["n"])),
    "star": lambda p: star_graph(int(p["k"])),
    "grid": lambda p: grid_graph(int(p["w"]), int(p["h"])),
    "torus": lambda p: torus_graph(int(p["w"]), int(p["h"])),
    "segment": lambda p: lattice_segment(int(p["L"])),
}


def _network(cfg: dict, base_dir: str) -> ElectricalNetwork:
    spec = cfg.get("network")
    if spec is None:
        raise ConfigError("missing 'network'")
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        if not os.path.exists(path):
            raise ConfigError(f"network file not found: {spec}")
        return read_edge_list(path)
    if "family" in spec:
        fam = spec["family"]
        if fam not in _GENERATORS:
            raise ConfigError(f"unknown network family {fam!r}")
        return _GENERATORS[fam](spec)
    if "edges" in spec:
        lines = [] if spec.get("root") is None else [f"root {spec['root']}"]
        lines += [" ".join(str(x) for x in e) for e in spec["edges"]]
        return parse_edge_list("\n".join(lines))
    raise ConfigError("network must be a file, a {'family': ...} or an {'edges': ...} object")


def _measure(cfg_value, chain, net) -> AtomicMeasure:
    if cfg_value is None or cfg_value == "counting":
        return AtomicMeasure.from_vector(chain.states, np.ones(len(chain)))
    if cfg_value == "reference":
        return AtomicMeasure.from_vector(chain.states, chain.m)
    if cfg_value == "conductance":
        return AtomicMeasure.from_vector(net.vertices, net.weights)
    if isinstance(cfg_value, dict):
        lookup = {str(s): s for s in chain.states}
        try:
            return AtomicMeasure((lookup[str(k)], v) for k, v in cfg_value.items())
        except KeyError as exc:
            raise ConfigError(f"measure atom {exc.args[0]!r} is not a state") from None
    raise ConfigError(f"unrecognized measure {cfg_value!r}")


def _state(chain, value):
    lookup = {str(s): s for s in chain.states}
    if str(value) not in lookup:
        raise ConfigError(f"{value!r} is not a state")
    return lookup[str(value)]


def _states(chain, values):
    return None if values is None else [_state(chain, v) for v in values]


def _grid(cfg: dict, key: str, default):
    val = cfg.get(key, default)
    if isinstance(val, dict) and "dyadic" in val:
        j0, j1 = val["dyadic"]
        return dyadic(int(j0), int(j1))
    return [float(v) for v in val]


def _walk(cfg, net):
    return walk_generator(net, cfg.get("walk", "VSRW"))


# ------------------------------------------------------------ subcommands


def cmd_resist(cfg, out: Output, base_dir: str) -> int:
    net = _network(cfg, base_dir)
    R = resistance_metric_matrix(net)
    out.csv("resistance.csv", ["x"] + [str(v) for v in net.vertices],
            [[v] + list(row) for v, row in zip(net.vertices, R)])
    radii = _grid(cfg, "radii", [1.0, 2.0, 4.0])
    prof = recurrence_profile(net, radii, cfg.get("ball_metric", "resistance"))
    out.csv("recurrence.csv", ["r", "resistance_to_complement"], prof)
    return EXIT_OK


def cmd_heatkernel(cfg, out: Output, base_dir: str) -> int:
    net = _network(cfg, base_dir)
    chain = _walk(cfg, net)
    times = _grid(cfg, "times", [0.5, 1.0, 2.0])
    alphas = _grid(cfg, "alphas", [1.0])
    labels = [str(s) for s in chain.states]
    for t in times:
        p = heat_kernel(chain, t).p
        out.csv(f"kernel_t={t:g}.csv", ["x"] + labels, [[s] + list(r) for s, r in zip(labels, p)])
    for a in alphas:
        r = resolvent_density(chain, a)
        out.csv(f"resolvent_alpha={a:g}.csv", ["x"] + labels,
                [[s] + list(row) for s, row in zip(labels, r)])
    rows = [(t, s, chapman_kolmogorov_residual(chain, t, s)) for t in times for s in times]
    out.csv("chapman_kolmogorov.csv", ["t", "s", "residual"], rows)
    return EXIT_OK


def cmd_kato(cfg, out: Output, base_dir: str) -> int:
    net = _network(cfg, base_dir)
    chain = _walk(cfg, net)
    mu = _measure(cfg.get("measure"), chain, net)
    K = _states(chain, cfg.get("K"))
    alphas = _grid(cfg, "alphas", {"dyadic": [-4, 4]})
    prof = kato_profile(chain, mu, K, alphas)
    rows = [(a, v, kato_bound(chain, mu, K, a), v <= kato_bound(chain, mu, K, a) * (1 + 1e-12))
            for a, v in prof]
    out.csv("kato.csv", ["alpha", "potential_sup", "discrete_bound", "holds"], rows)
    status = EXIT_OK if all(r[3] for r in rows) else EXIT_FALSIFIED
    srows = []
    for t in _grid(cfg, "times", [0.25, 0.5, 1.0, 2.0, 4.0]):
        res = sandwich_check(chain, mu, K, t)
        srows.append((t, res.lower, res.mid, res.upper, res.record.holds))
        if not res.record.holds:
            status = EXIT_FALSIFIED
    out.csv("sandwich.csv", ["t", "lower", "mid", "upper", "holds"], srows)
    return status


def cmd_mollify(cfg, out: Output, base_dir: str, seed: int) -> int:
    net = _network(cfg, base_dir)
    chain = _walk(cfg, net)
    mu = _measure(cfg.get("measure"), chain, net)
    start = _state(chain, cfg.get("start", chain.states[0]))
    T = float(cfg.get("T", 1.0))
    R = cfg.get("R")
    space = None
    if R is not None:
        from .network import resistance_space
        space = resistance_space(net)
    deltas = _grid(cfg, "deltas", {"dyadic": [1, 10]})
    rows = mollifier_sweep(chain, mu, start, T, deltas, R, space, int(cfg.get("paths", 50)), seed)
    out.csv("mollify.csv", ["delta", "mean_abs_diff", "se", "exact_mean"],
            [(r["delta"], r["mean_abs_diff"], r["se"], r["exact_mean"]) for r in rows])
    status = EXIT_OK
    if "l2_check" in cfg:
        c = cfg["l2_check"]
        nu = mu.scaled(float(c.get("scale", 1.1)))
        rec = pcaf_l2_difference_bound_check(chain, mu, nu, float(c.get("alpha", 1.0)), T,
                                             int(c.get("replicates", 10_000)), seed)
        out.json("l2_check.json", {"record": rec.to_dict()})
        if not rec.holds:
            status = EXIT_FALSIFIED
    return status


def cmd_collide(cfg, out: Output, base_dir: str, seed: int, threads: int) -> int:
    status = EXIT_OK
    if "network" in cfg:
        net = _network(cfg, base_dir)
        chain = _walk(cfg, net)
        pc = product_chain(chain, chain)
        w = cfg.get("weighting", "canonical")
        mu = canonical_weighting(chain, chain) if w == "canonical" else _measure(w, chain, net)
        start = tuple(_state(chain, s) for s in cfg.get("start", [chain.states[0]] * 2))
        T = float(cfg.get("T", 1.0))
        sites = _states(chain, cfg.get("sites"))
        reps = int(cfg.get("replicates", 100_000))
        dens = chain.vector(mu) / (chain.m * chain.m)
        rows = []
        for k in cfg.get("ks", [1, 2]):
            exact = collision_moment(pc, mu, start, int(k), T, sites)
            est = estimate_functional([chain, chain], list(start),
                                      FunctionalSpec("collision_window", f=dens, T=T, sites=sites,
                                                     power=int(k)),
                                      reps, seed, streams=int(cfg.get("streams", 8)),
                                      threads=threads)
            rows.append((k, exact, est.mean, est.se, est.agrees_with(exact)))
        out.csv("collision_moments.csv", ["k", "exact", "mc_mean", "mc_se", "within_3se"], rows)
        deltas = _grid(cfg, "deltas", {"dyadic": [0, 10]})
        out.csv("collision_kato.csv", ["delta", "value"],
                [(d, collision_kato_integral(chain, chain, mu, d, sites)) for d in deltas])
    if "lattice" in cfg:
        lat = cfg["lattice"]
        rows = lattice_table([int(L) for L in lat.get("L", [25, 50, 100])], float(lat.get("t", 0.1)))
        out.csv("lattice.csv", ["k", "L", "value", "continuum", "rel_error"],
                [(r["k"], r["L"], r["value"], r["continuum"], r["rel_error"]) for r in rows])
    return status


def _gw_spec(cfg) -> GWSpec:
    fam = cfg.get("family", "poisson")
    if fam == "poisson":
        return GWSpec.poisson()
    if fam == "geometric":
        return GWSpec.geometric()
    if fam == "binary":
        return GWSpec.binary()
    if fam == "pmf":
        return GWSpec.from_pmf(cfg["pmf"])
    raise ConfigError(f"unknown offspring family {fam!r}")


def cmd_gw(cfg, out: Output, base_dir: str, seed: int) -> int:
    spec = _gw_spec(cfg)
    q = float(cfg.get("q", 2.0))
    k0 = int(cfg.get("k0", 0))
    samples = int(cfg.get("samples", 200))
    ns = [int(n) for n in cfg.get("n", [2000])]
    limit = degree_moment_limit(spec, q, k0)
    rows = []
    for n in ns:
        x = gw_sample_degree_moment(spec, n, samples, q, seed)
        rows.append((n, samples, float(x.mean()), float(x.std(ddof=1) / math.sqrt(samples)),
                     limit, spec.variance + 4))
    out.csv("degree_moments.csv", ["n", "samples", "mean", "se", "limit", "sigma2_plus_4"], rows)
    # moment checks: finite variance and the (3 + eps) moment, reported without verdict
    moments = {"variance": spec.variance, "period": spec.period,
               "moment_3_eps": degree_moment_limit(spec, 3.1, 0)}
    vrows, grows = [], []
    radii = _grid(cfg, "radii", [0.05, 0.1, 0.2, 0.4, 0.8])
    beta = float(cfg.get("beta", 1.0))
    prev = None
    for n in cfg.get("profile_n", [100, 200, 400]):
        n = int(n)
        tree = sample_conditioned_gw(spec, n, seed, 10_000 + n)
        ms = rescaled_space(tree, 2 * math.sqrt(n) / math.sqrt(spec.variance), n)
        prof = volume_profile(ms.space, ms.measure, radii)
        vrows += [(n, s, v) for s, v in prof]
        C, alpha = fit_volume_exponent(prof)
        lower = trf(beta, 1.0 / n) if 1.0 / n < math.exp(-1) else math.nan
        grows.append((n, C, alpha, lower))
        if prev is not None and cfg.get("gh", True):
            bound = gh_upper_bound(prev.space, ms.space, prev.measure, ms.measure)
            grows[-1] = grows[-1] + (bound.value,)
        else:
            grows[-1] = grows[-1] + (math.nan,)
        prev = ms
    out.csv("volume_profiles.csv", ["n", "s", "min_ball_mass"], vrows)
    out.csv("volume_fits.csv", ["n", "C", "alpha", "window_lower_endpoint", "gh_bound_to_previous"],
            grows)
    out.json("gw_summary.json", {"moments": moments})
    return EXIT_OK


_METRICS = {
    "hausdorff": "sets", "fell": "sets", "prohorov": "measures", "vague": "measures",
    "l0": "paths", "skorohod": "paths", "stom": "stoms", "upc": "monotone",
}


def cmd_metrics(cfg, out: Output, base_dir: str) -> int:
    metric = cfg.get("metric")
    if metric not in _METRICS:
        raise ConfigError(f"metric must be one of {sorted(_METRICS)}")
    resolve = lambda p: p if os.path.isabs(p) else os.path.join(base_dir, p)
    items = cfg.get("items", [])
    if _METRICS[metric] != "monotone":
        if "space" not in cfg:
            raise ConfigError("missing 'space'")
        space = rec_io.read(resolve(cfg["space"]))
    objs = []
    for it in items:
        if _METRICS[metric] == "sets":
            objs.append([tuple(p) if isinstance(p, list) else p for p in it])
        elif _METRICS[metric] == "monotone":
            from .spaces import MonotonePath
            objs.append(MonotonePath(it["times"], it["values"]))
        else:
            objs.append(rec_io.read(resolve(it)))
    fn = {
        "hausdorff": lambda a, b: hausdorff_distance(a, b, space),
        "fell": lambda a, b: fell_distance(a, b, space),
        "prohorov": lambda a, b: prohorov_distance(a, b, space),
        "vague": lambda a, b: vague_distance(a, b, space),
        "l0": lambda a, b: l0_distance(a, b, space),
        "skorohod": lambda a, b: skorohod_distance(a, b, space).value,
        "stom": lambda a, b: stom_distance(a, b, space),
        "upc": upc_distance,
    }[metric]
    n = len(objs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = fn(objs[i], objs[j])
    out.csv(f"{metric}_distances.csv", ["item"] + [str(i) for i in range(n)],
            [[i] + list(D[i]) for i in range(n)])
    return EXIT_OK


# --------------------------------------------------------------------- main

SUBCOMMANDS = ("resist", "heatkernel", "kato", "mollify", "collide", "gw", "metrics")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stomlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", default="stomlab-out")
    return ap


def _diagnostic(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    cfg: dict[str, Any] = {}
    base_dir = os.getcwd()
    try:
        if args.config:
            if not os.path.exists(args.config):
                raise ConfigError(f"config file not found: {args.config}")
            with open(args.config) as fh:
                cfg = json.load(fh)
            if not isinstance(cfg, dict):
                raise ConfigError("config must be a JSON object")
            base_dir = os.path.dirname(os.path.abspath(args.config))
        seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        resolved = {"subcommand": args.subcommand, "seed": seed, "threads": args.threads, **cfg}
        resolved["seed"] = seed
        out = Output(args.out_dir, resolved)
        sub = args.subcommand
        if sub == "resist":
            status = cmd_resist(cfg, out, base_dir)
        elif sub == "heatkernel":
            status = cmd_heatkernel(cfg, out, base_dir)
        elif sub == "kato":
            status = cmd_kato(cfg, out, base_dir)
        elif sub == "mollify":
            status = cmd_mollify(cfg, out, base_dir, seed)
        elif sub == "collide":
            status = cmd_collide(cfg, out, base_dir, seed, args.threads)
        elif sub == "gw":
            status = cmd_gw(cfg, out, base_dir, seed)
        else:
            status = cmd_metrics(cfg, out, base_dir)
    except (ConfigError, StomlabError, OSError, KeyError, TypeError, ValueError) as exc:
        _diagnostic(type(exc).__name__, str(exc))
        return EXIT_CONFIG
    if status == EXIT_FALSIFIED:
        _diagnostic("Falsified", "a checked inequality failed; see the output tables")
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
