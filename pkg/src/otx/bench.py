"""
Experiment harness behind the ``otx`` command.

A JSON config names an instance (generator or file), the measures, a list
of solvers and an epsilon policy; see ``docs/config.md``. Results go to
``results.csv`` (one row per instance, method and seed) and
``summary.json``.
"""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import generators
from .baselines import DENSE_CAP, ResourceError, build_dense, build_nystrom, build_sparse, greenkhorn_solve
from .io import load_edge_list, load_mesh, save_edge_list
from .kernels import ExponentialKernel
from .measures import (bbox_diameter, default_measures, default_sigma, geodesic_gaussian_mixture,
                       load_measure, save_measure)
from .separators import SeparatorConfig
from .sgfi import SgfiConfig, build_sgfi
from .sinkhorn import SgfiOperator, sinkhorn_solve, transport_cost

CSV_HEADER = ["instance", "n", "method", "cost", "abs_err", "iters", "build_ms", "solve_ms", "seed"]
METHODS = ("dense", "genussink", "sparse", "nystrom", "greenkhorn")
SKIPPED = "oracle_skipped"


class ConfigError(ValueError):
    """The experiment config is malformed."""


@dataclass
class ExperimentConfig:
    instances: list
    solvers: list
    measures: dict = field(default_factory=lambda: {"kind": "gaussian"})
    epsilon: dict = field(default_factory=lambda: {"policy": "0.2diam"})
    tol: float = 1e-7
    max_iters: int = 10_000
    seeds: list = field(default_factory=lambda: [0])
    repetitions: int = 1
    dense_cap: int = DENSE_CAP
    out: str = "otx-out"

    @classmethod
    def from_dict(cls, cfg):
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        known = {"instance", "instances", "sweep", "solvers", "measures", "epsilon", "tol",
                 "max_iters", "seeds", "repetitions", "dense_cap", "out"}
        extra = set(cfg) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        instances = list(cfg.get("instances", []))
        if "instance" in cfg:
            instances.insert(0, cfg["instance"])
        if "sweep" in cfg:
            instances.extend(_expand_sweep(cfg["sweep"]))
        if not instances:
            raise ConfigError("need 'instance', 'instances' or 'sweep'")
        solvers = cfg.get("solvers", [{"method": "dense"}, {"method": "genussink"}])
        if not solvers:
            raise ConfigError("need at least one solver")
        for s in solvers:
            if not isinstance(s, dict) or s.get("method") not in METHODS:
                raise ConfigError(f"unknown method in {s!r}; choose from {METHODS}")
        out = cls(instances, solvers)
        for key in ("measures", "epsilon", "tol", "max_iters", "seeds", "repetitions", "dense_cap", "out"):
            if key in cfg:
                setattr(out, key, cfg[key])
        if out.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not out.seeds:
            raise ConfigError("need at least one seed")
        if out.epsilon.get("policy") not in ("absolute", "0.3r", "0.2diam"):
            raise ConfigError("epsilon policy must be 'absolute', '0.3r' or '0.2diam'")
        return out


def _expand_sweep(sweep):
    gen = sweep.get("generator")
    if "grid" in sweep:
        return [{"generator": gen, **params} for params in sweep["grid"]]
    if gen == "grid_surface" and "sizes" in sweep:
        necks = sweep.get("necks", 0)
        return [{"generator": gen, "side": generators.grid_side_for_size(n, necks), "necks": necks}
                for n in sweep["sizes"]]
    raise ConfigError("sweep needs 'grid' (list of params) or grid_surface 'sizes'")


# instances

def load_instance(spec, seed=0):
    """Return ``(instance_id, graph, params)`` for an instance spec."""
    if "edge_list" in spec:
        path = Path(spec["edge_list"])
        return path.stem, load_edge_list(path), spec
    if "mesh" in spec:
        path = Path(spec["mesh"])
        return path.stem, load_mesh(path), spec
    gen = spec.get("generator")
    p = {k: v for k, v in spec.items() if k != "generator"}
    if gen == "dumbbell":
        return f"dumbbell_r{p['radius']}_w{p['width']}", generators.generate_dumbbell(p["radius"], p["width"]), spec
    if gen == "grid_surface":
        side = p.get("side") or generators.grid_side_for_size(p["n"], p.get("necks", 0))
        necks = p.get("necks", 0)
        return f"grid_s{side}_k{necks}", generators.generate_grid_surface(side, necks), {**spec, "side": side}
    if gen == "random_tree":
        s = p.get("seed", seed)
        g = generators.generate_random_tree(p["n"], s, tuple(p.get("weight_range", (1.0, 1.0))))
        return f"tree_n{p['n']}_s{s}", g, spec
    if gen == "path":
        return f"path_n{p['n']}", generators.generate_path(p["n"]), spec
    raise ConfigError(f"unknown instance spec {spec!r}")


def choose_epsilon(policy, graph, params):
    kind = policy.get("policy", "0.2diam")
    if kind == "absolute":
        return float(policy["value"])
    if kind == "0.3r":
        r = policy.get("r", params.get("radius"))
        if r is None:
            raise ConfigError("epsilon policy 0.3r needs 'r' or a dumbbell radius")
        return 0.3 * float(r)
    return 0.2 * bbox_diameter(graph)


def make_measures(spec, graph):
    if "source" in spec:
        return load_measure(spec["source"]), load_measure(spec["target"])
    sigma = spec.get("sigma") or default_sigma(graph)
    if "anchors" in spec:
        (sa, ta), (sw, tw) = spec["anchors"], spec.get("weights", ([0.7, 0.3], [0.65, 0.35]))
        return (geodesic_gaussian_mixture(graph, sa, sw, sigma),
                geodesic_gaussian_mixture(graph, ta, tw, sigma))
    return default_measures(graph, sigma)


# solvers

def _is_tree(graph):
    return graph.m == graph.n - 1 and graph.components()[0] == 1


def build_operator(solver, graph, kernel, seed, dense=None, dense_cap=DENSE_CAP):
    """Build the kernel operator for one solver entry; returns ``(operator, dense)``."""
    method = solver["method"]
    if method in ("dense", "greenkhorn", "sparse"):
        dense = dense or build_dense(graph, kernel, dense_cap)
        if method == "sparse":
            return build_sparse(dense, solver.get("threshold", 1e-4)), dense
        return dense, dense
    if method == "nystrom":
        return build_nystrom(graph, kernel, min(solver.get("rank", 64), graph.n), seed), dense
    mode = solver.get("mode", "auto")
    if mode == "auto":
        mode = "tree_centroid" if _is_tree(graph) else "planar_bfs"
    sep = SeparatorConfig(mode, solver.get("target_size"), solver.get("balance_floor", 0.2), seed)
    cfg = SgfiConfig(solver.get("max_depth"), solver.get("leaf_size", 512), sep, kernel)
    return SgfiOperator(build_sgfi(graph, cfg), kernel), dense


def run_solver(solver, graph, a, b, kernel, seed, cfg, dense=None):
    """One solve; returns ``(row_fields, dense)`` where row_fields lacks instance and abs_err."""
    t0 = time.perf_counter()
    op, dense = build_operator(solver, graph, kernel, seed, dense, cfg.dense_cap)
    build_ms = 1e3 * (time.perf_counter() - t0)
    t1 = time.perf_counter()
    if solver["method"] == "greenkhorn":
        state = greenkhorn_solve(a, b, op, solver.get("max_updates", 50_000), solver.get("tol", 1e-4))
    else:
        state = sinkhorn_solve(a, b, op, solver.get("tol", cfg.tol), solver.get("max_iters", cfg.max_iters))
    cost = transport_cost(state.plan())
    solve_ms = 1e3 * (time.perf_counter() - t1)
    mem = getattr(op, "nbytes", None)
    return {"cost": cost, "iters": state.iterations, "build_ms": build_ms, "solve_ms": solve_ms,
            "marginal_error": state.marginal_error, "converged": state.converged,
            "peak_memory_estimate_bytes": mem}, dense


def run_experiment(cfg, with_oracle=True, log=print):
    """Run every (instance, seed, repetition, solver); returns result dicts."""
    rows = []
    for spec in cfg.instances:
        for seed in cfg.seeds:
            name, graph, params = load_instance(spec, seed)
            kernel = ExponentialKernel(choose_epsilon(cfg.epsilon, graph, params))
            a, b = make_measures(cfg.measures, graph)
            solvers = list(cfg.solvers)
            if with_oracle and not any(s["method"] == "dense" for s in solvers):
                solvers.insert(0, {"method": "dense"})
            for rep in range(cfg.repetitions):
                dense, oracle = None, None
                oracle_skipped = with_oracle and graph.n > cfg.dense_cap
                inst_rows = []
                for solver in solvers:
                    row = {"instance": name, "n": graph.n, "method": solver["method"], "seed": seed,
                           "repetition": rep, "epsilon": kernel.epsilon}
                    try:
                        res, dense = run_solver(solver, graph, a, b, kernel, seed, cfg, dense)
                        row.update(res)
                    except ResourceError:
                        row.update(cost=None, iters=None, build_ms=None, solve_ms=None, status=SKIPPED)
                    except (ArithmeticError, np.linalg.LinAlgError) as exc:
                        row.update(cost=None, iters=None, build_ms=None, solve_ms=None,
                                   status=f"failed: {type(exc).__name__}")
                    if solver["method"] == "dense" and row.get("cost") is not None:
                        oracle = row["cost"]
                    inst_rows.append(row)
                    log(f"{name} n={graph.n} {solver['method']}: cost={row.get('cost')} "
                        f"{row.get('status', '')}".rstrip())
                dense = None
                for row in inst_rows:
                    if oracle_skipped:
                        row["abs_err"] = SKIPPED
                    elif oracle is not None and row.get("cost") is not None:
                        row["abs_err"] = abs(row["cost"] - oracle)
                    else:
                        row["abs_err"] = None
                rows.extend(inst_rows)
    return rows


def _fmt(x):
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, rows):
    key = lambda r: (r["instance"], r["seed"], r.get("repetition", 0), METHODS.index(r["method"]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in sorted(rows, key=key):
            cost = r.get("cost")
            if cost is None:
                cost = r.get("status", "nan")
            w.writerow([_fmt(r["instance"]), r["n"], r["method"], _fmt(cost), _fmt(r.get("abs_err")),
                        _fmt(r.get("iters")), _fmt(r.get("build_ms")), _fmt(r.get("solve_ms")), r["seed"]])


def summarize(rows):
    """Per (instance, method) medians and per-method log-log runtime slopes."""
    groups = {}
    for r in rows:
        groups.setdefault((r["instance"], r["method"]), []).append(r)
    per = []
    for (inst, method), rs in sorted(groups.items()):
        ok = [r for r in rs if r.get("cost") is not None]
        errs = [r["abs_err"] for r in ok if isinstance(r.get("abs_err"), float)]
        total = [r["build_ms"] + r["solve_ms"] for r in ok]
        per.append({
            "instance": inst, "n": rs[0]["n"], "method": method, "runs": len(rs), "ok": len(ok),
            "median_cost": float(np.median([r["cost"] for r in ok])) if ok else None,
            "median_abs_err": float(np.median(errs)) if errs else None,
            "median_total_ms": float(np.median(total)) if total else None,
            "oracle_skipped": any(r.get("abs_err") == SKIPPED for r in rs),
            "failures": sorted({r["status"] for r in rs if "status" in r}),
        })
    slopes = {}
    for method in METHODS:
        pts = [(p["n"], p["median_total_ms"]) for p in per
               if p["method"] == method and p["median_total_ms"]]
        ns = sorted({n for n, _ in pts})
        if len(ns) >= 2:
            x = np.log([n for n, _ in pts])
            y = np.log([t for _, t in pts])
            slopes[method] = float(np.polyfit(x, y, 1)[0])
    return {"groups": per, "loglog_runtime_slopes": slopes}


def write_outputs(out, rows):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", rows)
    summary = summarize(rows)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=_fmt)
    return summary


# commands

def cmd_generate(cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for spec in cfg.instances:
        for seed in cfg.seeds:
            name, graph, _ = load_instance(spec, seed)
            save_edge_list(out / f"{name}.edges", graph)
            if graph.coords is not None:
                np.savetxt(out / f"{name}.coords", graph.coords, fmt="%.17g")
            print(f"{name}: n={graph.n} m={graph.m} -> {out / (name + '.edges')}")


def cmd_measures(cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for spec in cfg.instances:
        name, graph, _ = load_instance(spec, cfg.seeds[0])
        a, b = make_measures(cfg.measures, graph)
        save_measure(out / f"{name}.source", a)
        save_measure(out / f"{name}.target", b)
        print(f"{name}: measures -> {out}")


def cmd_solve(cfg, out):
    return write_outputs(out, run_experiment(cfg, with_oracle=False))


def cmd_compare(cfg, out):
    return write_outputs(out, run_experiment(cfg, with_oracle=True))


def cmd_sweep(cfg, out):
    return write_outputs(out, run_experiment(cfg, with_oracle=True))


COMMANDS = {"generate": cmd_generate, "measures": cmd_measures, "solve": cmd_solve,
            "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="otx", description="Graph entropic OT experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="single seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker threads for compiled kernels")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"otx: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.threads:
        os.environ["OMP_NUM_THREADS"] = str(args.threads)
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        COMMANDS[args.command](cfg, args.out or cfg.out)
    except ConfigError as exc:
        print(f"otx: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
