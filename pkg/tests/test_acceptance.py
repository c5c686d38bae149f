"""
Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL: ...`` line; the lines are
repeated in the pytest terminal summary. Run ``python tests/test_acceptance.py``
to evaluate all criteria without pytest.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from scipy.sparse.csgraph import shortest_path

from otx.baselines import build_dense, build_nystrom, build_sparse, greenkhorn_solve
from otx.bench import ExperimentConfig, run_experiment
from otx.cross import CrossPlan, cross_brute_force
from otx.generators import generate_dumbbell, generate_grid_surface, generate_path, generate_random_tree
from otx.graph import WeightedGraph, diameter_estimate
from otx.kernels import ExponentialKernel, gaussian_rff, pair_sum_rff
from otx.measures import bbox_diameter, default_measures
from otx.separators import SeparatorConfig
from otx.sgfi import SgfiConfig, build_sgfi, integrate
from otx.sinkhorn import SgfiOperator, plan_query, plan_query_transpose, sinkhorn_solve, transport_cost

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TOL = 1e-7
RESULTS = {}


def record(num, title, ok, detail):
    line = f"criterion {num} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
    RESULTS[num] = line
    print(line, flush=True)
    return ok


def rel(a, b):
    return abs(a - b) / abs(b)


def l2_rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def quiet(*args, **kwargs):
    pass


def loglog_slope(ns, ts):
    return float(np.polyfit(np.log(ns), np.log(ts), 1)[0])


# 1. exactness on trees

def criterion_1():
    rng = np.random.default_rng(1)
    worst_cost, worst_apply, count = 0.0, 0.0, 0
    for n in (100, 500, 2000):
        for t in range(20):
            g = generate_random_tree(n, seed=10_000 + 100 * t + n, weight_range=(0.1, 2.0))
            k = ExponentialKernel(0.2 * diameter_estimate(g))
            dense = build_dense(g, k)
            # a small leaf size so every tree is actually split by centroids
            cfg = SgfiConfig(leaf_size_threshold=32, separator=SeparatorConfig("tree_centroid"), kernel=k)
            root = build_sgfi(g, cfg)
            X = rng.normal(size=(n, 100))
            ref = dense.matrix @ X
            for j in range(100):
                worst_apply = max(worst_apply, l2_rel(integrate(root, X[:, j], k), ref[:, j]))
            a, b = default_measures(g)
            sd = sinkhorn_solve(a, b, dense, tol=TOL)
            sf = sinkhorn_solve(a, b, SgfiOperator(root, k), tol=TOL)
            assert sd.converged and sf.converged
            worst_cost = max(worst_cost, rel(transport_cost(sf.plan()), transport_cost(sd.plan())))
            count += 1
    ok = worst_cost <= 1e-8 and worst_apply <= 1e-10
    return record(1, "exactness on trees", ok,
                  f"{count} trees n in {{100,500,2000}}; max cost rel err {worst_cost:.2e} (<= 1e-8); "
                  f"max integrate rel l2 err {worst_apply:.2e} (<= 1e-10)")


# 2. exact-mode planar equivalence

def criterion_2():
    worst, rows = 0.0, []
    t0 = time.perf_counter()
    for r in (10, 18, 26):
        for w in (1, 2, 3):
            g = generate_dumbbell(r, w)
            k = ExponentialKernel(0.3 * r)
            cfg = SgfiConfig(max_depth=None, leaf_size_threshold=64, separator=SeparatorConfig("planar_bfs"),
                             kernel=k)
            root = build_sgfi(g, cfg)
            assert not root.tree_approximate
            a, b = default_measures(g)
            sd = sinkhorn_solve(a, b, build_dense(g, k), tol=TOL)
            sf = sinkhorn_solve(a, b, SgfiOperator(root, k), tol=TOL)
            assert sd.converged and sf.converged
            e = rel(transport_cost(sf.plan()), transport_cost(sd.plan()))
            worst = max(worst, e)
            rows.append(f"r{r}w{w}:{e:.1e}")
    secs = time.perf_counter() - t0
    return record(2, "exact-mode planar equivalence", worst <= 1e-8,
                  f"dumbbells r 10..26, w 1..3, full separators, unlimited depth; max cost rel err {worst:.2e} "
                  f"(<= 1e-8); {secs:.0f} s")


# 3. cross-block oracle equivalence and pair coverage

def criterion_3():
    rng = np.random.default_rng(3)
    worst, bad_cover = 0.0, 0
    for t in range(200):
        p, q, s = rng.integers(1, 501), rng.integers(1, 501), rng.integers(1, 6)
        if t % 2:
            AD, BD = rng.uniform(0, 5, (p, s)), rng.uniform(0, 5, (q, s))
        else:
            # integer distances force many exact ties in the arg-min
            AD, BD = rng.integers(0, 8, (p, s)).astype(float), rng.integers(0, 8, (q, s)).astype(float)
        k = ExponentialKernel(rng.uniform(0.5, 3.0))
        u, v = rng.uniform(size=p), rng.uniform(size=q)
        plan = CrossPlan(AD, BD)
        op = plan.operator(k)
        L, R = op.matvec(v), op.rmatvec(u)
        Lb, Rb = cross_brute_force(AD, BD, u, v, k)
        worst = max(worst, np.max(np.abs(L - Lb) / np.abs(Lb)), np.max(np.abs(R - Rb) / np.abs(Rb)))
        cov = plan.coverage()
        if plan.pair_count() != p * q or not np.all(cov == 1):
            bad_cover += 1
    return record(3, "cross-block oracle equivalence", worst <= 1e-12 and bad_cover == 0,
                  f"200 instances |A|,|B| <= 500, |S| <= 5; max entrywise rel err {worst:.2e} (<= 1e-12); "
                  f"instances with pair count != |A||B| or a pair covered twice: {bad_cover}")


# 4 and 8. marginal feasibility and plan-query consistency

def _random_instance(family, size, seed):
    if family == "tree":
        return generate_random_tree(size, seed=seed, weight_range=(0.2, 2.0)), "tree_centroid"
    if family == "dumbbell":
        return generate_dumbbell(3 + size % 5, 1 + seed % 3), "planar_bfs"
    return generate_grid_surface(6 + size % 12, seed % 3), "planar_bfs"


def _operators(g, k, mode, seed):
    dense = build_dense(g, k)
    cfg = SgfiConfig(leaf_size_threshold=16, separator=SeparatorConfig(mode), kernel=k)
    return {"dense": dense, "genussink": SgfiOperator(build_sgfi(g, cfg), k), "sparse": build_sparse(dense, 1e-4),
            "nystrom": build_nystrom(g, k, min(64, g.n), seed)}


FEASIBILITY = {"solves": 0, "converged": 0, "worst_marginal": 0.0, "worst_query": 0.0}


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
@given(family=st.sampled_from(["tree", "dumbbell", "grid"]), size=st.integers(5, 200),
       seed=st.integers(0, 10_000), eps_scale=st.floats(0.1, 1.0))
def _feasibility_property(family, size, seed, eps_scale):
    g, mode = _random_instance(family, size, seed)
    k = ExponentialKernel(eps_scale * diameter_estimate(g))
    rng = np.random.default_rng(seed)
    a, b = rng.dirichlet(np.ones(g.n)), rng.dirichlet(np.ones(g.n))
    solves = []
    for name, op in _operators(g, k, mode, seed).items():
        try:
            solves.append(sinkhorn_solve(a, b, op, tol=TOL, max_iters=5000))
        except ArithmeticError:
            FEASIBILITY["solves"] += 1
    try:
        solves.append(greenkhorn_solve(a, b, _operators(g, k, mode, seed)["dense"], max_updates=200_000, tol=TOL))
    except ArithmeticError:
        FEASIBILITY["solves"] += 1
    ones = np.ones(g.n)
    for s in solves:
        FEASIBILITY["solves"] += 1
        if not s.converged:
            continue
        FEASIBILITY["converged"] += 1
        P = s.plan()
        # recompute the marginals through the plan handle rather than trusting the solver
        row, col = plan_query(P, ones), plan_query_transpose(P, ones)
        marg = np.abs(row - a).sum() + np.abs(col - b).sum()
        FEASIBILITY["worst_marginal"] = max(FEASIBILITY["worst_marginal"], marg)
        FEASIBILITY["worst_query"] = max(FEASIBILITY["worst_query"], np.abs(row - a).sum())
        assert marg <= TOL * (1 + 1e-6), (family, size, seed, eps_scale, marg)
        assert np.abs(row - a).sum() <= 2 * TOL


def _run_feasibility():
    if FEASIBILITY["solves"] == 0:
        try:
            _feasibility_property()
            FEASIBILITY["error"] = None
        except AssertionError as exc:
            FEASIBILITY["error"] = str(exc)
    return FEASIBILITY


def criterion_4():
    f = _run_feasibility()
    ok = f["error"] is None and f["converged"] > 0
    detail = (f"{f['converged']} converged of {f['solves']} solves (dense, genussink, sparse, nystrom, greenkhorn "
              f"on hypothesis-drawn trees, dumbbells, grids); max l1 marginal error {f['worst_marginal']:.2e} "
              f"(<= {TOL:g})")
    if f["error"]:
        detail += f"; falsified: {f['error']}"
    return record(4, "marginal feasibility", ok, detail)


def criterion_8():
    f = _run_feasibility()
    rng = np.random.default_rng(8)
    worst_col = 0.0
    for t in range(50):
        w = rng.uniform(0.2, 3.0, 3)
        g = WeightedGraph.from_edges(3, [0, 1, 0], [1, 2, 2], w) if t % 2 else generate_path(3, w[:2])
        k = ExponentialKernel(rng.uniform(0.5, 3.0))
        a, b = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        D = shortest_path(g.csr, directed=False)
        root = build_sgfi(g, SgfiConfig(leaf_size_threshold=2, separator=SeparatorConfig("planar_bfs" if t % 2
                                                                                        else "tree_centroid"),
                                        kernel=k))
        for op in (build_dense(g, k), SgfiOperator(root, k)):
            s = sinkhorn_solve(a, b, op, tol=1e-12)
            assert s.converged
            P = s.u[:, None] * np.exp(-D / k.epsilon) * s.v[None, :]
            for j in range(3):
                col = plan_query(s.plan(), np.eye(3)[j])
                worst_col = max(worst_col, np.max(np.abs(col - P[:, j])))
    ok = f["error"] is None and f["worst_query"] <= 2 * TOL and worst_col <= 1e-12
    return record(8, "transport-plan query consistency", ok,
                  f"max l1 |plan_query(1) - a| {f['worst_query']:.2e} over {f['converged']} converged solves "
                  f"(<= {2 * TOL:g}); n=3 plan columns vs materialized plan max abs err {worst_col:.2e} (<= 1e-12)")


# 5. runtime scaling

def criterion_5():
    # compile the cross-block planner before timing anything
    g = generate_grid_surface(30, 0)
    build_sgfi(g, SgfiConfig(leaf_size_threshold=64, separator=SeparatorConfig("planar_bfs")))
    cfg = ExperimentConfig.from_dict(json.loads((CONFIGS / "grid_scaling.json").read_text()))
    t0 = time.perf_counter()
    rows = run_experiment(cfg, with_oracle=True, log=quiet)
    secs = time.perf_counter() - t0
    pts = {}
    for r in rows:
        if r.get("cost") is not None:
            pts.setdefault(r["method"], []).append((r["n"], r["build_ms"] + r["solve_ms"]))
    dense, fast = sorted(pts.get("dense", [])), sorted(pts.get("genussink", []))
    sd = loglog_slope(*zip(*dense)) if len(dense) >= 2 else float("nan")
    sf = loglog_slope(*zip(*fast)) if len(fast) >= 2 else float("nan")
    fmt = lambda ps: ", ".join(f"{n}:{t / 1e3:.2f}s" for n, t in ps)
    ok = sd >= 1.8 and sf <= 1.4 and len(fast) == 6
    return record(5, "runtime scaling", ok,
                  f"dense build+solve slope {sd:.2f} (>= 1.8) on [{fmt(dense)}]; GenusSink total slope {sf:.2f} "
                  f"(<= 1.4) on [{fmt(fast)}]; {secs:.0f} s")


# 6. approximate-mode accuracy ordering

def criterion_6():
    cfg = ExperimentConfig.from_dict(json.loads((CONFIGS / "grid_surface_compare.json").read_text()))
    t0 = time.perf_counter()
    rows = run_experiment(cfg, with_oracle=True, log=quiet)
    secs = time.perf_counter() - t0
    errs = {}
    for r in rows:
        e = r["abs_err"] if isinstance(r.get("abs_err"), float) else math.inf
        errs.setdefault((r["instance"], r["method"]), []).append(e)
    ok, parts = True, []
    for inst in sorted({i for i, _ in errs}):
        med = {m: float(np.median(errs[(inst, m)])) for i, m in errs if i == inst}
        ratio_ok = all(10 * med["genussink"] <= med[m] for m in ("nystrom", "sparse"))
        ok &= ratio_ok
        parts.append(f"{inst}: genussink {med['genussink']:.1e}, sparse {med['sparse']:.1e}, "
                     f"nystrom {med['nystrom']:.1e}, greenkhorn cost err {med['greenkhorn']:.1e}")
    return record(6, "approximate-mode accuracy ordering", ok,
                  "median abs cost error over 5 seeds (failed solves count as inf; greenkhorn reported only); "
                  + "; ".join(parts) + f"; {secs:.0f} s")


# 7. random-feature convergence

def criterion_7():
    rng = np.random.default_rng(7)
    worst_ratio = 0.0
    for inst in range(3):
        xs, ys, payload = rng.uniform(0, 1.5, 100), rng.uniform(0, 1.5, 100), rng.uniform(size=100)
        eps = 0.5 + inst * 0.5
        ref = np.exp(-np.add.outer(xs, ys) ** 2 / eps ** 2) @ payload
        med = {}
        for m in (1024, 4096):
            med[m] = np.median([np.abs(pair_sum_rff(xs, ys, payload, gaussian_rff(eps, m, seed=s)) - ref).mean()
                                for s in range(20)])
        worst_ratio = max(worst_ratio, med[4096] / med[1024])
    return record(7, "random-feature convergence", worst_ratio <= 0.6,
                  f"3 fixed instances p=q=100, 20 seeds; worst median err(m=4096)/err(m=1024) "
                  f"{worst_ratio:.3f} (<= 0.6; 1/sqrt(4) = 0.5 expected)")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8}


def test_criterion_1_exactness_on_trees():
    assert criterion_1(), RESULTS[1]


def test_criterion_2_exact_mode_planar_equivalence():
    assert criterion_2(), RESULTS[2]


def test_criterion_3_cross_block_oracle():
    assert criterion_3(), RESULTS[3]


def test_criterion_4_marginal_feasibility():
    assert criterion_4(), RESULTS[4]


@pytest.mark.slow
def test_criterion_5_runtime_scaling():
    assert criterion_5(), RESULTS[5]


@pytest.mark.slow
def test_criterion_6_accuracy_ordering():
    assert criterion_6(), RESULTS[6]


def test_criterion_7_random_feature_convergence():
    assert criterion_7(), RESULTS[7]


def test_criterion_8_plan_query_consistency():
    assert criterion_8(), RESULTS[8]


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    results = []
    for num in chosen:
        try:
            results.append(CRITERIA[num]())
        except Exception as exc:
            results.append(record(num, CRITERIA[num].__name__, False, f"error: {exc!r}"))
    sys.exit(0 if all(results) else 1)
