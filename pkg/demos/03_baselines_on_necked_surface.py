# %% [markdown]
# Cheap kernels versus the separator tree on a surface with narrow necks.
#
# A grid surface with three walls is crossed through 3-vertex corridors, so
# its balanced separators are tiny. We run the dense oracle, the separator
# tree, the thresholded sparse kernel, Nystrom with 64 landmarks and
# Greenkhorn on the same instance and report the cost error of each.

# %%
import math

from otx import ExponentialKernel, default_measures, generate_grid_surface
from otx.bench import ExperimentConfig, run_solver
from otx.measures import bbox_diameter

g = generate_grid_surface(32, 3)
k = ExponentialKernel(0.2 * bbox_diameter(g))
a, b = default_measures(g)
print(f"n={g.n}, epsilon={k.epsilon:.2f}")

# %%
cfg = ExperimentConfig.from_dict({"instance": {"generator": "path", "n": 2}})
solvers = [{"method": "dense"},
           {"method": "genussink", "mode": "subsampled", "max_depth": 1},
           {"method": "sparse", "threshold": 1e-4},
           {"method": "nystrom", "rank": 64},
           {"method": "greenkhorn", "max_updates": 50_000, "tol": 1e-4}]
results, dense = {}, None
for s in solvers:
    try:
        res, dense = run_solver(s, g, a, b, k, 0, cfg, dense)
        results[s["method"]] = res
    except ArithmeticError as exc:
        results[s["method"]] = {"cost": math.nan, "error": type(exc).__name__}

# %%
oracle = results["dense"]["cost"]
print(f"{'method':<11} {'cost':>10} {'abs err':>9} {'iters':>6} {'build ms':>9} {'solve ms':>9}")
for m, r in results.items():
    if "error" in r:
        print(f"{m:<11} failed: {r['error']}")
        continue
    print(f"{m:<11} {r['cost']:>10.5f} {abs(r['cost'] - oracle):>9.1e} {r['iters']:>6} "
          f"{r['build_ms']:>9.0f} {r['solve_ms']:>9.0f}")

# %% [markdown]
# The sparse kernel drops every entry below 1e-4, which can disconnect the
# support of the two measures; Sinkhorn then cannot reach the marginals.
# Nystrom keeps the long-range entries but smears them with a rank-64 fit;
# its low-rank kernel can have negative entries, so the "cost" it reports may
# not even be a transport cost. Greenkhorn uses the exact kernel but stops at
# a looser tolerance.
