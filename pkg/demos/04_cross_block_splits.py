# %% [markdown]
# How a cross block ``f(min_k AD[i, k] + BD[j, k])`` is split.
#
# Each (row, column) pair is charged to the first separator column that
# realises the minimum. The planner finds the pairs of each column by median
# splits, producing full products (factorised by the kernel) and a few
# leftover single pairs. Here we look at the split on a random instance and
# check it against brute force.

# %%
import time

import numpy as np

from otx import ExponentialKernel
from otx.cross import CrossPlan, cross_brute_force

rng = np.random.default_rng(0)
p, q, s = 3000, 2500, 4
AD, BD = rng.uniform(0, 5, (p, s)), rng.uniform(0, 5, (q, s))

t0 = time.perf_counter()
plan = CrossPlan(AD, BD)
print(f"planned {p}x{q} block with |S|={s} in {time.perf_counter() - t0:.2f} s")
print(f"{len(plan.blocks)} product blocks, {len(plan.pair_rows)} single pairs, "
      f"{plan.size() / (p * q):.3f} stored indices per pair")

# %%
# share of pairs charged to each separator column
counts = np.zeros(s, dtype=np.int64)
for k, r, c in plan.blocks:
    counts[k] += len(r) * len(c)
np.add.at(counts, plan.pair_k, 1)
print("pairs per column:", counts.tolist(), "total", counts.sum(), "=", p * q)

# %%
k = ExponentialKernel(1.0)
u, v = rng.uniform(size=p), rng.uniform(size=q)
op = plan.operator(k)
t0 = time.perf_counter()
L, R = op.matvec(v), op.rmatvec(u)
fast_ms = 1e3 * (time.perf_counter() - t0)
t0 = time.perf_counter()
Lb, Rb = cross_brute_force(AD, BD, u, v, k)
slow_ms = 1e3 * (time.perf_counter() - t0)
print(f"factorised products {fast_ms:.1f} ms, brute force {slow_ms:.0f} ms")
print("max relative error:", max(np.max(np.abs(L - Lb) / Lb), np.max(np.abs(R - Rb) / Rb)))
