# %% [markdown]
# How much mass crosses the bridge of a dumbbell?
#
# A dumbbell is two discs joined by a narrow strip. The planar separator finds
# the strip, the separator tree gives the exact kernel action, and the
# transport plan is never formed: plan queries answer questions such as "how
# much of each source vertex's mass ends up in the right disc".

# %%
import numpy as np

from otx import (ExponentialKernel, SeparatorConfig, SgfiConfig, SgfiOperator, build_sgfi, default_measures,
                 generate_dumbbell, plan_query, sinkhorn_solve, transport_cost)
from otx.generators import dumbbell_bridge

r, w = 18, 2
g = generate_dumbbell(r, w)
k = ExponentialKernel(0.3 * r)
root = build_sgfi(g, SgfiConfig(leaf_size_threshold=128, separator=SeparatorConfig("planar_bfs"), kernel=k))
bridge = dumbbell_bridge(g, r)
print(f"n={g.n}; root separator has {len(root.sep_ids)} vertices, all on the bridge: {bridge[root.sep_ids].all()}")

# %%
a, b = default_measures(g)
state = sinkhorn_solve(a, b, SgfiOperator(root, k))
plan = state.plan()
print(f"converged={state.converged} in {state.iterations} iterations, marginal error {state.marginal_error:.1e}")
print(f"transport cost {transport_cost(plan):.4f}")

# %%
x = g.coords[:, 0]
right = (x > x.max() - 2 * r).astype(float)
left = 1.0 - right
to_right = plan_query(plan, right)
print(f"source mass in the left disc:            {a[left > 0].sum():.4f}")
print(f"mass shipped from the left into the right: {to_right[left > 0].sum():.4f}")
print(f"target mass in the right disc:           {b[right > 0].sum():.4f}")

# %%
# the rows of the plan sum to the source measure, up to the solver tolerance
print("l1 |P 1 - a| =", np.abs(plan_query(plan, np.ones(g.n)) - a).sum())
