# %% [markdown]
# # The jump process
#
# The generator's diagonal gives exit rates.  The off-diagonal entries,
# divided by the exit rate, give jump probabilities.  Paths use
# counter-based random numbers, so the output does not depend on chunking
# or threading.

# %%
import time

import numpy as np

from cantorvp import OperatorParams, PAdic, TreeSpec, build_rates, build_tree, sample_paths, tv_distance
from cantorvp.heat import transition_matrix

t = build_tree(TreeSpec(PAdic(2), 3))
P = OperatorParams(3.0)
rates = build_rates(t, P)
print("exit rates", rates.rates)

# %%
exact = transition_matrix(t, P, 1.0)[0]
for n in (10**3, 10**4, 10**5, 2 * 10**5):
    t0 = time.perf_counter()
    emp = sample_paths(rates, 0, 1.0, n, seed=20240601)
    print(f"{n:>7} paths  TV {tv_distance(emp.distribution, exact):.4f}  ({time.perf_counter() - t0:.2f}s)")

# %%
a = sample_paths(rates, 0, 1.0, 50_000, seed=5)
b = sample_paths(rates, 0, 1.0, 50_000, seed=5, chunk=777, n_jobs=4)
print("serial == parallel:", np.array_equal(a.counts, b.counts))
