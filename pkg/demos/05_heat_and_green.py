# %% [markdown]
# # Heat semigroup and Green function
#
# exp(-t D) is diagonal in the wavelet basis.  Its kernel against the
# measure gives the transition matrix of a Markov chain on the leaves.

# %%
import numpy as np

from cantorvp import OperatorParams, PAdic, TreeSpec, build_tree, green_function, transition_matrix
from cantorvp.heat import markov_checks, matrix_exponential_oracle, sobolev_norm

t = build_tree(TreeSpec(PAdic(2), 4))
P = OperatorParams(3.0)
pt = transition_matrix(t, P, 1.0)
print("row sums", np.unique(np.round(pt.sum(axis=1), 14)), " min entry", pt.min())
print("vs expm:", np.abs(pt - matrix_exponential_oracle(t, P, 1.0)).max())

# %%
rep = markov_checks(t, P, [0.1, 0.5, 1.0], trials=100)
print("positivity, sub-Markov, conservation, contraction:", rep.passed)

# %% [markdown]
# The Green function sums inverse eigenvalues.  A ratio test on per-level
# sums decides whether the sum converges as depth grows.

# %%
for s in (1.5, 4.0):
    g = green_function(t, OperatorParams(s))
    print(f"s={s}: {g.convergence_class}, level sums {np.round(g.level_sums, 4)}")

g = green_function(t, OperatorParams(1.5))
print("|M G - (I - P0)| =", g.identity_error)

# %%
f = np.random.default_rng(1).standard_normal(t.n_leaves)
sn = sobolev_norm(t, P, f)
print("Sobolev norm direct", sn.total, " spectral", sn.spectral_total)
