# %% [markdown]
# # Zeta sums, the abscissa and the factorisation property
#
# The zeta sum adds diam(ball)^s over all balls.  Its abscissa of
# convergence s0 is 1 for every canonical tree, since the level terms at
# s = 1 each add up the measures of one level.

# %%
import numpy as np

from cantorvp import (LevelRegular, PAdic, RandomBounded, TreeSpec, Vertex, build_tree,
                      check_factorisation, connes_measure_limit_check, estimate_abscissa, kappa,
                      zeta_partial)

t = build_tree(TreeSpec(PAdic(2), 30))
zp = zeta_partial(t, 2.0)
print("zeta_30(2) =", zp.value, " closed form 2 - 2^-30 =", 2 - 2.0**-30)

# %%
for fam in (PAdic(2), PAdic(5), LevelRegular([2, 3])):
    est = estimate_abscissa(build_tree(TreeSpec(fam, 20)), tolerance=1e-6)
    print(f"{fam}: s0 = {est.s0:.7f} ({est.status})")

# %% [markdown]
# kappa_v(s) restricts the sum to descendants of v.  For p-adic trees it
# is an exact rescaling of the zeta sum.

# %%
rep = check_factorisation(t, [1.5, 2.0, 3.0])
print("p-adic factorisation holds:", rep.passed, f"(worst {rep.max_corrected_deviation:.1e})")

lr = build_tree(TreeSpec(LevelRegular([2, 3]), 20))
rep = check_factorisation(lr, [1.5, 2.0, 3.0])
print("[2,3] factorisation holds:", rep.passed, f"(worst {rep.max_corrected_deviation:.1e})")
print("first offending vertices:", [str(v) for v in rep.offending[:4]])

# %% [markdown]
# Below a vertex at odd depth the branching pattern reads [3, 2, 3, ...]
# instead of [2, 3, 2, ...], so its descendant sum is a different series.

# %%
v = Vertex((0,))
s = 2.0
print("kappa_v / d^s =", kappa(lr, v, s) / float(lr.diameter(v)) ** s,
      " zeta =", zeta_partial(lr, s).cumulative[lr.depth - 1])

# %% [markdown]
# The ratio kappa_v / zeta near s0 still recovers the measure of v.

# %%
chk = connes_measure_limit_check(t, Vertex((0, 1)), [0.5, 0.1, 0.02, 0.004])
print(np.round(chk.ratios, 5), "->", chk.recursion_value)

rnd = build_tree(TreeSpec(RandomBounded(2, 5, seed=3), 8))
print("random tree factorises:", check_factorisation(rnd, [2.0]).passed)
