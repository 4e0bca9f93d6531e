# %% [markdown]
# # The operator and its spectrum
#
# The operator integrates f(x) - f(y) against a kernel that depends only
# on the smallest ball containing x and y.  Each wavelet is an
# eigenfunction, and its eigenvalue is a sum over the ancestors of its
# support.

# %%
import numpy as np

from cantorvp import (LevelRegular, OperatorParams, PAdic, TreeSpec, Vertex, assemble_matrix,
                      boundedness_report, build_tree, eigenvalue_closed_form, spectrum)

t = build_tree(TreeSpec(PAdic(2), 2))
P = OperatorParams(3.0)
M = assemble_matrix(t, P).entries
print(M)
print("dense eigenvalues:", np.round(np.sort(np.linalg.eigvals(M).real), 12))
print("closed form:      ", np.sort(spectrum(t, P)))

# %% [markdown]
# The closed form agrees with a two-term expression: a sphere term plus
# the kernel integral outside the child ball.

# %%
lr = build_tree(TreeSpec(LevelRegular([2, 3]), 4))
rec = eigenvalue_closed_form(lr, OperatorParams(1.5), Vertex((1, 0)))
print(rec)

# %% [markdown]
# How the eigenvalues change with depth depends on s.  At s = 4 the kernel
# is constant.  Below 4 the eigenvalues grow.  Above 4 they settle to a
# finite limit.

# %%
deep = build_tree(TreeSpec(PAdic(2), 10))
for s in (2.0, 3.0, 4.0, 5.0):
    rep = boundedness_report(deep, OperatorParams(s))
    print(f"s={s}: kernel {rep.kernel_trend:10s} max eigenvalue by level "
          f"{np.round(rep.max_eigenvalue_by_level[:5], 4)} ... ({rep.max_eigenvalue_trend})")
