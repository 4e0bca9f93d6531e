# %% [markdown]
# # Ultrametric wavelets
#
# On each ball with n children there are n - 1 wavelets.  They are
# constant on the children, with phases given by n-th roots of unity.
# Together with the constant function they form an orthonormal basis.

# %%
import numpy as np

from cantorvp import LevelRegular, PAdic, TreeSpec, Vertex, WaveletBasis, build_tree
from cantorvp.wavelets import WaveletIndex, evaluate_wavelet

t = build_tree(TreeSpec(LevelRegular([3, 2]), 3))
B = WaveletBasis(t)
print("basis size", len(B), "= leaves", t.n_leaves)
print("max |Gram - I| =", np.abs(B.gram() - np.eye(len(B))).max())

# %%
p3 = build_tree(TreeSpec(PAdic(3), 1))
print("root wavelet j=1 on child 1:", evaluate_wavelet(p3, WaveletIndex(Vertex(()), 1), Vertex((1,))))

# %% [markdown]
# Analysis and synthesis run as FFTs over sibling groups, so a transform
# costs O(N L) and never builds the N x N basis matrix.

# %%
big = build_tree(TreeSpec(PAdic(2), 18))
Bb = WaveletBasis(big)
f = np.random.default_rng(0).standard_normal(big.n_leaves)
c = Bb.analyze(f)
print(f"N = {big.n_leaves}: round-trip error {np.abs(Bb.synthesize(c) - f).max():.1e}")
