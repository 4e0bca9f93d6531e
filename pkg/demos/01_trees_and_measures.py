# %% [markdown]
# # Trees, balls and the equity measure
#
# A truncated Cantor set is the leaf set of a finite rooted tree.  Every
# vertex is a ball; its measure splits equally among its children.

# %%
from fractions import Fraction

from cantorvp import LevelRegular, PAdic, RandomBounded, TreeSpec, Vertex, build_tree, distance, join

t = build_tree(TreeSpec(PAdic(3), 3))
print(t)
print("vertices per level:", t.level_sizes)

# %% [markdown]
# Addresses are tuples of child positions, written as dotted strings.
# Under the canonical metric a ball's diameter equals its measure.

# %%
v = Vertex.parse("2.0")
print(v, "diameter", t.diameter(v), "measure", t.measure(v))

# %% [markdown]
# The distance between two leaves is the diameter of their smallest
# common ball, which makes the space ultrametric.

# %%
x, y = Vertex.parse("0.1.2"), Vertex.parse("0.2.2")
print("join:", join(x, y), " distance:", distance(t, x, y))

baire = build_tree(TreeSpec(PAdic(3), 3, "baire"))
print("same pair, Baire metric:", distance(baire, x, y), " aligned:", baire.aligned)

# %% [markdown]
# Branching may vary by level or be drawn at random from a seeded stream.

# %%
lr = build_tree(TreeSpec(LevelRegular([2, 3]), 4))
print("level sizes", lr.level_sizes, " leaf measure", lr.measure(lr.leaves[0]))

rnd = build_tree(TreeSpec(RandomBounded(2, 5, seed=1), 3))
print("random tree level sizes", rnd.level_sizes)
print("total measure on level 3:", sum(rnd.measure(u) for u in rnd.vertices(3)) == Fraction(1))
