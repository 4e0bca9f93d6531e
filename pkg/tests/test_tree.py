import itertools
import json
from fractions import Fraction

import pytest

from cantorvp.tree import (Explicit, ExplicitDiameters, LevelRegular, PAdic, RandomBounded,
                           TreeSpec, TreeSpecError, Vertex, build_tree, distance, join,
                           load_explicit)
from conftest import make


def V(*a):
    return Vertex(a)


def test_padic_vertex_count():
    assert make(PAdic(2), 3).n_vertices == 15


def test_padic3_level2_ball():
    t = make(PAdic(3), 2)
    v = V(1, 2)
    assert t.diameter(v) == Fraction(1, 9)
    assert t.measure(v) == Fraction(1, 9)


def test_level_regular_diameter():
    t = make(LevelRegular([2, 3]), 2)
    assert t.diameter(V(1, 2)) == Fraction(1, 6)
    assert t.level_sizes == [1, 2, 6]


def test_join_examples():
    assert join(V(0, 1, 0), V(0, 0, 1)) == V(0)
    assert join(V(0, 1, 0), V(0, 1, 0)) == V(0, 1, 0)
    assert join(V(0, 1, 1), V(1, 0, 0)) == V()


def test_distance_examples():
    assert distance(make(PAdic(2), 3), V(0, 1, 0), V(0, 0, 1)) == Fraction(1, 2)
    assert distance(make(PAdic(3), 3), V(0, 1, 0), V(0, 1, 2)) == Fraction(1, 9)
    assert distance(make(PAdic(3), 3, "baire"), V(0, 1, 0), V(0, 1, 2)) == Fraction(1, 4)
    assert distance(make(PAdic(2), 3), V(1, 1, 1), V(1, 1, 1)) == 0


@pytest.mark.parametrize("family", [PAdic(2), PAdic(3), LevelRegular([2, 3]),
                                    RandomBounded(2, 4, seed=3)])
@pytest.mark.parametrize("metric", ["canonical", "baire"])
def test_ultrametric_inequality_exhaustive(family, metric):
    t = make(family, 3, metric)
    leaves = t.leaves
    for x, y, z in itertools.product(leaves, repeat=3):
        assert distance(t, x, z) <= max(distance(t, x, y), distance(t, y, z))


@pytest.mark.parametrize("family", [PAdic(5), LevelRegular([3, 2, 4]), RandomBounded(2, 5, seed=1)])
def test_measure_and_diameter_recursions(family):
    t = make(family, 3)
    for lvl in range(t.depth + 1):
        assert sum(t.measure(v) for v in t.vertices(lvl)) == 1
        for v in t.vertices(lvl):
            assert t.measure(v) == t.diameter(v)
            if lvl:
                n = t.n_children(v.parent())
                assert t.measure(v) == t.measure(v.parent()) / n


def test_baire_diameters():
    t = make(PAdic(3), 3, "baire")
    assert [t.diameter(V(*([0] * k))) for k in range(4)] == [Fraction(1, 2**k) for k in range(4)]
    assert not t.aligned
    assert make(PAdic(3), 3).aligned


def test_random_tree_is_reproducible():
    a = make(RandomBounded(2, 5, seed=7), 4)
    b = make(RandomBounded(2, 5, seed=7), 4)
    assert a.level_sizes == b.level_sizes
    assert all(2 <= n <= 5 for lvl in range(4) for n in a.children_array(lvl))


def test_explicit_from_json(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps([[2], [3, 2]]))
    t = build_tree(TreeSpec(load_explicit(path), 2))
    assert t.level_sizes == [1, 2, 5]
    assert t.measure(V(1, 0)) == Fraction(1, 4)
    assert t.measure(V(0, 2)) == Fraction(1, 6)


def test_explicit_from_address_map():
    fam = load_explicit({"children": {"": 2, "0": 2, "1": 3}})
    assert build_tree(TreeSpec(fam, 2)).n_leaves == 5


@pytest.mark.parametrize("spec, needle", [
    (TreeSpec(PAdic(1), 2), "PAdic"),
    (TreeSpec(LevelRegular([2, 1]), 2), "LevelRegular"),
    (TreeSpec(PAdic(2), 0), "depth"),
    (TreeSpec(Explicit([[2], [2, 1]]), 2), "1"),
    (TreeSpec(RandomBounded(1, 3), 2), "RandomBounded"),
])
def test_invalid_specs_rejected(spec, needle):
    with pytest.raises(TreeSpecError, match=needle):
        build_tree(spec)


def test_explicit_diameters_validated():
    ok = ExplicitDiameters((Fraction(1), Fraction(1, 3), Fraction(1, 10)))
    t = build_tree(TreeSpec(PAdic(2), 2, ok))
    assert t.diameter(V(1, 1)) == Fraction(1, 10)
    with pytest.raises(TreeSpecError):
        build_tree(TreeSpec(PAdic(2), 2, ExplicitDiameters((Fraction(1), Fraction(1, 2), Fraction(1, 2)))))
    with pytest.raises(TreeSpecError):
        build_tree(TreeSpec(PAdic(2), 1, ExplicitDiameters(
            {"": Fraction(1), "0": Fraction(1, 2), "1": Fraction(1, 3)})))


def test_address_round_trip():
    v = Vertex.parse("2.0.1")
    assert v == V(2, 0, 1) and str(v) == "2.0.1"
    assert Vertex.parse("") == V()
    assert V(2, 0, 1).ancestor(1) == V(2)


def test_unknown_vertex_rejected():
    t = make(PAdic(2), 2)
    with pytest.raises(ValueError):
        t.measure(V(0, 2))


def test_deep_level_regular_without_materialising():
    t = make(PAdic(2), 20)
    assert t.n_leaves == 2**20
    assert t.measure(V(*([1] * 20))) == Fraction(1, 2**20)
