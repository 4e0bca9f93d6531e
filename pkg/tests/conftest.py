import pytest

from cantorvp import LevelRegular, PAdic, TreeSpec, build_tree


def make(family, depth, metric="canonical"):
    return build_tree(TreeSpec(family, depth, metric))


@pytest.fixture
def p2_l2():
    return make(PAdic(2), 2)


@pytest.fixture
def lr23_l3():
    return make(LevelRegular([2, 3]), 3)
