import numpy as np
import pytest

from cantorvp import heat
from cantorvp import operator as vp
from cantorvp.operator import OperatorParams
from cantorvp.tree import LevelRegular, PAdic, RandomBounded, Vertex
from cantorvp.wavelets import WaveletBasis, WaveletIndex, norm
from conftest import make


def two_state(t):
    e = np.exp(-2 * t)
    return np.array([[1 + e, 1 - e], [1 - e, 1 + e]]) / 2


def test_semigroup_identity_and_constants():
    t = make(LevelRegular([2, 3]), 3)
    P = OperatorParams(2.5)
    f = np.random.default_rng(0).standard_normal(t.n_leaves)
    np.testing.assert_allclose(heat.semigroup_apply(t, P, f, 0.0), f, atol=1e-13)
    np.testing.assert_allclose(heat.semigroup_apply(t, P, np.full(t.n_leaves, 3.0), 0.7), 3.0,
                               atol=1e-13)
    with pytest.raises(ValueError):
        heat.semigroup_apply(t, P, f, -1.0)


def test_semigroup_s4_closed_form():
    t = make(PAdic(2), 4)
    f = np.random.default_rng(1).standard_normal(t.n_leaves)
    m = f @ t.leaf_measures
    for s in (0.3, 2.0):
        np.testing.assert_allclose(heat.semigroup_apply(t, OperatorParams(4.0), f, s),
                                   np.exp(-2 * s) * (f - m) + m, atol=1e-12)


def test_two_leaf_kernel_and_oracle():
    t = make(PAdic(2), 1)
    P = OperatorParams(4.0)
    for s in (0.1, 1.0, 3.0):
        np.testing.assert_allclose(heat.transition_matrix(t, P, s), two_state(s), atol=1e-14)
        np.testing.assert_allclose(heat.matrix_exponential_oracle(t, P, s), two_state(s), atol=1e-14)
    np.testing.assert_allclose(heat.matrix_exponential_oracle(t, P, 0.0), np.eye(2))


def test_kernel_integrates_to_one():
    t = make(RandomBounded(2, 4, seed=2), 3)
    H = heat.heat_kernel(t, OperatorParams(1.5), 0.4)
    np.testing.assert_allclose(H.values @ t.leaf_measures, 1.0, atol=1e-12)


def test_long_time_kernel_is_flat():
    t = make(PAdic(2), 4)
    H = heat.heat_kernel(t, OperatorParams(3.0), 50.0)
    assert np.abs(H.values - 1).max() < 1e-12


def test_spectral_kernel_matches_expm():
    t = make(PAdic(2), 3)
    P = OperatorParams(3.0)
    diff = np.abs(heat.transition_matrix(t, P, 1.0) - heat.matrix_exponential_oracle(t, P, 1.0))
    assert diff.max() < 1e-8


def test_heat_kernel_needs_positive_time():
    with pytest.raises(ValueError):
        heat.heat_kernel(make(PAdic(2), 2), OperatorParams(3.0), 0.0)


def test_green_classes():
    t = make(PAdic(2), 4)
    g = heat.green_function(t, OperatorParams(1.5))
    assert g.convergence_class == "Convergent"
    assert g.identity_error < 1e-8
    g4 = heat.green_function(t, OperatorParams(4.0))
    assert g4.convergence_class == "Divergent"
    assert g4.values is None


def test_green_ratio_band():
    assert heat.classify_green([1.0, 1.0, 1.0])[0] == "Indeterminate"
    assert heat.classify_green([1.0, 0.5])[0] == "Convergent"
    assert heat.classify_green([1.0, 2.0])[0] == "Divergent"
    assert heat.classify_green([1.0])[0] == "Indeterminate"


def test_green_inverts_on_mean_zero_functions():
    t = make(PAdic(3), 3)
    P = OperatorParams(1.2)
    g = heat.green_function(t, P)
    assert g.convergence_class == "Convergent"
    f = np.random.default_rng(3).standard_normal(t.n_leaves)
    f -= f @ t.leaf_measures
    u = g.values @ (f * t.leaf_measures)
    np.testing.assert_allclose(vp.apply(t, P, u), f, atol=1e-10)


def test_markov_checks_on_indicator():
    t = make(PAdic(2), 3)
    e = np.zeros(t.n_leaves)
    e[2] = 1
    rep = heat.markov_checks(t, OperatorParams(3.0), [0.5], functions=e)
    assert rep.passed


@pytest.mark.parametrize("s", [1.5, 3.0, 4.0])
def test_markov_checks_random(s):
    rep = heat.markov_checks(make(LevelRegular([2, 3]), 4), OperatorParams(s), [0.1, 0.5, 1.0],
                             trials=100, seed=7)
    assert rep.trials == 100 and rep.passed


def test_sobolev_norms():
    t = make(PAdic(2), 3)
    assert heat.sobolev_norm(t, OperatorParams(3.0), np.ones(t.n_leaves)).total == pytest.approx(1.0)
    B = WaveletBasis(t)
    k = B.position(WaveletIndex(Vertex((1,)), 1))
    sn = heat.sobolev_norm(t, OperatorParams(3.0), B.matrix[:, k])
    assert sn.total == pytest.approx(np.sqrt(1 + 3.0**2), rel=1e-12)
    f = np.random.default_rng(4).standard_normal(t.n_leaves)
    f -= f @ t.leaf_measures
    f /= norm(t, f)
    sn = heat.sobolev_norm(t, OperatorParams(4.0), f)
    assert sn.total == pytest.approx(np.sqrt(5), rel=1e-12)
    assert sn.spectral_total == pytest.approx(sn.total, rel=1e-12)
