"""Heat semigroup, heat kernel, Green function and Sobolev norm.

Everything here is driven by the spectral decomposition: the wavelet basis is
an orthonormal eigenbasis of D^s, so ``exp(-t D^s)`` and the Green operator
act diagonally on wavelet coefficients.  The matrix exponential of the
assembled operator is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import operator as vp
from .operator import OperatorParams
from .tree import TruncatedTree
from .wavelets import WaveletBasis, norm


@dataclass
class SpectralDecomposition:
    """Eigenvalues in basis order together with the wavelet eigenbasis."""

    tree: TruncatedTree
    params: OperatorParams
    basis: WaveletBasis
    eigenvalues: np.ndarray

    @property
    def eigenpairs(self):
        return list(zip(self.eigenvalues, self.basis.elements))

    @property
    def n_zero(self) -> int:
        return int(np.sum(self.eigenvalues == 0))


def spectral_decomposition(tree: TruncatedTree, params: OperatorParams) -> SpectralDecomposition:
    basis = WaveletBasis(tree)
    return SpectralDecomposition(tree, params, basis, vp.spectrum(tree, params, basis))


def _decomp(tree, params, decomposition):
    if decomposition is not None:
        return decomposition
    return spectral_decomposition(tree, params)


def _maybe_real(x, tree):
    # real-valued kernels (always the case up to round-off) are returned as real arrays
    if np.iscomplexobj(x) and np.abs(x.imag).max() <= 1e-12 * max(1.0, np.abs(x).max()):
        return x.real
    return x


# --------------------------------------------------------------------------
# semigroup and heat kernel


def semigroup_apply(tree: TruncatedTree, params: OperatorParams, f, t: float,
                    decomposition: Optional[SpectralDecomposition] = None) -> np.ndarray:
    """exp(-t D^s) f computed on wavelet coefficients."""
    if t < 0:
        raise ValueError("t must be >= 0")
    sd = _decomp(tree, params, decomposition)
    f = np.asarray(f)
    coeffs = sd.basis.analyze(f) * np.exp(-sd.eigenvalues * t)
    out = sd.basis.synthesize(coeffs)
    return out.real if not np.iscomplexobj(f) else out


@dataclass
class HeatKernelEval:
    t: float
    values: np.ndarray                       # H(t, leaf_i, leaf_k)
    measures: np.ndarray = field(repr=False)

    @property
    def transition(self) -> np.ndarray:
        """p_t(i, k) = H(t, i, k) * mu_k; rows are probability vectors."""
        return self.values * self.measures[None, :]


def heat_kernel(tree: TruncatedTree, params: OperatorParams, t: float,
                decomposition: Optional[SpectralDecomposition] = None) -> HeatKernelEval:
    """H(t, x, y) = sum_k exp(-lambda_k t) phi_k(x) conj(phi_k(y))."""
    if t <= 0:
        raise ValueError("the heat kernel needs t > 0")
    sd = _decomp(tree, params, decomposition)
    phi = sd.basis.matrix
    H = (phi * np.exp(-sd.eigenvalues * t)[None, :]) @ phi.conj().T
    return HeatKernelEval(t, _maybe_real(H, tree), tree.leaf_measures)


def transition_matrix(tree: TruncatedTree, params: OperatorParams, t: float,
                      decomposition: Optional[SpectralDecomposition] = None) -> np.ndarray:
    if t == 0:
        return np.eye(tree.n_leaves)
    return heat_kernel(tree, params, t, decomposition).transition


def matrix_exponential_oracle(tree: TruncatedTree, params: OperatorParams, t: float,
                              cap: int = vp.DEFAULT_CAP) -> np.ndarray:
    """exp(-t M) of the assembled matrix (Pade scaling and squaring)."""
    M = vp.assemble_matrix(tree, params, cap=cap).entries
    if t == 0:
        return np.eye(len(M))
    return scipy.linalg.expm(-t * M)


# --------------------------------------------------------------------------
# Green function


@dataclass
class GreenEval:
    convergence_class: str              # Convergent / Divergent / Indeterminate
    level_sums: list[float]             # sum over level-l supports of multiplicity / lambda
    ratios: list[float]
    values: Optional[np.ndarray] = None  # G(leaf_i, leaf_k) when Convergent
    identity_error: float = np.nan       # max |M G_op - (I - P0)|


def green_level_sums(tree: TruncatedTree, params: OperatorParams) -> list[float]:
    lam = vp.eigenvalues_by_level(tree, params)
    return [float(np.sum((tree.children_array(lvl) - 1) / lam[lvl])) for lvl in range(tree.depth)]


def classify_green(level_sums: Sequence[float], band: float = 1e-2) -> tuple[str, list[float]]:
    ratios = [b / a for a, b in zip(level_sums, level_sums[1:])]
    if not ratios:
        return "Indeterminate", ratios
    r = ratios[-1]
    if r < 1 - band:
        return "Convergent", ratios
    if r > 1 + band:
        return "Divergent", ratios
    return "Indeterminate", ratios


def green_function(tree: TruncatedTree, params: OperatorParams,
                   decomposition: Optional[SpectralDecomposition] = None,
                   band: float = 1e-2) -> GreenEval:
    """Green function on the complement of constants, gated by a ratio test.

    The sum of inverse eigenvalues is grouped by support level; the ratio of
    the two deepest level sums decides Convergent (< 1 - band), Divergent
    (> 1 + band) or Indeterminate.  Values are only produced when Convergent,
    and are then checked against M @ G_op == I - P0 where
    G_op = G * diag(mu) is the operator matrix and P0(i, k) = mu_k.
    """
    sums = green_level_sums(tree, params)
    cls, ratios = classify_green(sums, band)
    out = GreenEval(cls, sums, ratios)
    if cls != "Convergent":
        return out
    sd = _decomp(tree, params, decomposition)
    phi = sd.basis.matrix[:, 1:]
    G = (phi / sd.eigenvalues[None, 1:]) @ phi.conj().T
    out.values = _maybe_real(G, tree)
    out.identity_error = green_identity_error(tree, params, out.values)
    return out


def green_identity_error(tree, params, G) -> float:
    M = vp.assemble_matrix(tree, params).entries
    mu = tree.leaf_measures
    P0 = np.broadcast_to(mu, M.shape)
    return float(np.abs(M @ (G * mu[None, :]) - (np.eye(len(M)) - P0)).max())


# --------------------------------------------------------------------------
# Markov property


@dataclass
class MarkovReport:
    trials: int
    times: list[float]
    positivity_min: float
    upper_max: float
    conservation_error: float
    contraction_excess: float
    passed_positivity: bool
    passed_upper: bool
    passed_conservation: bool
    passed_contraction: bool

    @property
    def passed(self) -> bool:
        return (self.passed_positivity and self.passed_upper and self.passed_conservation
                and self.passed_contraction)


def markov_checks(tree: TruncatedTree, params: OperatorParams, t_list: Sequence[float],
                  trials: int = 100, seed: int = 0, functions=None,
                  decomposition: Optional[SpectralDecomposition] = None) -> MarkovReport:
    """Positivity, sub-Markov bound, conservation and L2 contraction of exp(-t D^s).

    Test functions are uniform on [0, 1]^N (so both f >= 0 and f <= 1 hold)
    unless ``functions`` is given.
    """
    sd = _decomp(tree, params, decomposition)
    rng = np.random.default_rng(seed)
    F = rng.random((trials, tree.n_leaves)) if functions is None else np.atleast_2d(functions)
    ones = np.ones(tree.n_leaves)
    pos_min, up_max, cons, excess = np.inf, -np.inf, 0.0, -np.inf
    for t in t_list:
        G = np.real(semigroup_apply(tree, params, F, t, sd))
        pos_min = min(pos_min, float(G.min()))
        up_max = max(up_max, float(G.max()))
        cons = max(cons, float(np.abs(semigroup_apply(tree, params, ones, t, sd) - 1).max()))
        for f, g in zip(F, G):
            excess = max(excess, norm(tree, g) - norm(tree, f))
    return MarkovReport(
        trials=len(F), times=list(t_list), positivity_min=pos_min, upper_max=up_max,
        conservation_error=cons, contraction_excess=excess,
        passed_positivity=pos_min >= -1e-10, passed_upper=up_max <= 1 + 1e-10,
        passed_conservation=cons <= 1e-12, passed_contraction=excess <= 1e-12,
    )


# --------------------------------------------------------------------------
# Sobolev norm


@dataclass
class SobolevNorm:
    l2_part: float
    grad_part: float
    total: float
    spectral_total: float


def sobolev_norm(tree: TruncatedTree, params: OperatorParams, f,
                 decomposition: Optional[SpectralDecomposition] = None) -> SobolevNorm:
    """(||f||^2 + ||D^s f||^2)^(1/2), directly and from wavelet coefficients."""
    l2 = norm(tree, f)
    grad = norm(tree, vp.apply(tree, params, f))
    sd = _decomp(tree, params, decomposition)
    c = sd.basis.analyze(f)
    spectral = float(np.sqrt(np.sum((1 + sd.eigenvalues**2) * np.abs(c) ** 2)))
    return SobolevNorm(l2, grad, float(np.hypot(l2, grad)), spectral)
