"""The operator D^s on functions that are constant on the leaves.

For a leaf ``z`` the operator is the integral

    (D^s f)(z) = sum over leaves y != z of K(z, y) * (f(z) - f(y)) * mu(y)

with a kernel that depends only on the join ``w = z ^ y``:

* ``general``:  K = diam([w])**(s-3) / (mu([w]) * (1 - 1/n_w)),
  i.e. d**(s-3) divided by the measure of the sphere of radius d around z;
* ``aligned``:  K = diam([w])**(s-4) / (1 - 1/n_w), which equals the general
  kernel when mu == diam on every vertex and is only allowed then.

Sign convention: D^s >= 0, its off-diagonal matrix entries are <= 0, and
-D^s generates a Markov semigroup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import wavelets
from .measure_zeta import sphere_measure
from .tree import LeafPoint, TruncatedTree, Vertex, join

DEFAULT_CAP = 4096
KERNEL_FORMS = ("general", "aligned")


@dataclass(frozen=True)
class OperatorParams:
    s: float
    kernel_form: str = "general"

    def __post_init__(self):
        if self.kernel_form not in KERNEL_FORMS:
            raise ValueError(f"kernel_form must be one of {KERNEL_FORMS}, got {self.kernel_form!r}")
        if not np.isfinite(self.s):
            raise ValueError("s must be a finite real number")


def check_params(tree: TruncatedTree, params: OperatorParams) -> None:
    if params.kernel_form == "aligned" and not tree.aligned:
        raise ValueError("the aligned kernel needs measure == diameter on every vertex; "
                         "this tree is not aligned, use kernel_form='general'")


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    params: OperatorParams

    @property
    def shape(self):
        return self.entries.shape


@dataclass
class EigenvalueRecord:
    support: Vertex
    lam: float
    multiplicity: int
    two_term_value: float = np.nan          # sphere term plus kernel integral off [v]
    shifted_exponent_value: float = np.nan  # variant with exponent s-4 in the first term


# --------------------------------------------------------------------------
# kernel


def _kernel_scalar(s, form, diam, mu, n):
    if form == "general":
        return diam ** (s - 3) / (mu * (1 - 1 / n))
    return diam ** (s - 4) / (1 - 1 / n)


def kernel_value(tree: TruncatedTree, params: OperatorParams, x: LeafPoint, y: LeafPoint) -> float:
    if x == y:
        raise ValueError("the kernel is not defined on the diagonal")
    check_params(tree, params)
    w = join(x, y)
    return _kernel_scalar(params.s, params.kernel_form, float(tree.diameter(w)),
                          float(tree.measure(w)), tree.n_children(w))


def kernel_by_level(tree: TruncatedTree, params: OperatorParams) -> list[np.ndarray]:
    """Kernel value for every internal vertex, as one array per level 0..L-1."""
    check_params(tree, params)
    return [_kernel_scalar(params.s, params.kernel_form, tree.diameter_array(lvl),
                           tree.measure_array(lvl), tree.children_array(lvl).astype(float))
            for lvl in range(tree.depth)]


def join_levels(tree: TruncatedTree) -> np.ndarray:
    """N x N matrix of join levels between leaves (L on the diagonal)."""
    anc = tree.levels.leaf_anc
    J = np.zeros((tree.n_leaves, tree.n_leaves), dtype=np.int64)
    for lvl in range(1, tree.depth + 1):
        J += anc[lvl][:, None] == anc[lvl][None, :]
    return J


def kernel_matrix(tree: TruncatedTree, params: OperatorParams) -> np.ndarray:
    """Dense leaf-by-leaf kernel, zero on the diagonal."""
    K = kernel_by_level(tree, params)
    anc = tree.levels.leaf_anc
    J = join_levels(tree)
    out = np.zeros(J.shape)
    rows = np.arange(tree.n_leaves)
    for lvl in range(tree.depth):
        mask = J == lvl
        out[mask] = K[lvl][np.broadcast_to(anc[lvl][:, None], J.shape)[mask]]
    out[rows, rows] = 0.0
    return out


# --------------------------------------------------------------------------
# application and assembly


def apply(tree: TruncatedTree, params: OperatorParams, f, method: str = "fast") -> np.ndarray:
    """D^s f at every leaf.

    ``fast`` groups the other leaves by annulus (join level) using subtree
    integrals, O(N * L).  ``direct`` is the O(N^2) double sum.
    """
    f = np.asarray(f)
    if f.shape[-1] != tree.n_leaves:
        raise ValueError(f"function has {f.shape[-1]} values, tree has {tree.n_leaves} leaves")
    if method == "direct":
        Km = kernel_matrix(tree, params) * tree.leaf_measures[None, :]
        return f * Km.sum(axis=1) - f @ Km.T
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    K = kernel_by_level(tree, params)
    lv = tree.levels
    anc = lv.leaf_anc
    integrals = [f * tree.leaf_measures]
    for lvl in range(tree.depth - 1, -1, -1):
        integrals.append(np.add.reduceat(integrals[-1], lv.first_child[lvl][:-1], axis=-1))
    integrals.reverse()
    out = np.zeros(np.broadcast_shapes(f.shape), dtype=np.result_type(f, float))
    for lvl in range(tree.depth):
        a, c = anc[lvl], anc[lvl + 1]
        shell_mass = tree.measure_array(lvl)[a] - tree.measure_array(lvl + 1)[c]
        shell_integral = integrals[lvl][..., a] - integrals[lvl + 1][..., c]
        out = out + K[lvl][a] * (f * shell_mass - shell_integral)
    return out


def assemble_matrix(tree: TruncatedTree, params: OperatorParams, cap: int = DEFAULT_CAP) -> OperatorMatrix:
    """Exact matrix M in leaf coordinates with apply(f) == M @ f."""
    if tree.n_leaves > cap:
        raise ValueError(f"{tree.n_leaves} leaves exceeds the dense assembly cap {cap}")
    Km = kernel_matrix(tree, params) * tree.leaf_measures[None, :]
    M = -Km
    M[np.diag_indices_from(M)] = Km.sum(axis=1)
    return OperatorMatrix(M, params)


# --------------------------------------------------------------------------
# eigenvalues


def eigenvalues_by_level(tree: TruncatedTree, params: OperatorParams) -> list[np.ndarray]:
    """Closed-form eigenvalue of the wavelets supported on each internal vertex.

    lambda(w) = K_w * mu([w]) + sum over proper ancestors a of K_a * mu([a]) * (1 - 1/n_a):
    the own-ball term collects the siblings' children, each ancestor contributes
    its annulus.
    """
    K = kernel_by_level(tree, params)
    out, above = [], np.zeros(1)
    for lvl in range(tree.depth):
        mu = tree.measure_array(lvl)
        n = tree.children_array(lvl)
        out.append(K[lvl] * mu + above)
        if lvl + 1 < tree.depth:
            shell = K[lvl] * mu * (1 - 1 / n)
            above = np.repeat(above + shell, n)
    return out


def eigenvalue_closed_form(tree: TruncatedTree, params: OperatorParams, support: Vertex,
                           cross_check: bool = True) -> EigenvalueRecord:
    """Eigenvalue record for the wavelets on ``support``.

    The ancestor sum is the primary value.  With ``cross_check`` the two-term
    expression is also evaluated: for a child v of the support and a leaf z in
    v, mu([v]) * diam^(s-3) / mu(sphere) plus the kernel integral over every
    leaf outside [v], summed leaf by leaf.  ``shifted_exponent_value`` swaps
    the first term for diam^(s-4) / ((1 - 1/n) * n) with the aligned kernel.
    """
    check_params(tree, params)
    if support.level >= tree.depth:
        raise ValueError(f"{support} is a leaf; no wavelet is supported there")
    n = tree.n_children(support)
    s = params.s
    lam = _kernel_scalar(s, params.kernel_form, float(tree.diameter(support)),
                         float(tree.measure(support)), n) * float(tree.measure(support))
    for lvl in range(support.level):
        a = support.ancestor(lvl)
        na = tree.n_children(a)
        mu_a = float(tree.measure(a))
        lam += _kernel_scalar(s, params.kernel_form, float(tree.diameter(a)), mu_a, na) \
            * mu_a * (1 - 1 / na)
    rec = EigenvalueRecord(support, lam, n - 1)
    if cross_check:
        rec.two_term_value, rec.shifted_exponent_value = _two_term_forms(tree, params, support)
    return rec


def _two_term_forms(tree, params, w):
    s = params.s
    v = w.child(0)
    z = Vertex(v.address + (0,) * (tree.depth - v.level))
    zi = tree.leaf_index(z)
    d = tree.diameter(w)
    n = tree.n_children(w)
    sphere = sphere_measure(tree, z, d)
    first = float(tree.measure(v)) * float(d) ** (s - 3) / float(sphere.value)
    anc = tree.levels.leaf_anc
    outside = anc[v.level] != tree.index_of(v)
    J = np.zeros(tree.n_leaves, dtype=np.int64)
    for lvl in range(1, tree.depth + 1):
        J += anc[lvl] == anc[lvl][zi]
    mu_y = tree.leaf_measures
    general = np.zeros(tree.n_leaves)
    aligned = np.zeros(tree.n_leaves)
    for lvl in range(tree.depth):
        sel = outside & (J == lvl)
        if not sel.any():
            continue
        a = z.ancestor(lvl)
        da, ma, na = float(tree.diameter(a)), float(tree.measure(a)), tree.n_children(a)
        general[sel] = _kernel_scalar(s, params.kernel_form, da, ma, na)
        aligned[sel] = _kernel_scalar(s, "aligned", da, ma, na)
    two_term = first + float(np.sum(general * mu_y))
    shifted = float(d) ** (s - 4) / ((1 - 1 / n) * n) + float(np.sum(aligned * mu_y))
    return two_term, shifted


def spectrum(tree: TruncatedTree, params: OperatorParams,
             basis: Optional[wavelets.WaveletBasis] = None) -> np.ndarray:
    """Eigenvalue of every basis element, in basis order (constant first, value 0)."""
    basis = basis if basis is not None else wavelets.WaveletBasis(tree)
    by_level = eigenvalues_by_level(tree, params)
    level, index = basis.support_of
    lam = np.zeros(basis.dimension)
    for lvl in range(tree.depth):
        sel = level == lvl
        lam[sel] = by_level[lvl][index[sel]]
    return lam


def spectrum_records(tree: TruncatedTree, params: OperatorParams) -> list[EigenvalueRecord]:
    """One record per internal vertex, level by level."""
    by_level = eigenvalues_by_level(tree, params)
    out = []
    for lvl in range(tree.depth):
        counts = tree.children_array(lvl)
        for i, lam in enumerate(by_level[lvl]):
            out.append(EigenvalueRecord(tree.vertex_at(lvl, i), float(lam), int(counts[i]) - 1))
    return out


# --------------------------------------------------------------------------
# diagnostics


@dataclass
class WaveletMatrixReport:
    max_off_diagonal: float
    max_diagonal_deviation: float
    constant_diagonal: float
    diagonal: np.ndarray = field(repr=False)
    closed_form: np.ndarray = field(repr=False)


def wavelet_matrix(tree: TruncatedTree, params: OperatorParams,
                   basis: Optional[wavelets.WaveletBasis] = None) -> WaveletMatrixReport:
    """Conjugate the exact matrix into wavelet coordinates and compare with the closed form."""
    basis = basis if basis is not None else wavelets.WaveletBasis(tree)
    M = assemble_matrix(tree, params).entries
    phi = basis.matrix
    W = phi.conj().T @ (tree.leaf_measures[:, None] * (M @ phi))
    diag = np.real(np.diag(W)).copy()
    off = W - np.diag(np.diag(W))
    lam = spectrum(tree, params, basis)
    return WaveletMatrixReport(
        max_off_diagonal=float(np.abs(off).max()) if off.size > 1 else 0.0,
        max_diagonal_deviation=float(np.abs(np.diag(W) - lam).max()),
        constant_diagonal=float(abs(W[0, 0])),
        diagonal=diag,
        closed_form=lam,
    )


def _trend(seq, rel=1e-9):
    seq = np.asarray(seq, dtype=float)
    if len(seq) < 2:
        return "undetermined"
    r = seq[-1] / seq[-2]
    if r > 1 + rel:
        return "growing"
    if r < 1 - rel:
        return "decreasing"
    return "constant"


@dataclass
class BoundednessReport:
    s: float
    depth: int
    kernel_sup: float
    kernel_by_level: list[float]
    kernel_trend: str
    kernel_bounded: bool
    max_eigenvalue_by_level: list[float]
    max_eigenvalue_trend: str
    min_eigenvalue_by_level: list[float]
    min_eigenvalue_trend: str

    @property
    def spectrum_bounded(self) -> bool:
        return self.max_eigenvalue_trend != "growing"


def boundedness_report(tree: TruncatedTree, params: OperatorParams) -> BoundednessReport:
    """Empirical boundedness of the kernel and the spectrum at resolution L.

    A trend is read from the two deepest levels; nothing is claimed beyond depth L.
    """
    K = [float(k.max()) for k in kernel_by_level(tree, params)]
    lam = eigenvalues_by_level(tree, params)
    lmax = [float(x.max()) for x in lam]
    lmin = [float(x.min()) for x in lam]
    kt = _trend(K)
    return BoundednessReport(
        s=params.s, depth=tree.depth, kernel_sup=max(K), kernel_by_level=K,
        kernel_trend=kt, kernel_bounded=kt != "growing",
        max_eigenvalue_by_level=lmax, max_eigenvalue_trend=_trend(lmax),
        min_eigenvalue_by_level=lmin, min_eigenvalue_trend=_trend(lmin),
    )
