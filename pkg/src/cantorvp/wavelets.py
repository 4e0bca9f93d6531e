"""Ultrametric wavelet basis on the leaves of a truncated tree.

For a support vertex ``w`` with ``n`` children and a frequency ``j`` in
1..n-1 the wavelet is

    psi_{w,j}(x) = mu([w])**-0.5 * exp(2*pi*i * j * c(x) / n) * 1_{[w]}(x)

where ``c(x)`` is the position of the child of ``w`` that contains ``x``.
Together with the constant 1 these functions form an orthonormal basis of
the functions that are constant on leaves, with inner product
``<f, g> = sum_leaves f * conj(g) * mu(leaf)``.

Transforms run level by level with FFTs over sibling groups, so analysis and
synthesis cost O(N * L) and never build the dense basis matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tree import LeafPoint, TruncatedTree, Vertex


@dataclass(frozen=True, order=True)
class WaveletIndex:
    support: Vertex
    frequency: int


CONSTANT = None  # basis position 0 holds the constant function


def inner(tree: TruncatedTree, f, g) -> complex:
    """mu-weighted inner product of two leaf functions."""
    return complex(np.sum(np.asarray(f) * np.conj(np.asarray(g)) * tree.leaf_measures))


def norm(tree: TruncatedTree, f) -> float:
    f = np.asarray(f)
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * tree.leaf_measures)))


def evaluate_wavelet(tree: TruncatedTree, idx: WaveletIndex, x: LeafPoint) -> complex:
    w, j = idx.support, idx.frequency
    n = tree.n_children(w)
    if n < 2 or not 1 <= j < n:
        raise ValueError(f"no wavelet with support {w} and frequency {j}")
    if not x.is_descendant_of(w):
        return 0j
    c = x.address[w.level]
    return float(tree.measure(w)) ** -0.5 * np.exp(2j * np.pi * j * c / n)


class WaveletBasis:
    """Constant function followed by every wavelet, ordered by level, address, frequency."""

    def __init__(self, tree: TruncatedTree):
        self.tree = tree
        lv = tree.levels
        self._offsets = []
        pos = 1
        for lvl in range(tree.depth):
            n = lv.counts[lvl]
            off = np.empty(len(n), dtype=np.int64)
            off[0] = pos
            np.cumsum(n[:-1] - 1, out=off[1:])
            off[1:] += pos
            self._offsets.append(off)
            pos += int(np.sum(n - 1))
        self.dimension = pos
        if pos != tree.n_leaves:
            raise AssertionError("wavelet count does not match the number of leaves")

    def __len__(self):
        return self.dimension

    @cached_property
    def elements(self) -> list:
        """``[CONSTANT, WaveletIndex, ...]`` in basis order."""
        out = [CONSTANT]
        for lvl in range(self.tree.depth):
            for i, n in enumerate(self.tree.levels.counts[lvl]):
                w = self.tree.vertex_at(lvl, i)
                out.extend(WaveletIndex(w, j) for j in range(1, int(n)))
        return out

    @cached_property
    def support_of(self) -> tuple[np.ndarray, np.ndarray]:
        """(level, level-order index) of each basis element's support; -1 for the constant."""
        level = np.full(self.dimension, -1, dtype=np.int64)
        index = np.full(self.dimension, -1, dtype=np.int64)
        for lvl, off in enumerate(self._offsets):
            n = self.tree.levels.counts[lvl]
            idx = np.repeat(np.arange(len(n)), n - 1)
            pos = np.repeat(off, n - 1) + _ramp(n - 1)
            level[pos] = lvl
            index[pos] = idx
        return level, index

    def position(self, idx: WaveletIndex) -> int:
        w = idx.support
        i = self.tree.index_of(w)
        n = int(self.tree.levels.counts[w.level][i])
        if not 1 <= idx.frequency < n:
            raise ValueError(f"frequency {idx.frequency} out of range for support {w}")
        return int(self._offsets[w.level][i]) + idx.frequency - 1

    def _groups(self, lvl):
        """Vertices at ``lvl`` grouped by child count: yields (n, vertex indices)."""
        counts = self.tree.levels.counts[lvl]
        for n in np.unique(counts):
            yield int(n), np.flatnonzero(counts == n)

    def analyze(self, f) -> np.ndarray:
        """Coefficients <f, phi_k> for every basis element."""
        tree = self.tree
        f = np.asarray(f)
        if f.shape[-1] != tree.n_leaves:
            raise ValueError(f"function has {f.shape[-1]} values, tree has {tree.n_leaves} leaves")
        lv = tree.levels
        batch = f.shape[:-1]
        out = np.zeros(batch + (self.dimension,), dtype=complex)
        integral = f * tree.leaf_measures
        for lvl in range(tree.depth - 1, -1, -1):
            fc = lv.first_child[lvl]
            mu = tree.measure_array(lvl)
            for n, idx in self._groups(lvl):
                block = integral[..., fc[idx][:, None] + np.arange(n)]
                spec = np.fft.fft(block, axis=-1)[..., 1:] * (mu[idx] ** -0.5)[:, None]
                pos = self._offsets[lvl][idx][:, None] + np.arange(n - 1)
                out[..., pos] = spec
            integral = _sum_children(integral, fc)
        out[..., 0] = integral[..., 0]
        return out

    def synthesize(self, coeffs) -> np.ndarray:
        """Leaf values of sum_k coeffs[k] * phi_k."""
        tree = self.tree
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-1] != self.dimension:
            raise ValueError(f"expected {self.dimension} coefficients, got {coeffs.shape[-1]}")
        lv = tree.levels
        batch = coeffs.shape[:-1]
        f = np.broadcast_to(coeffs[..., :1], batch + (tree.n_leaves,)).astype(complex)
        for lvl in range(tree.depth):
            fc = lv.first_child[lvl]
            mu = tree.measure_array(lvl)
            child_vals = np.zeros(batch + (tree.level_sizes[lvl + 1],), dtype=complex)
            for n, idx in self._groups(lvl):
                block = np.zeros(batch + (len(idx), n), dtype=complex)
                pos = self._offsets[lvl][idx][:, None] + np.arange(n - 1)
                block[..., 1:] = coeffs[..., pos]
                vals = n * np.fft.ifft(block, axis=-1) * (mu[idx] ** -0.5)[:, None]
                child_vals[..., fc[idx][:, None] + np.arange(n)] = vals
            f = f + child_vals[..., lv.leaf_anc[lvl + 1]]
        return f

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense N x N matrix whose column k holds phi_k at every leaf."""
        tree = self.tree
        lv = tree.levels
        N = tree.n_leaves
        phi = np.zeros((N, self.dimension), dtype=complex)
        phi[:, 0] = 1.0
        rows = np.arange(N)
        for lvl in range(tree.depth):
            w = lv.leaf_anc[lvl]
            c = lv.child_pos[lvl + 1][lv.leaf_anc[lvl + 1]]
            n = lv.counts[lvl][w]
            scale = tree.measure_array(lvl)[w] ** -0.5
            for j in range(1, int(n.max())):
                has = j < n
                col = self._offsets[lvl][w[has]] + j - 1
                phi[rows[has], col] = scale[has] * np.exp(2j * np.pi * j * c[has] / n[has])
        return phi

    def gram(self) -> np.ndarray:
        phi = self.matrix
        return phi.conj().T @ (phi * self.tree.leaf_measures[:, None])


def _ramp(lengths):
    """Concatenated aranges: [0..l0-1, 0..l1-1, ...]."""
    lengths = np.asarray(lengths)
    total = int(lengths.sum())
    starts = np.repeat(np.cumsum(lengths) - lengths, lengths)
    return np.arange(total) - starts


def _sum_children(values, first_child):
    """Sum a per-vertex array over sibling groups (contiguous runs) along the last axis."""
    return np.add.reduceat(values, first_child[:-1], axis=-1)


def enumerate_basis(tree: TruncatedTree) -> WaveletBasis:
    return WaveletBasis(tree)


def analyze(tree_or_basis, f) -> np.ndarray:
    return _basis(tree_or_basis).analyze(f)


def synthesize(tree_or_basis, coeffs) -> np.ndarray:
    return _basis(tree_or_basis).synthesize(coeffs)


def _basis(obj) -> WaveletBasis:
    if isinstance(obj, WaveletBasis):
        return obj
    return WaveletBasis(obj)
