"""Zeta function, abscissa of convergence, kappa sums and the equity measure.

The zeta function of the tree is the Dirichlet series over vertices,
``zeta(s) = sum_v diam([v])**s``; here it is always a finite sum over levels
0..L.  ``kappa(v, s)`` is the same sum restricted to the descendants of ``v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .tree import LeafPoint, TruncatedTree, Vertex


@dataclass
class ZetaPartial:
    s: float
    level_terms: list[float]
    cumulative: list[float]

    @property
    def value(self) -> float:
        return self.cumulative[-1]


@dataclass
class AbscissaEstimate:
    s0: float
    bracket: tuple[float, float]
    tolerance: float
    status: str = "converged"  # or "indeterminate"
    reason: str = ""

    @property
    def determinate(self) -> bool:
        return self.status == "converged"


@dataclass
class SphereMeasure:
    center: LeafPoint
    radius: Fraction
    value: Fraction
    aligned_value: Fraction
    aligned: bool


# --------------------------------------------------------------------------
# level sums


def _log_level_terms(tree: TruncatedTree, s: float, first: int = 0) -> np.ndarray:
    """log of sum_{v at level l} diam^s for l = first..L."""
    ld = tree.level_diameters
    out = np.empty(tree.depth + 1 - first)
    for k, lvl in enumerate(range(first, tree.depth + 1)):
        if ld is not None:
            out[k] = math.log(tree.level_sizes[lvl]) + s * math.log(ld[lvl])
        else:
            logs = s * np.log(tree.diameter_array(lvl))
            m = logs.max()
            out[k] = m + math.log(np.exp(logs - m).sum())
    return out


def level_terms(tree: TruncatedTree, s: float, levels: Optional[int] = None) -> list[float]:
    levels = tree.depth if levels is None else levels
    ld = tree.level_diameters
    terms = []
    for lvl in range(levels + 1):
        if ld is not None:
            terms.append(float(tree.level_sizes[lvl]) * float(ld[lvl]) ** s)
        else:
            terms.append(float(np.sum(tree.diameter_array(lvl) ** s)))
    return terms


def zeta_partial(tree: TruncatedTree, s: float, levels: Optional[int] = None) -> ZetaPartial:
    """Finite Dirichlet sum over all vertices at levels 0..``levels`` (root included)."""
    levels = tree.depth if levels is None else levels
    if not 0 <= levels <= tree.depth:
        raise ValueError(f"levels must lie in [0, {tree.depth}], got {levels}")
    terms = level_terms(tree, s, levels)
    return ZetaPartial(s, terms, list(np.cumsum(terms)))


def _root_statistic(tree: TruncatedTree, s: float) -> float:
    """log of max over the deepest levels of (level term)^(1/level)."""
    L = tree.depth
    window = max(1, L // 4)
    first = L - window + 1
    logs = _log_level_terms(tree, s, first)
    return max(lt / lvl for lt, lvl in zip(logs, range(first, L + 1)))


def estimate_abscissa(tree: TruncatedTree, tolerance: float = 1e-6,
                      bracket: tuple[float, float] = (0.0, 8.0)) -> AbscissaEstimate:
    """Bisection on s of the root test applied to the per-level terms.

    The series is classified convergent at ``s`` when the root statistic of
    the deepest levels is below one.  If both ends of the bracket classify
    the same way there is no crossing to find, and the result is
    ``indeterminate`` rather than an extrapolated guess.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    lo, hi = bracket
    if tree.depth < 2:
        return AbscissaEstimate(math.nan, (lo, hi), tolerance, "indeterminate",
                                "depth below 2 leaves no levels for the root test")
    if _root_statistic(tree, lo) < 0:
        return AbscissaEstimate(math.nan, (lo, hi), tolerance, "indeterminate",
                                f"series already converges at the lower bracket end {lo}")
    if _root_statistic(tree, hi) >= 0:
        return AbscissaEstimate(math.nan, (lo, hi), tolerance, "indeterminate",
                                f"series still diverges at the upper bracket end {hi}")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _root_statistic(tree, mid) < 0:
            hi = mid
        else:
            lo = mid
    return AbscissaEstimate(0.5 * (lo + hi), (lo, hi), tolerance)


# --------------------------------------------------------------------------
# kappa


def _descendant_ranges(tree: TruncatedTree, vertex: Vertex):
    """Yield (level, lo, hi): level-order index ranges of the descendants of ``vertex``."""
    lv = tree.levels
    lo = tree.index_of(vertex)
    hi = lo + 1
    yield vertex.level, lo, hi
    for lvl in range(vertex.level, tree.depth):
        fc = lv.first_child[lvl]
        lo, hi = int(fc[lo]), int(fc[hi])
        yield lvl + 1, lo, hi


def kappa(tree: TruncatedTree, v: Vertex, s: float, generations: Optional[int] = None) -> float:
    """Sum of diam^s over the descendants of ``v`` (``v`` included), down to depth L.

    ``generations`` limits the sum to that many levels below ``v``.
    """
    tree.check_vertex(v)
    last = tree.depth if generations is None else min(tree.depth, v.level + generations)
    ld = tree.level_diameters
    if tree.is_level_regular and ld is not None:
        base = tree.level_sizes[v.level]
        return float(sum(float(tree.level_sizes[k] // base) * float(ld[k]) ** s
                         for k in range(v.level, last + 1)))
    total = 0.0
    for lvl, lo, hi in _descendant_ranges(tree, v):
        if lvl > last:
            break
        total += float(np.sum(tree.diameter_array(lvl)[lo:hi] ** s))
    return total


# --------------------------------------------------------------------------
# factorisation property


@dataclass
class FactorisationEntry:
    vertex: Vertex
    s: float
    kappa: float
    zeta: float
    target: float            # diam^(s - s0 + 1)
    deviation: float         # |kappa/zeta_L - target| / target
    corrected_deviation: float  # same, with zeta cut to the generations kappa sees
    tail_bound: float        # estimated relative truncation tail of zeta_L
    passed: bool


@dataclass
class FactorisationReport:
    s0: float
    tol: float
    entries: list[FactorisationEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def offending(self) -> list[Vertex]:
        seen = []
        for e in self.entries:
            if not e.passed and e.vertex not in seen:
                seen.append(e.vertex)
        return seen

    @property
    def max_corrected_deviation(self) -> float:
        return max(e.corrected_deviation for e in self.entries)


def sample_vertices(tree: TruncatedTree, limit: int = 2000) -> list[Vertex]:
    """All internal vertices of small trees; first and last per level otherwise."""
    internal = sum(tree.level_sizes[:-1])
    if internal <= limit:
        return [v for lvl in range(tree.depth) for v in tree.vertices(lvl)]
    out = []
    for lvl in range(tree.depth):
        n = tree.level_sizes[lvl]
        out.append(tree.vertex_at(lvl, 0))
        if n > 1:
            out.append(tree.vertex_at(lvl, n - 1))
    return out


def check_factorisation(tree: TruncatedTree, s_grid: Sequence[float], tol: float = 1e-6,
                        s0: Optional[float] = None,
                        vertices: Optional[Sequence[Vertex]] = None) -> FactorisationReport:
    """Compare kappa_v(s)/zeta(s) against diam([v])**(s - s0 + 1).

    Both sides are truncated at depth L, so the subtree below a level-l vertex
    sees only L - l generations.  The corrected deviation divides by the zeta
    sum over the same number of generations; that removes the truncation
    mismatch exactly for self-similar trees.  Pass/fail uses the corrected
    deviation.  When ``s0`` is omitted it is estimated by bisection.
    """
    if s0 is None:
        est = estimate_abscissa(tree, tolerance=1e-12)
        s0 = est.s0
    vertices = sample_vertices(tree) if vertices is None else list(vertices)
    report = FactorisationReport(s0, tol)
    for s in s_grid:
        zp = zeta_partial(tree, s)
        cumulative = zp.cumulative
        zeta_L = cumulative[-1]
        if tree.depth >= 2:
            log_rho = max(_root_statistic(tree, s), -700.0)
            rho = math.exp(log_rho)
            tail = zp.level_terms[-1] * rho / (1 - rho) / zeta_L if rho < 1 else math.inf
        else:
            tail = math.nan
        for v in vertices:
            k = kappa(tree, v, s)
            target = float(tree.diameter(v)) ** (s - s0 + 1)
            dev = abs(k / zeta_L - target) / target
            zeta_cut = cumulative[tree.depth - v.level]
            cdev = abs(k / zeta_cut - target) / target
            ok = bool(np.isfinite(cdev) and cdev < tol)
            report.entries.append(FactorisationEntry(v, s, k, zeta_L, target, dev, cdev, tail, ok))
    return report


# --------------------------------------------------------------------------
# the equity (Connes) measure


@dataclass
class ConnesMeasure:
    """Equity measure on every ball; ``inverse[l][i]`` is 1/measure of vertex (l, i)."""

    tree: TruncatedTree
    inverse: list

    def __getitem__(self, vertex: Vertex) -> Fraction:
        return Fraction(1, int(self.inverse[vertex.level][self.tree.index_of(vertex)]))

    def level_values(self, level: int) -> dict[Fraction, int]:
        """Distinct measure values at ``level`` with their vertex counts."""
        vals, counts = np.unique(self.inverse[level], return_counts=True)
        return {Fraction(1, int(v)): int(c) for v, c in zip(vals, counts)}

    def total(self, level: Optional[int] = None) -> Fraction:
        level = self.tree.depth if level is None else level
        return sum((c * m for m, c in self.level_values(level).items()), Fraction(0))


def connes_measure(tree: TruncatedTree) -> ConnesMeasure:
    """Equity recursion: root has mass 1, and each ball splits evenly among its children."""
    inv = [np.ones(1, dtype=np.int64)]
    for lvl in range(tree.depth):
        counts = tree.children_array(lvl)
        inv.append(np.repeat(inv[-1] * counts, counts))
    return ConnesMeasure(tree, inv)


@dataclass
class LimitCheck:
    vertex: Vertex
    s0: float
    eps: list[float]
    ratios: list[float]
    ratios_uncorrected: list[float]
    recursion_value: Fraction
    distances: list[float]
    monotone: bool


def connes_measure_limit_check(tree: TruncatedTree, v: Vertex, eps_list: Sequence[float],
                               s0: Optional[float] = None) -> LimitCheck:
    """Track kappa_v(s0 + eps)/zeta(s0 + eps) as eps shrinks.

    The ratio should approach the equity measure of ``v``.  ``ratios`` uses the
    zeta sum over the same number of generations as kappa sees (see
    :func:`check_factorisation`); ``ratios_uncorrected`` uses the full
    depth-L sum.
    """
    if s0 is None:
        s0 = estimate_abscissa(tree, tolerance=1e-12).s0
    eps = sorted(eps_list, reverse=True)
    ratios, raw = [], []
    for e in eps:
        zp = zeta_partial(tree, s0 + e)
        k = kappa(tree, v, s0 + e)
        ratios.append(k / zp.cumulative[tree.depth - v.level])
        raw.append(k / zp.cumulative[-1])
    target = tree.measure(v)
    dist = [abs(r - float(target)) for r in ratios]
    monotone = all(b <= a + 1e-15 for a, b in zip(dist, dist[1:]))
    return LimitCheck(v, s0, eps, ratios, raw, target, dist, monotone)


# --------------------------------------------------------------------------
# spheres


def sphere_measure(tree: TruncatedTree, z: LeafPoint, radius) -> SphereMeasure:
    """Measure of the sphere of given radius around the leaf ``z``.

    The sphere of radius diam([w]) around z is [w] minus the child of w that
    holds z, so its measure is mu([w]) * (1 - 1/n_w).  The aligned value
    (1 - 1/n_w) * radius is reported alongside; they agree iff mu([w]) == diam([w]).
    """
    tree.leaf_index(z)
    attained = []
    exact = isinstance(radius, (int, Fraction))
    for lvl in range(tree.depth):
        w = z.ancestor(lvl)
        d = tree.diameter(w)
        attained.append(d)
        hit = d == radius if exact else math.isclose(float(d), float(radius), rel_tol=1e-12)
        if hit:
            n = tree.n_children(w)
            mu = tree.measure(w)
            factor = 1 - Fraction(1, n)
            return SphereMeasure(z, d, mu * factor, factor * d, mu == d)
    nearest = sorted(attained, key=lambda d: abs(float(d) - float(radius)))[:2]
    raise ValueError(
        f"radius {radius} is not a distance attained from {z}; nearest attained: "
        + ", ".join(str(d) for d in nearest))
