"""Finitely truncated Michon trees of equitising ultrametric Cantor sets.

A tree of depth ``L`` stands in for the Cantor set at resolution ``L``: each
vertex is a clopen ball, and the level-``L`` vertices (leaves) are the
cylinders on which every test function is constant.

Level-regular trees (p-adic and periodic branching) answer level-wise queries
in closed form, so they can be deep (depth 20 of a 5-ary tree is fine).
Vertex-by-vertex structure is materialised lazily and only on demand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from ._rng import SplitMix64

DEFAULT_MAX_VERTICES = 5_000_000


class TreeSpecError(ValueError):
    """Raised when a tree specification violates a structural invariant."""


# --------------------------------------------------------------------------
# Specification


@dataclass(frozen=True)
class PAdic:
    p: int


@dataclass(frozen=True)
class LevelRegular:
    branching: tuple[int, ...]

    def __init__(self, branching: Sequence[int]):
        object.__setattr__(self, "branching", tuple(int(b) for b in branching))


@dataclass(frozen=True)
class Explicit:
    """Child counts in level order: ``counts[l][i]`` for the i-th vertex at level l."""

    counts: tuple[tuple[int, ...], ...]

    def __init__(self, counts: Sequence[Sequence[int]]):
        object.__setattr__(self, "counts", tuple(tuple(int(c) for c in lvl) for lvl in counts))


@dataclass(frozen=True)
class RandomBounded:
    low: int
    high: int
    seed: int = 0


@dataclass(frozen=True)
class ExplicitDiameters:
    """Either one value per level (length depth + 1) or a map address-string -> value."""

    values: Union[tuple, dict]

    def __init__(self, values):
        if isinstance(values, dict):
            vals = {str(k): Fraction(v) for k, v in values.items()}
        else:
            vals = tuple(Fraction(v) for v in values)
        object.__setattr__(self, "values", vals)

    def __hash__(self):
        v = self.values
        return hash(tuple(sorted(v.items())) if isinstance(v, dict) else v)


Family = Union[PAdic, LevelRegular, Explicit, RandomBounded]
Metric = Union[str, ExplicitDiameters]


@dataclass(frozen=True)
class TreeSpec:
    family: Family
    depth: int
    metric: Metric = "canonical"


# --------------------------------------------------------------------------
# Vertices and balls


@dataclass(frozen=True, order=True)
class Vertex:
    address: tuple[int, ...] = ()

    def __init__(self, address: Sequence[int] = ()):
        object.__setattr__(self, "address", tuple(int(a) for a in address))

    @property
    def level(self) -> int:
        return len(self.address)

    def child(self, c: int) -> "Vertex":
        return Vertex(self.address + (c,))

    def parent(self) -> "Vertex":
        if not self.address:
            raise ValueError("the root has no parent")
        return Vertex(self.address[:-1])

    def ancestor(self, level: int) -> "Vertex":
        return Vertex(self.address[:level])

    def is_descendant_of(self, other: "Vertex") -> bool:
        return self.address[: other.level] == other.address

    def __str__(self) -> str:
        return format_address(self.address)

    @classmethod
    def parse(cls, text: str) -> "Vertex":
        return cls(parse_address(text))


# A boundary point at resolution L is represented by its level-L cylinder.
LeafPoint = Vertex


def format_address(address: Sequence[int]) -> str:
    return ".".join(str(a) for a in address)


def parse_address(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError:
        raise TreeSpecError(f"malformed address {text!r}") from None


@dataclass(frozen=True)
class Ball:
    vertex: Vertex
    diameter: Fraction
    measure: Fraction
    child_count: int

    @property
    def level(self) -> int:
        return self.vertex.level


# --------------------------------------------------------------------------
# Materialised structure


@dataclass
class _Levels:
    counts: list          # counts[l], l < L: child counts of level-l vertices
    first_child: list     # first_child[l][i]: index of first child at level l+1
    parent: list          # parent[l][i], l >= 1
    child_pos: list       # child_pos[l][i]: position among siblings, l >= 1
    inv_measure: list     # inv_measure[l][i] = 1 / measure (an integer under equity)
    leaf_anc: np.ndarray = field(default=None)  # (L+1, N): ancestor index at each level

    @property
    def sizes(self):
        return [len(m) for m in self.inv_measure]


def _materialise(counts: Sequence[np.ndarray]) -> _Levels:
    L = len(counts)
    first_child, parent, child_pos = [], [None], [None]
    inv = [np.ones(1, dtype=np.int64)]
    for lvl in range(L):
        c = counts[lvl]
        fc = np.zeros(len(c) + 1, dtype=np.int64)
        np.cumsum(c, out=fc[1:])
        first_child.append(fc)
        par = np.repeat(np.arange(len(c), dtype=np.int64), c)
        parent.append(par)
        child_pos.append(np.arange(len(par), dtype=np.int64) - fc[par])
        if float(inv[-1].max()) * float(c.max()) >= 2.0**62:
            raise TreeSpecError("tree too deep for exact integer measures")
        inv.append(inv[-1][par] * c[par])
    n_leaves = len(inv[-1])
    anc = np.empty((L + 1, n_leaves), dtype=np.int64)
    anc[L] = np.arange(n_leaves)
    for lvl in range(L, 0, -1):
        anc[lvl - 1] = parent[lvl][anc[lvl]]
    return _Levels(list(counts), first_child, parent, child_pos, inv, anc)


# --------------------------------------------------------------------------
# The tree


class TruncatedTree:
    """An immutable depth-``L`` Michon tree with equity measure and a diameter map.

    Build with :func:`build_tree`.  Per-vertex arrays (``levels``) are indexed
    in level order, which is lexicographic order of addresses; the leaf index
    of a point is its position among the level-L vertices.
    """

    def __init__(self, spec: TreeSpec, counts=None, level_branching=None,
                 max_vertices: int = DEFAULT_MAX_VERTICES):
        self.spec = spec
        self.depth = spec.depth
        self._counts = counts
        self.level_branching = level_branching
        self.max_vertices = max_vertices
        self._validate_metric()

    # -- sizes --------------------------------------------------------------

    @cached_property
    def level_sizes(self) -> list[int]:
        """Number of vertices at each level 0..L (exact Python ints)."""
        if self.level_branching is not None:
            sizes = [1]
            for b in self.level_branching:
                sizes.append(sizes[-1] * b)
            return sizes
        return [len(c) for c in self._counts] + [int(sum(self._counts[-1]))]

    @property
    def n_leaves(self) -> int:
        return self.level_sizes[-1]

    @property
    def n_vertices(self) -> int:
        return sum(self.level_sizes)

    @property
    def is_level_regular(self) -> bool:
        return self.level_branching is not None

    @property
    def metric(self) -> Metric:
        return self.spec.metric

    # -- materialisation ----------------------------------------------------

    @cached_property
    def levels(self) -> _Levels:
        if self.n_vertices > self.max_vertices:
            raise TreeSpecError(
                f"tree has {self.n_vertices} vertices, above the materialisation cap "
                f"{self.max_vertices}; use level-wise queries or a smaller depth"
            )
        if self.level_branching is not None:
            counts = [np.full(n, b, dtype=np.int64)
                      for n, b in zip(self.level_sizes[:-1], self.level_branching)]
        else:
            counts = [np.asarray(c, dtype=np.int64) for c in self._counts]
        return _materialise(counts)

    def index_of(self, vertex: Vertex) -> int:
        """Level-order index of ``vertex`` within its level."""
        self.check_vertex(vertex)
        if self.level_branching is not None:
            idx = 0
            for lvl, c in enumerate(vertex.address):
                idx = idx * self.level_branching[lvl] + c
            return idx
        lv = self.levels
        idx = 0
        for lvl, c in enumerate(vertex.address):
            idx = int(lv.first_child[lvl][idx]) + c
        return idx

    def vertex_at(self, level: int, index: int) -> Vertex:
        if self.level_branching is not None:
            addr = []
            for lvl in range(level - 1, -1, -1):
                index, c = divmod(index, self.level_branching[lvl])
                addr.append(c)
            return Vertex(reversed(addr))
        lv = self.levels
        addr = []
        for lvl in range(level, 0, -1):
            addr.append(int(lv.child_pos[lvl][index]))
            index = int(lv.parent[lvl][index])
        return Vertex(reversed(addr))

    def vertices(self, level: int) -> Iterator[Vertex]:
        for i in range(self.level_sizes[level]):
            yield self.vertex_at(level, i)

    @cached_property
    def leaves(self) -> list[Vertex]:
        _ = self.levels  # enforce the cap before enumerating
        return list(self.vertices(self.depth))

    @cached_property
    def leaf_addresses(self) -> list[str]:
        return [str(v) for v in self.leaves]

    def leaf_index(self, x: LeafPoint) -> int:
        if x.level != self.depth:
            raise ValueError(f"{x} is not a level-{self.depth} leaf")
        return self.index_of(x)

    def check_vertex(self, vertex: Vertex) -> None:
        if vertex.level > self.depth:
            raise ValueError(f"vertex {vertex} is deeper than the tree (depth {self.depth})")
        if self.level_branching is not None:
            for lvl, c in enumerate(vertex.address):
                if not 0 <= c < self.level_branching[lvl]:
                    raise ValueError(f"vertex {vertex} does not exist")
            return
        idx = 0
        lv = self.levels
        for lvl, c in enumerate(vertex.address):
            if not 0 <= c < lv.counts[lvl][idx]:
                raise ValueError(f"vertex {vertex} does not exist")
            idx = int(lv.first_child[lvl][idx]) + c

    # -- per-vertex data ----------------------------------------------------

    def n_children(self, vertex: Vertex) -> int:
        if vertex.level >= self.depth:
            return 0
        if self.level_branching is not None:
            self.check_vertex(vertex)
            return self.level_branching[vertex.level]
        return int(self.levels.counts[vertex.level][self.index_of(vertex)])

    def measure(self, vertex: Vertex) -> Fraction:
        if self.level_branching is not None:
            self.check_vertex(vertex)
            return Fraction(1, self.level_sizes[vertex.level])
        return Fraction(1, int(self.levels.inv_measure[vertex.level][self.index_of(vertex)]))

    def diameter(self, vertex: Vertex) -> Fraction:
        metric = self.spec.metric
        if metric == "canonical":
            return self.measure(vertex)
        self.check_vertex(vertex)
        if metric == "baire":
            return Fraction(1, 2**vertex.level)
        vals = metric.values
        if isinstance(vals, dict):
            return vals[str(vertex)]
        return vals[vertex.level]

    def ball(self, vertex: Vertex) -> Ball:
        return Ball(vertex, self.diameter(vertex), self.measure(vertex), self.n_children(vertex))

    @cached_property
    def level_diameters(self):
        """One exact diameter per level when the metric depends only on the level, else None."""
        metric = self.spec.metric
        if metric == "baire":
            return [Fraction(1, 2**lvl) for lvl in range(self.depth + 1)]
        if metric == "canonical":
            if self.level_branching is None:
                return None
            return [Fraction(1, n) for n in self.level_sizes]
        if isinstance(metric.values, dict):
            return None
        return list(metric.values)

    def diameter_array(self, level: int) -> np.ndarray:
        """Float diameters of all vertices at ``level`` in level order."""
        ld = self.level_diameters
        if ld is not None:
            return np.full(self.level_sizes[level], float(ld[level]))
        if self.spec.metric == "canonical":
            return 1.0 / self.levels.inv_measure[level].astype(np.float64)
        vals = self.spec.metric.values
        return np.array([float(vals[str(v)]) for v in self.vertices(level)])

    def measure_array(self, level: int) -> np.ndarray:
        if self.level_branching is not None:
            return np.full(self.level_sizes[level], 1.0 / self.level_sizes[level])
        return 1.0 / self.levels.inv_measure[level].astype(np.float64)

    def children_array(self, level: int) -> np.ndarray:
        if self.level_branching is not None:
            return np.full(self.level_sizes[level], self.level_branching[level], dtype=np.int64)
        return self.levels.counts[level]

    @cached_property
    def leaf_measures(self) -> np.ndarray:
        return self.measure_array(self.depth)

    @cached_property
    def aligned(self) -> bool:
        """True when measure == diameter on every vertex (exactly)."""
        metric = self.spec.metric
        if metric == "canonical":
            return True
        if self.level_diameters is not None and self.level_branching is not None:
            return all(d == Fraction(1, n) for d, n in zip(self.level_diameters, self.level_sizes))
        return all(self.diameter(v) == self.measure(v)
                   for lvl in range(self.depth + 1) for v in self.vertices(lvl))

    # -- validation ---------------------------------------------------------

    def _validate_metric(self) -> None:
        metric = self.spec.metric
        if metric in ("canonical", "baire"):
            return
        if not isinstance(metric, ExplicitDiameters):
            raise TreeSpecError(f"unknown metric {metric!r}")
        vals = metric.values
        if isinstance(vals, tuple):
            if len(vals) != self.depth + 1:
                raise TreeSpecError(
                    f"per-level diameters need {self.depth + 1} values, got {len(vals)}")
            for lvl in range(self.depth + 1):
                if vals[lvl] <= 0:
                    raise TreeSpecError(f"diameter at level {lvl} must be positive")
                if lvl and vals[lvl] >= vals[lvl - 1]:
                    raise TreeSpecError(
                        f"diameters must strictly decrease: level {lvl} has {vals[lvl]} "
                        f">= {vals[lvl - 1]}")
            return
        for lvl in range(self.depth + 1):
            for v in self.vertices(lvl):
                key = str(v)
                if key not in vals:
                    raise TreeSpecError(f"no diameter given for vertex {key!r}")
                if vals[key] <= 0:
                    raise TreeSpecError(f"diameter of vertex {key!r} must be positive")
                if lvl:
                    parent = str(v.parent())
                    if vals[key] >= vals[parent]:
                        raise TreeSpecError(
                            f"diameter of {key!r} is not below that of its parent {parent!r}")
                    first = str(v.parent().child(0))
                    if vals[key] != vals[first]:
                        raise TreeSpecError(
                            f"children of {parent!r} do not share one diameter (not equitising)")

    def __repr__(self) -> str:
        return (f"TruncatedTree(family={self.spec.family!r}, depth={self.depth}, "
                f"metric={self.spec.metric!r}, leaves={self.n_leaves})")


# --------------------------------------------------------------------------
# Construction


def _check_branching(values, where):
    for b in values:
        if int(b) < 2:
            raise TreeSpecError(f"branching number {b} < 2 {where}; every vertex needs >= 2 children")


def build_tree(spec: TreeSpec, max_vertices: int = DEFAULT_MAX_VERTICES) -> TruncatedTree:
    """Materialise the depth-L tree described by ``spec``."""
    L = spec.depth
    if not isinstance(L, int) or L < 1:
        raise TreeSpecError(f"depth must be an integer >= 1, got {L!r}")
    fam = spec.family
    if isinstance(fam, PAdic):
        _check_branching([fam.p], "in PAdic family (prime p)")
        return TruncatedTree(spec, level_branching=(int(fam.p),) * L, max_vertices=max_vertices)
    if isinstance(fam, LevelRegular):
        if not fam.branching:
            raise TreeSpecError("LevelRegular needs a non-empty branching list")
        _check_branching(fam.branching, "in LevelRegular family")
        m = len(fam.branching)
        return TruncatedTree(spec, level_branching=tuple(fam.branching[i % m] for i in range(L)),
                             max_vertices=max_vertices)
    if isinstance(fam, RandomBounded):
        if fam.low < 2 or fam.high < fam.low:
            raise TreeSpecError(
                f"RandomBounded needs 2 <= low <= high, got low={fam.low}, high={fam.high}")
        counts = _bounded_random_counts(fam, L, max_vertices)
        return _from_counts(spec, counts, max_vertices)
    if isinstance(fam, Explicit):
        counts = [list(c) for c in fam.counts]
        if len(counts) != L:
            raise TreeSpecError(f"explicit tree has {len(counts)} levels of counts, depth is {L}")
        n = 1
        for lvl, c in enumerate(counts):
            if len(c) != n:
                raise TreeSpecError(f"level {lvl} lists {len(c)} child counts for {n} vertices")
            for i, b in enumerate(c):
                if b < 2:
                    raise TreeSpecError(
                        f"vertex {lvl}:{i} of the explicit tree has {b} children (< 2)")
            n = sum(c)
        return _from_counts(spec, counts, max_vertices)
    raise TreeSpecError(f"unknown tree family {fam!r}")


def _bounded_random_counts(fam, L, max_vertices):
    n, total = 1, 1
    rng = SplitMix64(fam.seed)
    counts = []
    for _ in range(L):
        if total + n * fam.low > max_vertices:
            raise TreeSpecError(
                f"random tree of depth {L} exceeds the materialisation cap {max_vertices}")
        lvl = [rng.randint(fam.low, fam.high) for _ in range(n)]
        counts.append(lvl)
        n = sum(lvl)
        total += n
    return counts


def _from_counts(spec, counts, max_vertices):
    if all(len(set(c)) == 1 for c in counts):
        return TruncatedTree(spec, level_branching=tuple(c[0] for c in counts),
                             max_vertices=max_vertices)
    return TruncatedTree(spec, counts=[tuple(c) for c in counts], max_vertices=max_vertices)


# --------------------------------------------------------------------------
# Geometry


def join(x: Vertex, y: Vertex) -> Vertex:
    """Deepest common ancestor (longest common prefix of the addresses)."""
    n = 0
    for a, b in zip(x.address, y.address):
        if a != b:
            break
        n += 1
    return Vertex(x.address[:n])


def distance(tree: TruncatedTree, x: LeafPoint, y: LeafPoint) -> Fraction:
    if x == y:
        return Fraction(0)
    return tree.diameter(join(x, y))


# --------------------------------------------------------------------------
# File format


def load_explicit(source) -> Explicit:
    """Read an explicit tree from JSON.

    Two layouts are accepted: a list of per-level child-count lists in level
    order (``[[2], [3, 2]]``), or an object mapping dot-separated addresses to
    child counts (``{"": 2, "0": 3, "1": 2}``; the root is ``""``).  Either may
    be wrapped as ``{"children": ...}``.
    """
    if isinstance(source, (str, Path)) and Path(source).exists():
        data = json.loads(Path(source).read_text())
    elif isinstance(source, (str, bytes)):
        data = json.loads(source)
    else:
        data = source
    if isinstance(data, dict) and "children" in data:
        data = data["children"]
    if isinstance(data, list):
        return Explicit(data)
    if isinstance(data, dict):
        return Explicit(_counts_from_addresses(data))
    raise TreeSpecError("explicit tree JSON must be a list of levels or an address map")


def _counts_from_addresses(mapping) -> list[list[int]]:
    table = {parse_address(k): int(v) for k, v in mapping.items()}
    if () not in table:
        raise TreeSpecError("address map has no root entry \"\"")
    counts, frontier = [], [()]
    while frontier:
        present = [a for a in frontier if a in table]
        if not present:
            break
        if len(present) != len(frontier):
            missing = next(a for a in frontier if a not in table)
            raise TreeSpecError(
                f"vertex {format_address(missing)!r} has no child count but its cousins do")
        lvl = [table[a] for a in frontier]
        for a, b in zip(frontier, lvl):
            if b < 2:
                raise TreeSpecError(f"vertex {format_address(a)!r} has {b} children (< 2)")
        counts.append(lvl)
        frontier = [a + (c,) for a, b in zip(frontier, lvl) for c in range(b)]
    extra = set(table) - {a for a in _walk(counts)}
    if extra:
        bad = format_address(sorted(extra)[0])
        raise TreeSpecError(f"address {bad!r} is not a vertex of the tree")
    return counts


def _walk(counts):
    frontier = [()]
    for lvl in counts:
        yield from frontier
        frontier = [a + (c,) for a, b in zip(frontier, lvl) for c in range(b)]

