"""Feasibility structures and their oracles.

Five structures are supported: general-graph matching (elements are edges),
transversal systems (elements are left nodes of a bipartite graph with a fixed
order on right nodes), truncated partition matroids (per-group plus global
capacities), simple partition matroids (at most one element per group), and
graphic matroids (elements are edges, independent sets are forests).

Alongside the independence checks this module houses the parameterized greedy
on sample paths, free-index queries, and the offline solutions policies are
measured against: greedy maximal matching, ordered-maximal bipartite matching,
matroid greedy, and exact optima (branch-and-bound for general matching,
linear assignment for transversal systems).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    CapExceededError,
    Configuration,
    SamplePath,
    TaggedValue,
    validate_configuration,
)

MATCHING_EXACT_EDGE_CAP = 24


@dataclass(frozen=True)
class GeneralMatching:
    """Undirected graph; elements are edges, feasible sets are matchings.

    Parallel edges are allowed; self-loops are rejected.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for u, v in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u},{v}) has a dangling vertex")
            if u == v:
                raise ValueError(f"self-loop at vertex {u} is not allowed")

    @property
    def ground_size(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Transversal:
    """Bipartite system; elements are left nodes, feasible sets are the
    subsets of left nodes that can be perfectly matched into right nodes.

    Right nodes are identified with 0..right_count-1 and that index order is
    the fixed total order used by ordered-maximal matchings.
    """

    left_count: int
    right_count: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.adjacency) != self.left_count:
            raise ValueError("adjacency must list neighbors for every left node")
        for l, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"left node {l} lists a right node twice")
            for r in nbrs:
                if not 0 <= r < self.right_count:
                    raise ValueError(f"left node {l} adjacent to unknown right node {r}")

    @property
    def ground_size(self) -> int:
        return self.left_count

    def sorted_neighbors(self, l: int) -> tuple[int, ...]:
        return tuple(sorted(self.adjacency[l]))


@dataclass(frozen=True)
class TruncatedPartition:
    """Disjoint groups covering the ground set, each with a capacity, plus a
    global capacity on the whole selection (a two-layer laminar matroid)."""

    groups: tuple[tuple[int, ...], ...]
    group_capacities: tuple[int, ...]
    total_capacity: int

    def __post_init__(self) -> None:
        if len(self.groups) != len(self.group_capacities):
            raise ValueError("one capacity per group required")
        if any(c < 1 for c in self.group_capacities):
            raise ValueError("capacity must be >= 1")
        if self.total_capacity < 1:
            raise ValueError("capacity must be >= 1")
        seen: set[int] = set()
        for g in self.groups:
            for e in g:
                if e in seen:
                    raise ValueError(f"element {e} appears in two groups")
                seen.add(e)
        if seen != set(range(len(seen))):
            raise ValueError("groups must partition 0..n-1")

    @property
    def ground_size(self) -> int:
        return sum(len(g) for g in self.groups)

    def group_of(self, e: int) -> int:
        for i, g in enumerate(self.groups):
            if e in g:
                return i
        raise KeyError(e)


@dataclass(frozen=True)
class SimplePartition:
    """Disjoint groups; feasible sets take at most one element per group.

    The ground set is the union of the groups (empty groups are permitted,
    e.g. the vertex groups of a graphic-matroid partition)."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for g in self.groups:
            for e in g:
                if e in seen:
                    raise ValueError(f"element {e} appears in two groups")
                seen.add(e)

    @property
    def ground_set(self) -> frozenset[int]:
        return frozenset(e for g in self.groups for e in g)

    @property
    def ground_size(self) -> int:
        return len(self.ground_set)

    def group_of(self, e: int) -> int:
        for i, g in enumerate(self.groups):
            if e in g:
                return i
        raise KeyError(e)


@dataclass(frozen=True)
class Graphic:
    """Graphic matroid: elements are edges, independent sets are forests."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for u, v in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u},{v}) has a dangling vertex")
            if u == v:
                raise ValueError(f"self-loop at vertex {u} is not allowed")

    @property
    def ground_size(self) -> int:
        return len(self.edges)


FeasibilityStructure = Union[
    GeneralMatching, Transversal, TruncatedPartition, SimplePartition, Graphic
]

MATROID_KINDS = (TruncatedPartition, SimplePartition, Graphic)


@dataclass(frozen=True)
class Solution:
    """A feasible selection with its total value and, where meaningful, the
    assignment realizing it (transversal: element -> right node)."""

    chosen: frozenset[int]
    total: float
    assignment: dict[int, int] | None = None


def _check_elements(fs: FeasibilityStructure, s: Iterable[int]) -> list[int]:
    elems = list(s)
    if isinstance(fs, SimplePartition):
        ground = fs.ground_set
        for e in elems:
            if e not in ground:
                raise KeyError(f"unknown element id {e}")
    else:
        n = fs.ground_size
        for e in elems:
            if not 0 <= e < n:
                raise KeyError(f"unknown element id {e}")
    return elems


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[rx] = ry
        return True


def _transversal_matchable(t: Transversal, s: Sequence[int]) -> bool:
    """Exact matchability of the left nodes `s` via augmenting paths."""
    if len(s) > t.right_count:
        return False
    match_of_r: dict[int, int] = {}

    def augment(l: int, visited: set[int]) -> bool:
        for r in t.adjacency[l]:
            if r in visited:
                continue
            visited.add(r)
            if r not in match_of_r or augment(match_of_r[r], visited):
                match_of_r[r] = l
                return True
        return False

    for l in s:
        if not augment(l, set()):
            return False
    return True


def is_independent(fs: FeasibilityStructure, s: Iterable[int]) -> bool:
    """Exact feasibility oracle for every structure variant."""
    elems = _check_elements(fs, s)
    if len(set(elems)) != len(elems):
        return False
    if isinstance(fs, GeneralMatching):
        used: set[int] = set()
        for e in elems:
            u, v = fs.edges[e]
            if u in used or v in used:
                return False
            used.add(u)
            used.add(v)
        return True
    if isinstance(fs, Transversal):
        return _transversal_matchable(fs, elems)
    if isinstance(fs, TruncatedPartition):
        if len(elems) > fs.total_capacity:
            return False
        counts = [0] * len(fs.groups)
        for e in elems:
            counts[fs.group_of(e)] += 1
        return all(c <= cap for c, cap in zip(counts, fs.group_capacities))
    if isinstance(fs, SimplePartition):
        counts = [0] * len(fs.groups)
        for e in elems:
            counts[fs.group_of(e)] += 1
        return all(c <= 1 for c in counts)
    if isinstance(fs, Graphic):
        uf = _UnionFind(fs.vertex_count)
        for e in elems:
            u, v = fs.edges[e]
            if not uf.union(u, v):
                return False
        return True
    raise TypeError(f"unknown structure {type(fs)!r}")


# ---------------------------------------------------------------------------
# Incremental greedy states. These implement the "can this element still be
# added" question the path greedy and the free-index queries share. For the
# transversal system the rule is the ordered-maximal one: an element is
# addable iff some adjacent right node is currently unmatched, and it gets
# the smallest such node.
# ---------------------------------------------------------------------------


class _MatchingState:
    __slots__ = ("edges", "used")

    def __init__(self, fs: GeneralMatching) -> None:
        self.edges = fs.edges
        self.used: set[int] = set()

    def can_add(self, e: int) -> bool:
        u, v = self.edges[e]
        return u not in self.used and v not in self.used

    def add(self, e: int) -> int | None:
        u, v = self.edges[e]
        self.used.add(u)
        self.used.add(v)
        return None


class _TransversalState:
    __slots__ = ("adjacency", "taken")

    def __init__(self, fs: Transversal) -> None:
        self.adjacency = tuple(fs.sorted_neighbors(l) for l in range(fs.left_count))
        self.taken: set[int] = set()

    def target(self, l: int) -> int | None:
        for r in self.adjacency[l]:
            if r not in self.taken:
                return r
        return None

    def can_add(self, l: int) -> bool:
        return self.target(l) is not None

    def add(self, l: int) -> int | None:
        r = self.target(l)
        if r is None:
            raise AssertionError("add called on an infeasible element")
        self.taken.add(r)
        return r


class _TruncatedPartitionState:
    __slots__ = ("group_of", "caps", "total_cap", "counts", "total")

    def __init__(self, fs: TruncatedPartition) -> None:
        self.group_of = {e: i for i, g in enumerate(fs.groups) for e in g}
        self.caps = fs.group_capacities
        self.total_cap = fs.total_capacity
        self.counts = [0] * len(fs.groups)
        self.total = 0

    def can_add(self, e: int) -> bool:
        g = self.group_of[e]
        return self.counts[g] < self.caps[g] and self.total < self.total_cap

    def add(self, e: int) -> int | None:
        self.counts[self.group_of[e]] += 1
        self.total += 1
        return None


class _SimplePartitionState:
    __slots__ = ("group_of", "used")

    def __init__(self, fs: SimplePartition) -> None:
        self.group_of = {e: i for i, g in enumerate(fs.groups) for e in g}
        self.used: set[int] = set()

    def can_add(self, e: int) -> bool:
        return self.group_of[e] not in self.used

    def add(self, e: int) -> int | None:
        self.used.add(self.group_of[e])
        return None


class _GraphicState:
    __slots__ = ("edges", "uf")

    def __init__(self, fs: Graphic) -> None:
        self.edges = fs.edges
        self.uf = _UnionFind(fs.vertex_count)

    def can_add(self, e: int) -> bool:
        u, v = self.edges[e]
        return self.uf.find(u) != self.uf.find(v)

    def add(self, e: int) -> int | None:
        u, v = self.edges[e]
        self.uf.union(u, v)
        return None


def greedy_state(fs: FeasibilityStructure):
    if isinstance(fs, GeneralMatching):
        return _MatchingState(fs)
    if isinstance(fs, Transversal):
        return _TransversalState(fs)
    if isinstance(fs, TruncatedPartition):
        return _TruncatedPartitionState(fs)
    if isinstance(fs, SimplePartition):
        return _SimplePartitionState(fs)
    if isinstance(fs, Graphic):
        return _GraphicState(fs)
    raise TypeError(f"unknown structure {type(fs)!r}")


def greedy_on_path(
    fs: FeasibilityStructure,
    path: SamplePath,
    config: Configuration,
    side: str,
) -> Solution:
    """Run the greedy over the path, parsing only indices whose coin shows
    `side`, adding each parsed element when feasible."""
    validate_configuration(path, config)
    state = greedy_state(fs)
    chosen: set[int] = set()
    assignment: dict[int, int] = {}
    total = 0.0
    for j, entry in enumerate(path.entries):
        if config.coins[j] != side:
            continue
        e = entry.element
        # The pairing constraint puts one H and one T per element, so the
        # same element can never be parsed twice on one side.
        assert e not in chosen
        if state.can_add(e):
            r = state.add(e)
            chosen.add(e)
            total += entry.value.value
            if r is not None:
                assignment[e] = r
    return Solution(
        chosen=frozenset(chosen),
        total=total,
        assignment=assignment if isinstance(fs, Transversal) else None,
    )


def free_index(
    fs: FeasibilityStructure,
    path: SamplePath,
    config: Configuration,
    j: int,
    side: str,
) -> bool:
    """Whether element e_j could still be added by the greedy restricted to
    `side` coins when it reaches position j. Depends only on coins before j."""
    validate_configuration(path, config)
    if not 0 <= j < path.length:
        raise IndexError(f"path index {j} out of range")
    state = greedy_state(fs)
    for i in range(j):
        if config.coins[i] == side and state.can_add(path.entries[i].element):
            state.add(path.entries[i].element)
    return state.can_add(path.entries[j].element)


def _sorted_desc(weights: Mapping[int, TaggedValue], elements: Iterable[int]) -> list[int]:
    return sorted(elements, key=lambda e: weights[e].key, reverse=True)


def maximal_matching(g: GeneralMatching, weights: Mapping[int, TaggedValue]) -> Solution:
    """Greedy maximal matching: scan edges in decreasing weight order, keep
    each edge whose endpoints are both unmatched. Always worth at least half
    of the optimal matching."""
    state = _MatchingState(g)
    chosen: set[int] = set()
    total = 0.0
    for e in _sorted_desc(weights, range(len(g.edges))):
        if state.can_add(e):
            state.add(e)
            chosen.add(e)
            total += weights[e].value
    return Solution(frozenset(chosen), total)


def optimal_matching(
    g: GeneralMatching,
    weights: Mapping[int, TaggedValue],
    cap: int = MATCHING_EXACT_EDGE_CAP,
) -> Solution:
    """Exact maximum-weight matching by branch and bound over edges sorted in
    decreasing weight, pruning with suffix weight sums."""
    n = len(g.edges)
    if n > cap:
        raise CapExceededError(f"exact matching capped at {cap} edges, got {n}")
    order = _sorted_desc(weights, range(n))
    vals = [weights[e].value for e in order]
    vmasks = []
    for e in order:
        u, v = g.edges[e]
        vmasks.append((1 << u) | (1 << v))
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + vals[i]

    best_total = 0.0
    best_set: tuple[int, ...] = ()

    def rec(i: int, used: int, cur: float, picked: tuple[int, ...]) -> None:
        nonlocal best_total, best_set
        if cur > best_total:
            best_total, best_set = cur, picked
        if i == n or cur + suffix[i] <= best_total:
            return
        if not used & vmasks[i]:
            rec(i + 1, used | vmasks[i], cur + vals[i], picked + (order[i],))
        rec(i + 1, used, cur, picked)

    rec(0, 0, 0.0, ())
    return Solution(frozenset(best_set), best_total)


def ordered_maximal_matching(
    t: Transversal, weights: Mapping[int, TaggedValue]
) -> Solution:
    """Process left nodes in decreasing weight order, matching each to the
    smallest unmatched adjacent right node (or leaving it unmatched)."""
    state = _TransversalState(t)
    chosen: set[int] = set()
    assignment: dict[int, int] = {}
    total = 0.0
    for l in _sorted_desc(weights, range(t.left_count)):
        r = state.target(l)
        if r is not None:
            state.add(l)
            chosen.add(l)
            assignment[l] = r
            total += weights[l].value
    return Solution(frozenset(chosen), total, assignment)


def optimal_transversal(t: Transversal, weights: Mapping[int, TaggedValue]) -> Solution:
    """Exact maximum-weight independent set of the transversal system via a
    linear assignment with zero-weight dummy columns for unmatched nodes."""
    nl, nr = t.left_count, t.right_count
    cost = np.zeros((nl, nr + nl))
    for l in range(nl):
        w = weights[l].value
        for r in t.adjacency[l]:
            cost[l, r] = w
    rows, cols = linear_sum_assignment(cost, maximize=True)
    chosen: set[int] = set()
    assignment: dict[int, int] = {}
    total = 0.0
    for l, r in zip(rows, cols):
        if r < nr and r in t.adjacency[l]:
            chosen.add(l)
            assignment[int(l)] = int(r)
            total += weights[l].value
    return Solution(frozenset(int(l) for l in chosen), total, assignment)


def matroid_greedy_opt(
    fs: TruncatedPartition | SimplePartition | Graphic,
    weights: Mapping[int, TaggedValue],
) -> Solution:
    """Standard matroid greedy; exact for maximum-weight independent sets."""
    if not isinstance(fs, MATROID_KINDS):
        raise TypeError("matroid greedy needs a matroid structure")
    state = greedy_state(fs)
    elements = (
        fs.ground_set if isinstance(fs, SimplePartition) else range(fs.ground_size)
    )
    chosen: set[int] = set()
    total = 0.0
    for e in _sorted_desc(weights, elements):
        if state.can_add(e):
            state.add(e)
            chosen.add(e)
            total += weights[e].value
    return Solution(frozenset(chosen), total)


def contraction_optimum(
    fs: TruncatedPartition, e: int, weights: Mapping[int, TaggedValue]
) -> float:
    """Maximum weight over sets S avoiding e with S + {e} feasible, i.e. the
    greedy optimum after reserving one capacity slot for e."""
    g = fs.group_of(e)
    caps = list(fs.group_capacities)
    caps[g] -= 1
    total_cap = fs.total_capacity - 1
    counts = [0] * len(fs.groups)
    total = 0
    value = 0.0
    for x in _sorted_desc(weights, range(fs.ground_size)):
        if x == e:
            continue
        gx = fs.group_of(x)
        if counts[gx] < caps[gx] and total < total_cap:
            counts[gx] += 1
            total += 1
            value += weights[x].value
    return value


def graphic_partition(
    g: Graphic,
    rng: np.random.Generator | None = None,
    sigma: Sequence[int] | None = None,
) -> tuple[SimplePartition, tuple[int, ...]]:
    """Partition the edges by a (uniformly random) vertex ordering: each edge
    joins the group of its endpoint that comes earlier in the ordering.

    Every transversal of the resulting groups is a forest. Returns the
    partition (one group per vertex, possibly empty) and the ordering used.
    """
    if sigma is None:
        if rng is None:
            raise ValueError("need an rng or an explicit vertex ordering")
        sigma = tuple(int(v) for v in rng.permutation(g.vertex_count))
    else:
        sigma = tuple(sigma)
        if sorted(sigma) != list(range(g.vertex_count)):
            raise ValueError("sigma must be a permutation of the vertices")
    rank = [0] * g.vertex_count
    for pos, v in enumerate(sigma):
        rank[v] = pos
    groups: list[list[int]] = [[] for _ in range(g.vertex_count)]
    for e, (u, v) in enumerate(g.edges):
        owner = u if rank[u] < rank[v] else v
        groups[owner].append(e)
    return SimplePartition(tuple(tuple(grp) for grp in groups)), sigma


def greedy_prophet(fs: FeasibilityStructure, weights: Mapping[int, TaggedValue]) -> Solution:
    """The greedy-like offline solution: maximal matching, ordered-maximal
    matching, or matroid greedy depending on the structure."""
    if isinstance(fs, GeneralMatching):
        return maximal_matching(fs, weights)
    if isinstance(fs, Transversal):
        return ordered_maximal_matching(fs, weights)
    return matroid_greedy_opt(fs, weights)


def exact_optimum(fs: FeasibilityStructure, weights: Mapping[int, TaggedValue]) -> Solution:
    """The prophet's benchmark: exact maximum-weight feasible set."""
    if isinstance(fs, GeneralMatching):
        return optimal_matching(fs, weights)
    if isinstance(fs, Transversal):
        return optimal_transversal(fs, weights)
    return matroid_greedy_opt(fs, weights)
