"""Random instance generators for the verification suites.

Distribution palettes deliberately include point masses and small shared
integer atoms so that value ties (resolved by tiebreak tokens) get exercised,
not just generic continuous draws.
"""

from __future__ import annotations

import numpy as np

from .core import Distribution, discrete, exponential, point_mass, uniform
from .feasibility import (
    GeneralMatching,
    Graphic,
    SimplePartition,
    Transversal,
    TruncatedPartition,
)
from .instances import Instance

STRUCTURE_KINDS = (
    "matching",
    "transversal",
    "truncated-partition",
    "simple-partition",
    "graphic",
    "rank1",
)


def random_distribution(rng: np.random.Generator) -> Distribution:
    roll = rng.random()
    if roll < 0.25:
        return point_mass(int(rng.integers(0, 6)))
    if roll < 0.5:
        a = float(rng.integers(0, 4))
        return uniform(a, a + float(rng.integers(1, 4)))
    if roll < 0.75:
        atoms = sorted(rng.choice(np.arange(0, 8), size=2, replace=False).tolist())
        return discrete([float(v) for v in atoms], [0.5, 0.5])
    return exponential(float(rng.choice([0.5, 1.0, 2.0])))


def _distributions(n: int, rng: np.random.Generator) -> dict[int, Distribution]:
    return {e: random_distribution(rng) for e in range(n)}


def _random_partition(n: int, rng: np.random.Generator) -> list[list[int]]:
    k = int(rng.integers(1, n + 1))
    groups: list[list[int]] = [[] for _ in range(k)]
    for e in range(n):
        groups[int(rng.integers(0, k))].append(e)
    return [g for g in groups if g]


def random_instance(kind: str, n: int, rng: np.random.Generator) -> Instance:
    """One random instance with n ground-set elements."""
    if n < 1:
        raise ValueError("need n >= 1")
    if kind == "matching":
        vertices = int(rng.integers(max(2, min(3, n + 1)), 2 * n + 2))
        edges = []
        for _ in range(n):
            u = int(rng.integers(0, vertices))
            v = int(rng.integers(0, vertices))
            while v == u:
                v = int(rng.integers(0, vertices))
            edges.append((u, v))
        structure = GeneralMatching(vertices, tuple(edges))
    elif kind == "graphic":
        vertices = int(rng.integers(2, 6))
        edges = []
        for _ in range(n):
            u = int(rng.integers(0, vertices))
            v = int(rng.integers(0, vertices))
            while v == u:
                v = int(rng.integers(0, vertices))
            edges.append((u, v))
        structure = Graphic(vertices, tuple(edges))
    elif kind == "transversal":
        right = int(rng.integers(1, n + 2))
        adjacency = []
        for _ in range(n):
            deg = int(rng.integers(0, right + 1))
            nbrs = sorted(rng.choice(right, size=deg, replace=False).tolist())
            adjacency.append(tuple(int(r) for r in nbrs))
        structure = Transversal(n, right, tuple(adjacency))
    elif kind == "truncated-partition":
        groups = _random_partition(n, rng)
        caps = tuple(int(rng.integers(1, len(g) + 1)) for g in groups)
        total = int(rng.integers(1, n + 1))
        structure = TruncatedPartition(tuple(tuple(g) for g in groups), caps, total)
    elif kind == "simple-partition":
        groups = _random_partition(n, rng)
        structure = SimplePartition(tuple(tuple(g) for g in groups))
    elif kind == "rank1":
        structure = TruncatedPartition((tuple(range(n)),), (1,), 1)
    else:
        raise ValueError(f"unknown structure kind {kind!r}")
    return Instance(f"{kind}-n{n}", structure, _distributions(n, rng))


def star_graphic_instance(k: int) -> Instance:
    """The star graph with k leaf edges and IID uniform [1-1/k, 1] rewards."""
    if k < 2:
        raise ValueError("need k >= 2")
    edges = tuple((0, i + 1) for i in range(k))
    structure = Graphic(k + 1, edges)
    dists = {e: uniform(1.0 - 1.0 / k, 1.0) for e in range(k)}
    return Instance(f"star-k{k}", structure, dists)
