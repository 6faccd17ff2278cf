"""Instance files: a hand-editable JSON document naming the feasibility
structure, one reward distribution per element, and (optionally) a static
partition for the custom reduction.

Example:

    {
      "name": "triangle",
      "structure": {"kind": "matching", "vertices": 3,
                    "edges": [[0, 1], [1, 2], [0, 2]]},
      "distributions": {
        "0": {"kind": "uniform", "a": 0.0, "b": 1.0},
        "1": {"kind": "exponential", "rate": 1.0, "mhr": true},
        "2": {"kind": "point-mass", "value": 2.5}
      }
    }

Transversal structures carry an explicit "right_order" list; its positions
define the fixed priority order and adjacency entries refer to its labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
import numpy as np

from .core import (
    Distribution,
    ElementRealization,
    discrete,
    draw_realization,
    exponential,
    point_mass,
    uniform,
)
from .feasibility import (
    FeasibilityStructure,
    GeneralMatching,
    Graphic,
    SimplePartition,
    Transversal,
    TruncatedPartition,
)


class InstanceFormatError(ValueError):
    """Schema violation in an instance document, with a field path."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Instance:
    name: str
    structure: FeasibilityStructure
    distributions: dict[int, Distribution]
    partition: SimplePartition | None = None
    partition_alpha: float | None = None
    right_labels: tuple[str, ...] | None = None

    @property
    def ground_size(self) -> int:
        return self.structure.ground_size

    def draw_realizations(self, rng: np.random.Generator) -> list[ElementRealization]:
        return [
            draw_realization(self.distributions[e], e, rng)
            for e in sorted(self.distributions)
        ]

    def regime(self) -> str | None:
        """"mhr" when every distribution asserts it, "iid-regular" is left to
        explicit declaration by the caller, otherwise None."""
        if all(d.mhr for d in self.distributions.values()):
            return "mhr"
        return None


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise InstanceFormatError(path, f"missing field {key!r}")
    return obj[key]


def _parse_edge_list(raw, vertices: int, path: str) -> tuple[tuple[int, int], ...]:
    edges = []
    for i, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise InstanceFormatError(f"{path}[{i}]", "edge must be a [u, v] pair")
        u, v = pair
        if not (isinstance(u, int) and isinstance(v, int)):
            raise InstanceFormatError(f"{path}[{i}]", "vertex ids must be integers")
        if not (0 <= u < vertices and 0 <= v < vertices):
            raise InstanceFormatError(f"{path}[{i}]", f"dangling vertex in ({u},{v})")
        if u == v:
            raise InstanceFormatError(f"{path}[{i}]", "self-loops are not allowed")
        edges.append((u, v))
    return tuple(edges)


def _parse_groups(raw, path: str) -> tuple[tuple[int, ...], ...]:
    groups = []
    seen: set[int] = set()
    for i, grp in enumerate(raw):
        if not isinstance(grp, list):
            raise InstanceFormatError(f"{path}[{i}]", "group must be a list")
        for e in grp:
            if not isinstance(e, int):
                raise InstanceFormatError(f"{path}[{i}]", "element ids must be integers")
            if e in seen:
                raise InstanceFormatError(f"{path}[{i}]", f"element {e} in two groups")
            seen.add(e)
        groups.append(tuple(grp))
    return tuple(groups)


def _parse_structure(raw: dict) -> tuple[FeasibilityStructure, tuple[str, ...] | None]:
    kind = _require(raw, "kind", "structure")
    if kind == "matching" or kind == "graphic":
        vertices = _require(raw, "vertices", "structure")
        edges = _parse_edge_list(_require(raw, "edges", "structure"), vertices, "structure.edges")
        cls = GeneralMatching if kind == "matching" else Graphic
        return cls(vertices, edges), None
    if kind == "transversal":
        left = _require(raw, "left", "structure")
        right_order = _require(raw, "right_order", "structure")
        labels = [str(r) for r in right_order]
        if len(set(labels)) != len(labels):
            raise InstanceFormatError(
                "structure.right_order", "right-node order is not a permutation"
            )
        pos = {lab: i for i, lab in enumerate(labels)}
        raw_adj = _require(raw, "adjacency", "structure")
        if len(raw_adj) != left:
            raise InstanceFormatError(
                "structure.adjacency", f"need one neighbor list per left node ({left})"
            )
        adjacency = []
        for l, nbrs in enumerate(raw_adj):
            row = []
            for r in nbrs:
                lab = str(r)
                if lab not in pos:
                    raise InstanceFormatError(
                        f"structure.adjacency[{l}]", f"unknown right node {r!r}"
                    )
                row.append(pos[lab])
            if len(set(row)) != len(row):
                raise InstanceFormatError(
                    f"structure.adjacency[{l}]", "right node listed twice"
                )
            adjacency.append(tuple(row))
        return Transversal(left, len(labels), tuple(adjacency)), tuple(labels)
    if kind == "truncated-partition":
        groups = _parse_groups(_require(raw, "groups", "structure"), "structure.groups")
        caps = tuple(_require(raw, "group_capacities", "structure"))
        total = _require(raw, "total_capacity", "structure")
        if len(caps) != len(groups):
            raise InstanceFormatError("structure.group_capacities", "one capacity per group")
        for c in (*caps, total):
            if not isinstance(c, int) or c < 1:
                raise InstanceFormatError("structure", "capacity must be >= 1")
        try:
            return TruncatedPartition(groups, caps, total), None
        except ValueError as exc:
            raise InstanceFormatError("structure.groups", str(exc)) from exc
    if kind == "simple-partition":
        groups = _parse_groups(_require(raw, "groups", "structure"), "structure.groups")
        return SimplePartition(groups), None
    raise InstanceFormatError("structure.kind", f"unknown structure kind {kind!r}")


def _parse_distribution(raw: dict, path: str) -> Distribution:
    kind = _require(raw, "kind", path)
    mhr = bool(raw.get("mhr", kind == "exponential"))
    try:
        if kind == "point-mass":
            return point_mass(_require(raw, "value", path), mhr=mhr)
        if kind == "discrete":
            return discrete(
                _require(raw, "values", path), _require(raw, "weights", path), mhr=mhr
            )
        if kind == "uniform":
            return uniform(_require(raw, "a", path), _require(raw, "b", path), mhr=mhr)
        if kind == "exponential":
            return exponential(_require(raw, "rate", path), mhr=mhr)
    except ValueError as exc:
        raise InstanceFormatError(path, str(exc)) from exc
    raise InstanceFormatError(path, f"unknown distribution kind {kind!r}")


def parse_instance(data: bytes | str) -> Instance:
    """Parse and fully validate an instance document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("$", "top level must be an object")
    name = str(doc.get("name", "unnamed"))
    structure, right_labels = _parse_structure(_require(doc, "structure", "$"))
    if "elements" in doc and doc["elements"] != structure.ground_size:
        raise InstanceFormatError(
            "elements",
            f"declared {doc['elements']} elements, structure has {structure.ground_size}",
        )
    raw_dists = _require(doc, "distributions", "$")
    dists: dict[int, Distribution] = {}
    for key, raw in raw_dists.items():
        try:
            e = int(key)
        except ValueError:
            raise InstanceFormatError(
                f"distributions.{key}", "element key must be an integer"
            ) from None
        dists[e] = _parse_distribution(raw, f"distributions.{key}")
    if isinstance(structure, SimplePartition):
        ground = set(structure.ground_set)
        if ground != set(range(len(ground))):
            raise InstanceFormatError(
                "structure.groups", "ground set must be exactly 0..n-1"
            )
    else:
        ground = set(range(structure.ground_size))
    if set(dists) != ground:
        raise InstanceFormatError(
            "distributions",
            f"must cover exactly the ground set ({sorted(ground)}), got {sorted(dists)}",
        )
    partition = None
    alpha = None
    if "partition" in doc:
        raw_part = doc["partition"]
        groups = _parse_groups(_require(raw_part, "groups", "partition"), "partition.groups")
        for grp in groups:
            for e in grp:
                if e not in ground:
                    raise InstanceFormatError(
                        "partition.groups", f"element {e} outside the ground set"
                    )
        alpha = float(_require(raw_part, "alpha", "partition"))
        if alpha < 1:
            raise InstanceFormatError("partition.alpha", "alpha must be >= 1")
        partition = SimplePartition(groups)
    return Instance(name, structure, dists, partition, alpha, right_labels)


def load_instance(path) -> Instance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def instance_to_document(inst: Instance) -> dict:
    """Inverse of parse_instance, for writing fixtures."""
    s = inst.structure
    if isinstance(s, (GeneralMatching, Graphic)):
        structure = {
            "kind": "matching" if isinstance(s, GeneralMatching) else "graphic",
            "vertices": s.vertex_count,
            "edges": [list(e) for e in s.edges],
        }
    elif isinstance(s, Transversal):
        labels = inst.right_labels or tuple(str(r) for r in range(s.right_count))
        structure = {
            "kind": "transversal",
            "left": s.left_count,
            "right_order": list(labels),
            "adjacency": [[labels[r] for r in nbrs] for nbrs in s.adjacency],
        }
    elif isinstance(s, TruncatedPartition):
        structure = {
            "kind": "truncated-partition",
            "groups": [list(g) for g in s.groups],
            "group_capacities": list(s.group_capacities),
            "total_capacity": s.total_capacity,
        }
    else:
        structure = {"kind": "simple-partition", "groups": [list(g) for g in s.groups]}
    dists = {}
    for e, d in sorted(inst.distributions.items()):
        if d.kind == "point-mass":
            raw: dict = {"kind": "point-mass", "value": d.params[0]}
        elif d.kind == "discrete":
            raw = {"kind": "discrete", "values": list(d.atoms), "weights": list(d.weights)}
        elif d.kind == "uniform":
            raw = {"kind": "uniform", "a": d.params[0], "b": d.params[1]}
        else:
            raw = {"kind": "exponential", "rate": d.params[0]}
        raw["mhr"] = d.mhr
        dists[str(e)] = raw
    doc = {
        "name": inst.name,
        "structure": structure,
        "elements": inst.ground_size,
        "distributions": dists,
    }
    if inst.partition is not None:
        doc["partition"] = {
            "alpha": inst.partition_alpha,
            "groups": [list(g) for g in inst.partition.groups],
        }
    return doc
