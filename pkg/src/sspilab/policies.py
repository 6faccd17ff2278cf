"""Online single-sample policies, arrival-order adversaries, and the
partition-based reduction.

Policies consume an arrival stream of (element, reward) pairs and never look
ahead. Each returns a trace recording its thresholds, every decision with the
reason and the critical value beaten, and the collected solution. Rejections
of elements outside a reduction's partition record no reward at all, which is
what the order-obliviousness audit checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import CapExceededError, TaggedValue
from .exact import replay_matching, replay_transversal, replay_truncated
from .feasibility import (
    FeasibilityStructure,
    GeneralMatching,
    Graphic,
    SimplePartition,
    Transversal,
    TruncatedPartition,
    Solution,
    contraction_optimum,
    graphic_partition,
    matroid_greedy_opt,
    maximal_matching,
    ordered_maximal_matching,
)

POLICY_NAMES = (
    "rank1",
    "matching",
    "transversal",
    "laminar",
    "reduction-graphic",
    "reduction-custom",
)

ORDER_SEARCH_CAP = 8


@dataclass(frozen=True)
class ArrivalOrder:
    order: tuple[int, ...]
    provenance: str

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order must be a permutation of the ground set")


@dataclass(frozen=True)
class PolicyDecision:
    element: int
    reward: TaggedValue | None
    accepted: bool
    reason: str
    critical_value: float | None = None


@dataclass
class PolicyTrace:
    policy: str
    thresholds: dict
    decisions: list[PolicyDecision] = field(default_factory=list)
    chosen: Solution = field(default_factory=lambda: Solution(frozenset(), 0.0))

    def accepted_elements(self) -> frozenset[int]:
        return self.chosen.chosen


def beats(x: TaggedValue, threshold: TaggedValue | None) -> bool:
    """Strictly exceed a threshold; the absent threshold means zero, which a
    reward beats only with positive value."""
    if threshold is None:
        return x.value > 0
    return x > threshold


def _threshold_value(threshold: TaggedValue | None) -> float:
    return 0.0 if threshold is None else threshold.value


def rank1_policy(
    samples: Mapping[int, TaggedValue],
    arrivals: Iterable[tuple[int, TaggedValue]],
) -> PolicyTrace:
    """Accept the first reward that beats the largest sample, then stop."""
    threshold = max(samples.values())
    trace = PolicyTrace("rank1", {"global": threshold})
    chosen: set[int] = set()
    total = 0.0
    for element, reward in arrivals:
        if chosen:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "already stopped")
            )
        elif beats(reward, threshold):
            chosen.add(element)
            total += reward.value
            trace.decisions.append(
                PolicyDecision(
                    element, reward, True, "beats max sample", threshold.value
                )
            )
        else:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "below max sample")
            )
    trace.chosen = Solution(frozenset(chosen), total)
    return trace


def matching_policy(
    g: GeneralMatching,
    samples: Mapping[int, TaggedValue],
    arrivals: Iterable[tuple[int, TaggedValue]],
) -> PolicyTrace:
    """Vertex thresholds from the greedy matching on samples; accept an edge
    when its reward beats both endpoint thresholds and both endpoints are
    still unmatched online."""
    offline = maximal_matching(g, samples)
    thresholds: dict[int, TaggedValue | None] = {
        u: None for u in range(g.vertex_count)
    }
    for e in offline.chosen:
        u, v = g.edges[e]
        thresholds[u] = samples[e]
        thresholds[v] = samples[e]
    trace = PolicyTrace("matching", dict(thresholds))
    matched: set[int] = set()
    chosen: set[int] = set()
    total = 0.0
    for element, reward in arrivals:
        u, v = g.edges[element]
        if not (beats(reward, thresholds[u]) and beats(reward, thresholds[v])):
            trace.decisions.append(
                PolicyDecision(element, reward, False, "below endpoint threshold")
            )
        elif u in matched or v in matched:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "endpoint already matched")
            )
        else:
            matched.update((u, v))
            chosen.add(element)
            total += reward.value
            crit = max(_threshold_value(thresholds[u]), _threshold_value(thresholds[v]))
            trace.decisions.append(
                PolicyDecision(
                    element, reward, True, "beats both endpoint thresholds", crit
                )
            )
    trace.chosen = Solution(frozenset(chosen), total)
    return trace


def transversal_policy(
    t: Transversal,
    samples: Mapping[int, TaggedValue],
    arrivals: Iterable[tuple[int, TaggedValue]],
    reroute: bool = False,
) -> PolicyTrace:
    """Right-node thresholds from the ordered-maximal matching on samples.

    An arriving element scans its neighbors in the fixed order for the first
    node whose threshold (and its own sample) its reward beats. If that node
    is already matched online the element is skipped; with `reroute=True` the
    scan continues to later admissible nodes instead.
    """
    offline = ordered_maximal_matching(t, samples)
    thresholds: dict[int, TaggedValue | None] = {
        r: None for r in range(t.right_count)
    }
    assert offline.assignment is not None
    for l, r in offline.assignment.items():
        thresholds[r] = samples[l]
    trace = PolicyTrace("transversal", dict(thresholds))
    taken: set[int] = set()
    chosen: set[int] = set()
    assignment: dict[int, int] = {}
    total = 0.0
    for element, reward in arrivals:
        if not beats(reward, samples[element]):
            trace.decisions.append(
                PolicyDecision(element, reward, False, "below own sample")
            )
            continue
        target = None
        for r in t.sorted_neighbors(element):
            if beats(reward, thresholds[r]):
                if r not in taken:
                    target = r
                    break
                if not reroute:
                    break  # literal rule: the designated node is taken, skip
        if target is None:
            trace.decisions.append(
                PolicyDecision(
                    element, reward, False, "no admissible free right node"
                )
            )
        else:
            taken.add(target)
            chosen.add(element)
            assignment[element] = target
            total += reward.value
            crit = max(_threshold_value(thresholds[target]), samples[element].value)
            trace.decisions.append(
                PolicyDecision(
                    element, reward, True, f"beats node {target} threshold", crit
                )
            )
    trace.chosen = Solution(frozenset(chosen), total, assignment)
    return trace


def laminar_policy(
    fs: TruncatedPartition,
    samples: Mapping[int, TaggedValue],
    arrivals: Iterable[tuple[int, TaggedValue]],
) -> PolicyTrace:
    """Accept a feasible arrival iff swapping its sample for its reward
    improves the greedy optimum of the sample vector.

    Improvement is decided in the strict tagged order: the reward must beat
    the element's own sample and enter the greedy solution of the swapped
    vector. Under value ties (point masses) this is the tie-broken reading of
    the totals comparison; comparing float totals instead would both reject
    strict tie-token improvements and not be expressible pairwise.
    """
    base = matroid_greedy_opt(fs, samples)
    v0 = base.total
    trace = PolicyTrace("laminar", {"sample-optimum": v0})
    counts = [0] * len(fs.groups)
    taken = 0
    chosen: set[int] = set()
    total = 0.0
    for element, reward in arrivals:
        g = fs.group_of(element)
        if counts[g] >= fs.group_capacities[g] or taken >= fs.total_capacity:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "capacity filled")
            )
            continue
        if not reward > samples[element]:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "below own sample")
            )
            continue
        swapped = dict(samples)
        swapped[element] = reward
        if element in matroid_greedy_opt(fs, swapped).chosen:
            counts[g] += 1
            taken += 1
            chosen.add(element)
            total += reward.value
            crit = v0 - contraction_optimum(fs, element, samples)
            trace.decisions.append(
                PolicyDecision(
                    element, reward, True, "improves sample optimum", crit
                )
            )
        else:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "does not improve sample optimum")
            )
    trace.chosen = Solution(frozenset(chosen), total)
    return trace


@dataclass(frozen=True)
class PartitionScheme:
    """A recipe turning a matroid into parallel rank-1 groups.

    `queried` names the elements whose samples the recipe observes; `build`
    returns a simple partition over a subset of the remaining elements.
    Every transversal of the groups must be independent in the source
    matroid; `alpha` is the declared expected-optimum loss factor.
    """

    name: str
    alpha: float
    queried: Callable[[FeasibilityStructure], frozenset[int]]
    build: Callable[
        [FeasibilityStructure, Mapping[int, TaggedValue], np.random.Generator | None],
        SimplePartition,
    ]


def graphic_scheme() -> PartitionScheme:
    """Random-vertex-order partition of a graphic matroid (alpha = 2)."""

    def build(fs, _samples, rng):
        partition, _sigma = graphic_partition(fs, rng=rng)
        return partition

    return PartitionScheme(
        name="graphic",
        alpha=2.0,
        queried=lambda fs: frozenset(),
        build=build,
    )


def fixed_partition_scheme(partition: SimplePartition, alpha: float) -> PartitionScheme:
    """A user-supplied static partition with its declared loss factor."""
    return PartitionScheme(
        name="fixed",
        alpha=alpha,
        queried=lambda fs: frozenset(),
        build=lambda fs, samples, rng: partition,
    )


def reduction_policy(
    fs: FeasibilityStructure,
    scheme: PartitionScheme,
    samples: Mapping[int, TaggedValue],
    arrivals: Iterable[tuple[int, TaggedValue]],
    rng: np.random.Generator | None = None,
) -> PolicyTrace:
    """Two-phase reduction: build the scheme's partition from queried samples
    offline, set each group's threshold to its largest sample, then run one
    first-past-the-threshold instance per group in parallel.

    Elements outside the partition's ground set are rejected without their
    reward ever being observed.
    """
    queried = scheme.queried(fs)
    partition = scheme.build(fs, {e: samples[e] for e in queried}, rng)
    ground = partition.ground_set
    if ground & queried:
        raise ValueError("scheme placed a queried element inside the partition")
    thresholds: dict[int, TaggedValue | None] = {}
    for gi, group in enumerate(partition.groups):
        best = None
        for e in group:
            s = samples[e]
            if best is None or s > best:
                best = s
        thresholds[gi] = best
    trace = PolicyTrace("reduction", dict(thresholds))
    filled: set[int] = set()
    chosen: set[int] = set()
    total = 0.0
    for element, reward in arrivals:
        if element not in ground:
            # The reward stays unread; the trace records no value.
            trace.decisions.append(
                PolicyDecision(element, None, False, "outside partition ground set")
            )
            continue
        gi = partition.group_of(element)
        if gi in filled:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "group already served")
            )
        elif beats(reward, thresholds[gi]):
            filled.add(gi)
            chosen.add(element)
            total += reward.value
            trace.decisions.append(
                PolicyDecision(
                    element, reward, True, f"first to beat group {gi} threshold",
                    _threshold_value(thresholds[gi]),
                )
            )
        else:
            trace.decisions.append(
                PolicyDecision(element, reward, False, "below group threshold")
            )
    trace.chosen = Solution(frozenset(chosen), total)
    return trace


def run_policy(
    policy: str,
    structure: FeasibilityStructure,
    samples: Mapping[int, TaggedValue],
    rewards: Mapping[int, TaggedValue],
    order: Sequence[int],
    *,
    scheme: PartitionScheme | None = None,
    rng: np.random.Generator | None = None,
    reroute: bool = False,
) -> PolicyTrace:
    """Dispatch a named policy over an arrival order."""
    arrivals = [(e, rewards[e]) for e in order]
    if policy == "rank1":
        return rank1_policy(samples, arrivals)
    if policy == "matching":
        if not isinstance(structure, GeneralMatching):
            raise TypeError("matching policy needs a general-matching structure")
        return matching_policy(structure, samples, arrivals)
    if policy == "transversal":
        if not isinstance(structure, Transversal):
            raise TypeError("transversal policy needs a transversal structure")
        return transversal_policy(structure, samples, arrivals, reroute=reroute)
    if policy == "laminar":
        if not isinstance(structure, TruncatedPartition):
            raise TypeError("laminar policy needs a truncated-partition structure")
        return laminar_policy(structure, samples, arrivals)
    if policy == "reduction-graphic":
        if not isinstance(structure, Graphic):
            raise TypeError("graphic reduction needs a graphic structure")
        return reduction_policy(structure, graphic_scheme(), samples, arrivals, rng)
    if policy == "reduction-custom":
        if scheme is None:
            raise ValueError("reduction-custom needs a partition scheme")
        return reduction_policy(structure, scheme, samples, arrivals, rng)
    raise ValueError(f"unknown policy {policy!r}")


def fast_replayer(
    policy: str,
    structure: FeasibilityStructure,
    samples: Mapping[int, TaggedValue],
    rewards: Mapping[int, TaggedValue],
    *,
    scheme: PartitionScheme | None = None,
    rng: np.random.Generator | None = None,
) -> Callable[[Sequence[int]], float]:
    """Build a lean order->total evaluator with the offline phase done once.

    Offline thresholds are order-independent, so worst-case order searches
    only repeat the online pass. Traced policies and these replays must agree
    on every order; tests enforce that.
    """
    n = len(rewards)
    xvals = [rewards[e].value for e in range(n)]
    if policy == "rank1":
        threshold = max(samples.values())
        exceeds = sum(1 << e for e in range(n) if beats(rewards[e], threshold))
        group_of = {e: 0 for e in range(n)}
        return lambda order: replay_truncated(
            order, exceeds, group_of, (1,), 1, xvals
        )[0]
    if policy == "matching":
        offline = maximal_matching(structure, samples)
        thr: dict[int, TaggedValue | None] = {u: None for u in range(structure.vertex_count)}
        for e in offline.chosen:
            u, v = structure.edges[e]
            thr[u] = thr[v] = samples[e]
        ex = 0
        for e in range(n):
            u, v = structure.edges[e]
            if beats(rewards[e], thr[u]) and beats(rewards[e], thr[v]):
                ex |= 1 << e
        vmasks = [
            (1 << structure.edges[e][0]) | (1 << structure.edges[e][1])
            for e in range(n)
        ]
        return lambda order: replay_matching(order, ex, vmasks, xvals)[0]
    if policy == "transversal":
        offline = ordered_maximal_matching(structure, samples)
        thr = {r: None for r in range(structure.right_count)}
        assert offline.assignment is not None
        for l, r in offline.assignment.items():
            thr[r] = samples[l]
        targets = []
        for l in range(n):
            tgt = -1
            if beats(rewards[l], samples[l]):
                for r in structure.sorted_neighbors(l):
                    if beats(rewards[l], thr[r]):
                        tgt = r
                        break
            targets.append(tgt)
        return lambda order: replay_transversal(order, targets, xvals)[0]
    if policy == "laminar":
        accepts = 0
        for e in range(n):
            if not rewards[e] > samples[e]:
                continue
            swapped = dict(samples)
            swapped[e] = rewards[e]
            if e in matroid_greedy_opt(structure, swapped).chosen:
                accepts |= 1 << e
        group_of = {e: i for i, g in enumerate(structure.groups) for e in g}
        return lambda order: replay_truncated(
            order, accepts, group_of, structure.group_capacities,
            structure.total_capacity, xvals,
        )[0]
    if policy in ("reduction-graphic", "reduction-custom"):
        if policy == "reduction-graphic":
            scheme = graphic_scheme()
        if scheme is None:
            raise ValueError("reduction-custom needs a partition scheme")
        queried = scheme.queried(structure)
        partition = scheme.build(structure, {e: samples[e] for e in queried}, rng)
        group_of = {}
        accepts = 0
        caps = tuple(1 for _ in partition.groups)
        for gi, group in enumerate(partition.groups):
            best = None
            for e in group:
                if best is None or samples[e] > best:
                    best = samples[e]
            for e in group:
                group_of[e] = gi
                if beats(rewards[e], best):
                    accepts |= 1 << e
        k = len(partition.groups)
        return lambda order: replay_truncated(
            [e for e in order if e in group_of], accepts, group_of, caps, k, xvals
        )[0]
    raise ValueError(f"unknown policy {policy!r}")


def adversarial_order(
    policy: str,
    structure: FeasibilityStructure,
    samples: Mapping[int, TaggedValue],
    rewards: Mapping[int, TaggedValue],
    mode: str,
    *,
    seed: int | None = None,
    scheme: PartitionScheme | None = None,
    rng: np.random.Generator | None = None,
) -> ArrivalOrder:
    """Produce an arrival order: fixed (by element id), increasing rewards,
    seeded random, or the exact minimizer over all n! orders."""
    n = len(rewards)
    elements = list(range(n))
    if mode == "fixed":
        return ArrivalOrder(tuple(elements), "fixed")
    if mode == "increasing":
        elements.sort(key=lambda e: rewards[e].key)
        return ArrivalOrder(tuple(elements), "increasing-rewards")
    if mode == "random":
        stream = np.random.default_rng(seed)
        return ArrivalOrder(
            tuple(int(e) for e in stream.permutation(n)), f"random({seed})"
        )
    if mode == "exhaustive-min":
        if n > ORDER_SEARCH_CAP:
            raise CapExceededError(
                f"exhaustive-min order search capped at n <= {ORDER_SEARCH_CAP}"
            )
        replay = fast_replayer(
            policy, structure, samples, rewards, scheme=scheme, rng=rng
        )
        best_order = None
        best_total = None
        for perm in permutations(elements):
            total = replay(perm)
            if best_total is None or total < best_total:
                best_total = total
                best_order = perm
        assert best_order is not None
        return ArrivalOrder(best_order, "exhaustive-min")
    raise ValueError(f"unknown arrival-order mode {mode!r}")
