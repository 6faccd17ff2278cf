"""Supporting events, saturation indices, exact lemma verifiers, and the
nested-bins coin game.

The verifiers enumerate every coin configuration and compare both sides of
each identity or inequality as exact integer counts (value-weighted sums use
exact rationals built from the float values). The scalar supporting-event
functions here are reference implementations; the vectorized tables in
`exact` must agree with them, and tests enforce that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .core import (
    CapExceededError,
    Configuration,
    ElementRealization,
    SamplePath,
    validate_configuration,
)
from .exact import (
    SUFFICIENCY_ORDER_CAP,
    ConfigEnsemble,
    bitmask_rows,
    cached_permutations,
    replay_truncated,
)
from .feasibility import (
    FeasibilityStructure,
    GeneralMatching,
    Transversal,
    TruncatedPartition,
    greedy_on_path,
    greedy_state,
)

LEMMA_IDS = (
    "symmetry",
    "forget-z",
    "greedy-objective",
    "match-unique",
    "match-sufficient",
    "match-prob",
    "trans-unique",
    "trans-sufficient",
    "trans-prob",
    "laminar-sufficient",
    "laminar-prob",
    "game-value",
)

GAME_RR_CAP = 2
GAME_RB_CAP = 4


@dataclass(frozen=True)
class SupportReport:
    """Outcome of one supporting-event query, with the witness indices."""

    index: int
    kind: str
    holds: bool
    witnesses: dict


def _free_flags(fs, path: SamplePath, config: Configuration, side: str) -> list[bool]:
    """Free flags for every path index in one greedy pass."""
    state = greedy_state(fs)
    flags: list[bool] = []
    for j, entry in enumerate(path.entries):
        free = state.can_add(entry.element)
        flags.append(free)
        if config.coins[j] == side and free:
            state.add(entry.element)
    return flags


def _transversal_targets_on_path(
    t: Transversal, path: SamplePath, config: Configuration
) -> list[int | None]:
    """Per index, the right node the sample-side greedy would use (None when
    the index is not free with respect to tails)."""
    state = greedy_state(t)
    targets: list[int | None] = []
    for j, entry in enumerate(path.entries):
        r = state.target(entry.element)
        targets.append(r)
        if config.coins[j] == "T" and r is not None:
            state.add(entry.element)
    return targets


def supporting_event_matching(
    fs: GeneralMatching, path: SamplePath, config: Configuration, j: int
) -> SupportReport:
    """The matching supporting event at index j.

    Holds when j is a free-for-tails Y-value whose coin is heads, and the
    first (and, if needed, second) later free-for-tails index conflicting
    with its edge shows tails.
    """
    validate_configuration(path, config)
    free_t = _free_flags(fs, path, config, "T")
    entry = path.entries[j]
    witnesses: dict = {"l1": None, "l2": None}
    base = entry.label == "Y" and free_t[j] and config.coins[j] == "H"
    if not base:
        return SupportReport(j, "matching", False, witnesses)
    ej = entry.element
    ends_j = set(fs.edges[ej])
    l1 = None
    for l in range(j + 1, path.length):
        el = path.entries[l].element
        if (el == ej or ends_j & set(fs.edges[el])) and free_t[l]:
            l1 = l
            break
    # A Y-value with a heads coin always leaves its other value (at least)
    # free for tails, so the first conflicting index must exist.
    assert l1 is not None, "no conflicting free index after a Y-value"
    witnesses["l1"] = l1
    if config.coins[l1] != "T":
        return SupportReport(j, "matching", False, witnesses)
    el1 = path.entries[l1].element
    if el1 == ej or set(fs.edges[el1]) == ends_j:
        return SupportReport(j, "matching", True, witnesses)
    l2 = None
    for l in range(l1 + 1, path.length):
        el = path.entries[l].element
        if ends_j & set(fs.edges[el]) and free_t[l]:
            l2 = l
            break
    witnesses["l2"] = l2
    holds = l2 is None or config.coins[l2] == "T"
    return SupportReport(j, "matching", holds, witnesses)


def candidate_node(
    t: Transversal, path: SamplePath, config: Configuration, j: int
) -> int | None:
    """The right node that would take element e_j in the sample-side
    ordered-maximal matching if its coin were tails; None when the index is
    not free for tails."""
    validate_configuration(path, config)
    return _transversal_targets_on_path(t, path, config)[j]


def supporting_event_transversal(
    t: Transversal, path: SamplePath, config: Configuration, j: int, r: int
) -> SupportReport:
    """The right-node supporting event at (j, r)."""
    validate_configuration(path, config)
    targets = _transversal_targets_on_path(t, path, config)
    entry = path.entries[j]
    witnesses: dict = {"r": r, "l": None}
    base = (
        entry.label == "Y"
        and targets[j] is not None
        and config.coins[j] == "H"
        and targets[j] == r
    )
    if not base:
        return SupportReport(j, "transversal", False, witnesses)
    for l in range(j + 1, path.length):
        if path.entries[l].label != "Y":
            continue
        if targets[l] is not None and targets[l] == r:
            witnesses["l"] = l
            return SupportReport(j, "transversal", config.coins[l] == "T", witnesses)
    return SupportReport(j, "transversal", True, witnesses)


def saturation_index(
    fs: TruncatedPartition,
    path: SamplePath,
    config: Configuration,
    j: int,
    group: int | None,
    side: str,
) -> float:
    """First index after j by which the group (or the whole ground set when
    group is None) accumulates capacity-many qualifying Y-values whose coins
    show `side`; math.inf when it never does.

    Qualifying means free with respect to tails at that index.
    """
    validate_configuration(path, config)
    free_t = _free_flags(fs, path, config, "T")
    if group is None:
        members = None
        cap = fs.total_capacity
    else:
        members = set(fs.groups[group])
        cap = fs.group_capacities[group]
    count = 0
    for i in range(j + 1, path.length):
        entry = path.entries[i]
        if entry.label != "Y":
            continue
        if members is not None and entry.element not in members:
            continue
        if config.coins[i] == side and free_t[i]:
            count += 1
            if count == cap:
                return i
    return math.inf


def supporting_event_laminar(
    fs: TruncatedPartition, path: SamplePath, config: Configuration, j: int
) -> SupportReport:
    """The two-layer saturation supporting event at index j."""
    validate_configuration(path, config)
    free_t = _free_flags(fs, path, config, "T")
    entry = path.entries[j]
    g = fs.group_of(entry.element)
    witnesses: dict = {"group": g}
    if not (entry.label == "Y" and free_t[j] and config.coins[j] == "H"):
        return SupportReport(j, "laminar", False, witnesses)
    holds = True
    for scope, gid in (("group", g), ("all", None)):
        i_t = saturation_index(fs, path, config, j, gid, "T")
        i_h = saturation_index(fs, path, config, j, gid, "H")
        first = min(i_t, i_h)
        witnesses[f"{scope}_sat_T"] = i_t
        witnesses[f"{scope}_sat_H"] = i_h
        if first != math.inf and config.coins[int(first)] != "T":
            holds = False
    return SupportReport(j, "laminar", holds, witnesses)


# ---------------------------------------------------------------------------
# Lemma verifiers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    lemma: str
    passed: bool
    lhs: Fraction
    rhs: Fraction
    configurations: int
    detail: str = ""


def _counts(mask_2d: np.ndarray) -> np.ndarray:
    return mask_2d.sum(axis=1)


def _verify_symmetry(ens: ConfigEnsemble) -> LemmaReport:
    heads = ens.heads
    free_h = ens.free("H")
    free_t = ens.free("T")
    lhs_total = 0
    rhs_total = 0
    fail = None
    for j in range(ens.length):
        a = int((heads[j] & free_h[j]).sum())
        b = int((~heads[j] & free_t[j]).sum())
        lhs_total += a
        rhs_total += b
        if a != b and fail is None:
            fail = f"index {j}: heads/free-heads {a} != tails/free-tails {b}"
        if ens.is_y[j]:
            c = int((heads[j] & free_t[j]).sum())
            d = int((~heads[j] & free_t[j]).sum())
            if c != d and fail is None:
                fail = f"Y-index {j}: heads/free-tails {c} != tails/free-tails {d}"
    return LemmaReport(
        "symmetry", fail is None, Fraction(lhs_total), Fraction(rhs_total),
        ens.num_configs, fail or "",
    )


def _verify_forget_z(ens: ConfigEnsemble) -> LemmaReport:
    counts = _counts(ens.heads & ens.free("H"))
    y_sum = Fraction(0)
    all_sum = Fraction(0)
    for j in range(ens.length):
        term = Fraction(float(ens.w_val[j])) * int(counts[j])
        all_sum += term
        if ens.is_y[j]:
            y_sum += term
    passed = 2 * y_sum >= all_sum
    return LemmaReport("forget-z", passed, y_sum, all_sum / 2, ens.num_configs)


def _verify_greedy_objective(ens: ConfigEnsemble) -> LemmaReport:
    # Left side from the vectorized free-flag tables; right side from the
    # scalar path greedy, an independent code path.
    counts = _counts(ens.heads & ens.free("H"))
    lhs = Fraction(0)
    for j in range(ens.length):
        lhs += Fraction(float(ens.w_val[j])) * int(counts[j])
    recount = [0] * ens.length
    reward_idx = {e: ens.reward_index(e) for e in ens.elements}
    for mask in range(ens.num_configs):
        config = Configuration.from_heads_mask(ens.path, mask)
        sol = greedy_on_path(ens.structure, ens.path, config, "H")
        for e in sol.chosen:
            recount[int(reward_idx[e][mask])] += 1
    rhs = Fraction(0)
    for j in range(ens.length):
        rhs += Fraction(float(ens.w_val[j])) * recount[j]
    return LemmaReport(
        "greedy-objective", lhs == rhs, lhs, rhs, ens.num_configs,
        "" if lhs == rhs else "flag-table objective != replayed greedy objective",
    )


def _prob_report(name: str, ens: ConfigEnsemble, support: np.ndarray, factor: int) -> LemmaReport:
    baseline = _counts(ens.heads & ens.free("H"))
    sup_counts = _counts(support)
    fail = None
    lhs_total = 0
    rhs_total = 0
    for j in range(ens.length):
        if not ens.is_y[j]:
            continue
        lhs_total += int(sup_counts[j])
        rhs_total += int(baseline[j])
        if factor * int(sup_counts[j]) < int(baseline[j]) and fail is None:
            fail = (
                f"Y-index {j}: {factor}*{int(sup_counts[j])} < {int(baseline[j])}"
            )
    return LemmaReport(
        name, fail is None, Fraction(lhs_total), Fraction(rhs_total),
        ens.num_configs, fail or "",
    )


def _verify_match_unique(ens: ConfigEnsemble) -> LemmaReport:
    fs = ens.structure
    support = ens.support_matching()
    worst = 0
    fail = None
    for u in range(fs.vertex_count):
        rows = [j for j in range(ens.length) if u in fs.edges[ens.elem[j]]]
        if not rows:
            continue
        sim = support[rows].sum(axis=0)
        m = int(sim.max(initial=0))
        worst = max(worst, m)
        if m > 1 and fail is None:
            fail = f"vertex {u} supported by {m} indices in one configuration"
    return LemmaReport(
        "match-unique", worst <= 1, Fraction(worst), Fraction(1),
        ens.num_configs, fail or "",
    )


def _verify_trans_unique(ens: ConfigEnsemble) -> LemmaReport:
    support, cand = ens.support_transversal()
    worst = 1 if support.any() else 0
    fail = None
    ys = [j for j in range(ens.length) if ens.is_y[j]]
    for a in range(len(ys)):
        for b in range(a + 1, len(ys)):
            j1, j2 = ys[a], ys[b]
            viol = support[j1] & support[j2] & (cand[j1] == cand[j2])
            if viol.any():
                worst = 2
                if fail is None:
                    fail = f"indices {j1},{j2} both support one right node"
    return LemmaReport(
        "trans-unique", worst <= 1, Fraction(worst), Fraction(1),
        ens.num_configs, fail or "",
    )


def _reward_values(ens: ConfigEnsemble) -> np.ndarray:
    """(n, configs) reward value of each element."""
    out = np.empty((ens.n, ens.num_configs))
    for e in ens.elements:
        out[ens.bit_of[e]] = ens.reward_triple(e).val
    return out


def _verify_match_sufficient(ens: ConfigEnsemble) -> LemmaReport:
    fs = ens.structure
    if ens.n > SUFFICIENCY_ORDER_CAP:
        raise CapExceededError(
            f"all-orders sufficiency replay capped at n <= {SUFFICIENCY_ORDER_CAP}"
        )
    support = ens.support_matching()
    ex_masks = bitmask_rows(ens.matching_exceeds())
    xvals = _reward_values(ens)
    pairs = [fs.edges[e] for e in range(ens.n)]
    checks = 0
    fail = None
    for c in range(ens.num_configs):
        sup_j = [j for j in range(ens.length) if support[j, c]]
        if not sup_j:
            continue
        ex = ex_masks[c]
        xv = xvals[:, c].tolist()
        live = tuple(e for e in range(ens.n) if (ex >> e) & 1)
        needs = [(ens.elem[j], float(ens.w_val[j]), j) for j in sup_j]
        for perm in cached_permutations(live):
            val_at = [0.0] * fs.vertex_count
            matched = 0
            for e in perm:
                u, v = pairs[e]
                bits = (1 << u) | (1 << v)
                if not matched & bits:
                    matched |= bits
                    val_at[u] = val_at[v] = xv[e]
            for e_j, w_j, j in needs:
                checks += 1
                u, v = pairs[e_j]
                if val_at[u] + val_at[v] < w_j:
                    fail = fail or (
                        f"config {c}, index {j}: matched value "
                        f"{val_at[u] + val_at[v]} < {w_j}"
                    )
    return LemmaReport(
        "match-sufficient", fail is None, Fraction(0 if fail is None else 1),
        Fraction(0), ens.num_configs, fail or f"{checks} replayed checks",
    )


def _verify_trans_sufficient(ens: ConfigEnsemble) -> LemmaReport:
    if ens.n > SUFFICIENCY_ORDER_CAP:
        raise CapExceededError(
            f"all-orders sufficiency replay capped at n <= {SUFFICIENCY_ORDER_CAP}"
        )
    support, cand = ens.support_transversal()
    targets = ens.transversal_targets()
    xvals = _reward_values(ens)
    checks = 0
    fail = None
    for c in range(ens.num_configs):
        sup = [
            (ens.elem[j], float(ens.w_val[j]), int(cand[j, c]).bit_length() - 1, j)
            for j in range(ens.length)
            if support[j, c]
        ]
        if not sup:
            continue
        tg = targets[:, c].tolist()
        xv = xvals[:, c].tolist()
        live = tuple(l for l in range(ens.n) if tg[l] >= 0)
        for perm in cached_permutations(live):
            q: dict[int, float] = {}
            taken = 0
            for l in perm:
                r = tg[l]
                bit = 1 << r
                if not taken & bit:
                    taken |= bit
                    q[r] = xv[l]
            for e_j, w_j, r_j, j in sup:
                checks += 1
                if q.get(r_j, 0.0) < w_j:
                    fail = fail or (
                        f"config {c}, index {j}: node {r_j} matched at "
                        f"{q.get(r_j, 0.0)} < {w_j}"
                    )
    return LemmaReport(
        "trans-sufficient", fail is None, Fraction(0 if fail is None else 1),
        Fraction(0), ens.num_configs, fail or f"{checks} replayed checks",
    )


def _verify_laminar_sufficient(ens: ConfigEnsemble) -> LemmaReport:
    fs = ens.structure
    support = ens.support_laminar()
    accept, _ = ens.laminar_accepts()
    accept_masks = bitmask_rows(accept)
    group_of = {e: i for i, g in enumerate(fs.groups) for e in g}
    xtrip = [
        (ens.reward_triple(e).val, ens.reward_triple(e).tb) for e in ens.elements
    ]
    checks = 0
    fail = None
    for c in range(ens.num_configs):
        sup_j = [j for j in range(ens.length) if support[j, c]]
        if not sup_j:
            continue
        order = sorted(
            range(ens.n), key=lambda e: (xtrip[e][0][c], xtrip[e][1][c], e)
        )
        xv = [0.0] * ens.n  # values unused by the replay bookkeeping
        _, acc = replay_truncated(
            order, accept_masks[c], group_of, fs.group_capacities,
            fs.total_capacity, xv,
        )
        for j in sup_j:
            checks += 1
            if not (acc >> ens.elem[j]) & 1:
                fail = fail or (
                    f"config {c}, index {j}: element {ens.elem[j]} not collected "
                    "under the increasing order"
                )
    return LemmaReport(
        "laminar-sufficient", fail is None, Fraction(0 if fail is None else 1),
        Fraction(0), ens.num_configs, fail or f"{checks} replayed checks",
    )


def verify_lemma(
    lemma_id: str,
    structure: FeasibilityStructure | None = None,
    realizations: Sequence[ElementRealization] | None = None,
    cap: int = 20,
) -> LemmaReport:
    """Verify one named identity or inequality by exhaustive enumeration.

    The game-value lemma needs no instance; all others take a structure and a
    fixed set of realizations (one per ground-set element).
    """
    if lemma_id not in LEMMA_IDS:
        raise ValueError(f"unknown lemma id {lemma_id!r}")
    if lemma_id == "game-value":
        return _verify_game_value()
    if structure is None or realizations is None:
        raise ValueError(f"lemma {lemma_id!r} needs a structure and realizations")
    if lemma_id.startswith("match") and not isinstance(structure, GeneralMatching):
        raise TypeError("matching lemmas need a general-matching structure")
    if lemma_id.startswith("trans") and not isinstance(structure, Transversal):
        raise TypeError("transversal lemmas need a transversal structure")
    if lemma_id.startswith("laminar") and not isinstance(structure, TruncatedPartition):
        raise TypeError("laminar lemmas need a truncated-partition structure")
    ens = ConfigEnsemble(structure, realizations, cap=cap)
    if lemma_id == "symmetry":
        return _verify_symmetry(ens)
    if lemma_id == "forget-z":
        return _verify_forget_z(ens)
    if lemma_id == "greedy-objective":
        return _verify_greedy_objective(ens)
    if lemma_id == "match-unique":
        return _verify_match_unique(ens)
    if lemma_id == "match-sufficient":
        return _verify_match_sufficient(ens)
    if lemma_id == "match-prob":
        return _prob_report("match-prob", ens, ens.support_matching(), 4)
    if lemma_id == "trans-unique":
        return _verify_trans_unique(ens)
    if lemma_id == "trans-sufficient":
        return _verify_trans_sufficient(ens)
    if lemma_id == "trans-prob":
        support, _ = ens.support_transversal()
        return _prob_report("trans-prob", ens, support, 2)
    if lemma_id == "laminar-sufficient":
        return _verify_laminar_sufficient(ens)
    if lemma_id == "laminar-prob":
        return _prob_report("laminar-prob", ens, ens.support_laminar(), 4)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# The nested-bins coin game
# ---------------------------------------------------------------------------


@dataclass
class GameState:
    """Running state of the nested-bins game.

    Every toss lands in bin B; tosses aimed at R land in both. A bin is
    saturated once either its heads or its tails count reaches its capacity;
    the side that got there first is recorded in `saturated`.
    """

    r_r: int
    r_b: int
    heads: dict[str, int] = field(default_factory=lambda: {"R": 0, "B": 0})
    tails: dict[str, int] = field(default_factory=lambda: {"R": 0, "B": 0})
    toss_log: list[tuple[int, str, str]] = field(default_factory=list)
    r_toss_log: list[tuple[int, str, int]] = field(default_factory=list)
    saturated: dict[str, str] = field(default_factory=dict)

    def is_saturated(self, bin_name: str) -> bool:
        return bin_name in self.saturated

    def _cap(self, bin_name: str) -> int:
        return self.r_r if bin_name == "R" else self.r_b

    def record(self, t: int, bin_name: str, outcome: str) -> None:
        self.toss_log.append((t, bin_name, outcome))
        bins = ("R", "B") if bin_name == "R" else ("B",)
        if bin_name == "R":
            self.r_toss_log.append((len(self.r_toss_log) + 1, outcome, t))
        for b in bins:
            (self.heads if outcome == "H" else self.tails)[b] += 1
            if b not in self.saturated:
                if self.heads[b] >= self._cap(b):
                    self.saturated[b] = "H"
                elif self.tails[b] >= self._cap(b):
                    self.saturated[b] = "T"


Strategy = Callable[[GameState], str]


def b_first_strategy(state: GameState) -> str:
    return "R" if state.is_saturated("B") else "B"


def play_coin_game(
    r_r: int, r_b: int, strategy: Strategy, coins: Iterable[str]
) -> tuple[str, GameState]:
    """Play until both bins are saturated; the second player wins only when
    both saturate with tails.

    The strategy sees the state (logs up to the previous toss) and must name
    a bin before the next outcome is drawn; naming a saturated bin is coerced
    to the other one.
    """
    if not r_r < r_b:
        raise ValueError("need r_r < r_b")
    state = GameState(r_r, r_b)
    stream: Iterator[str] = iter(coins)
    t = 0

    def decided() -> bool:
        # Heads-saturation of either bin settles the game for player one.
        if state.saturated.get("R") == "H" or state.saturated.get("B") == "H":
            return True
        return state.is_saturated("R") and state.is_saturated("B")

    while not decided():
        t += 1
        choice = strategy(state)
        if choice not in ("R", "B"):
            raise ValueError(f"strategy must answer 'R' or 'B', got {choice!r}")
        if choice == "R" and state.is_saturated("R"):
            choice = "B"
        if choice == "B" and state.is_saturated("B"):
            choice = "R"
        outcome = next(stream)
        if outcome not in ("H", "T"):
            raise ValueError(f"coin stream must yield 'H' or 'T', got {outcome!r}")
        state.record(t, choice, outcome)
    winner = (
        "P2"
        if state.saturated.get("R") == "T" and state.saturated.get("B") == "T"
        else "P1"
    )
    return winner, state


def _rng_coins(rng: np.random.Generator) -> Iterator[str]:
    while True:
        yield "H" if rng.random() < 0.5 else "T"


def game_monte_carlo(
    r_r: int,
    r_b: int,
    trials: int,
    seed: int,
    strategy: Strategy = b_first_strategy,
) -> float:
    """P2 win frequency under the given strategy."""
    rng = np.random.default_rng(seed)
    coins = _rng_coins(rng)
    wins = 0
    for _ in range(trials):
        winner, _ = play_coin_game(r_r, r_b, strategy, coins)
        if winner == "P2":
            wins += 1
    return wins / trials


def exhaustive_game_value(
    r_r: int, r_b: int, strategy: str = "optimal"
) -> Fraction:
    """Exact P2-win probability by backward induction over count states.

    `optimal` lets the first player minimize; `b-first` pins the first player
    to saturating B before touching R.
    """
    if not r_r < r_b:
        raise ValueError("need r_r < r_b")
    if r_r > GAME_RR_CAP or r_b > GAME_RB_CAP:
        raise CapExceededError(
            f"game value capped at r_r <= {GAME_RR_CAP}, r_b <= {GAME_RB_CAP}"
        )
    memo: dict[tuple[int, int, int, int], Fraction] = {}

    def sat(h: int, t: int, cap: int) -> str | None:
        if h >= cap:
            return "H"
        if t >= cap:
            return "T"
        return None

    def value(hr: int, tr: int, hb: int, tb: int) -> Fraction:
        key = (hr, tr, hb, tb)
        if key in memo:
            return memo[key]
        sr = sat(hr, tr, r_r)
        sb = sat(hb, tb, r_b)
        if sr and sb:
            result = Fraction(1) if (sr == "T" and sb == "T") else Fraction(0)
        else:
            options = []
            if sr is None:
                # A toss aimed at R also lands in B while B still counts.
                if sb is None:
                    options.append(
                        ("R", lambda: (value(hr + 1, tr, hb + 1, tb)
                                       + value(hr, tr + 1, hb, tb + 1)) / 2)
                    )
                else:
                    options.append(
                        ("R", lambda: (value(hr + 1, tr, hb, tb)
                                       + value(hr, tr + 1, hb, tb)) / 2)
                    )
            if sb is None:
                options.append(
                    ("B", lambda: (value(hr, tr, hb + 1, tb)
                                   + value(hr, tr, hb, tb + 1)) / 2)
                )
            if strategy == "b-first":
                pick = "B" if sb is None else "R"
                result = next(f for name, f in options if name == pick)()
            else:
                result = min(f() for _, f in options)
        memo[key] = result
        return result

    return value(0, 0, 0, 0)


def _verify_game_value() -> LemmaReport:
    fail = None
    for r_r in range(1, GAME_RR_CAP + 1):
        for r_b in range(r_r + 1, GAME_RB_CAP + 1):
            opt = exhaustive_game_value(r_r, r_b, "optimal")
            bf = exhaustive_game_value(r_r, r_b, "b-first")
            if opt != Fraction(1, 4) or bf != Fraction(1, 4):
                fail = f"(r_r={r_r}, r_b={r_b}): optimal={opt}, b-first={bf}"
                break
    return LemmaReport(
        "game-value", fail is None, Fraction(1, 4), Fraction(1, 4), 0, fail or "",
    )
