import math
from fractions import Fraction

import numpy as np
import pytest

from sspilab.analysis import (
    GAME_RB_CAP,
    GAME_RR_CAP,
    LEMMA_IDS,
    b_first_strategy,
    candidate_node,
    exhaustive_game_value,
    game_monte_carlo,
    play_coin_game,
    saturation_index,
    supporting_event_laminar,
    supporting_event_matching,
    supporting_event_transversal,
    verify_lemma,
)
from sspilab.core import (
    CapExceededError,
    Configuration,
    build_sample_path,
    trial_rng,
)
from sspilab.exact import ConfigEnsemble
from sspilab.feasibility import (
    GeneralMatching,
    Transversal,
    TruncatedPartition,
)
from sspilab.generators import random_instance

from conftest import make_realizations


SINGLE_EDGE = GeneralMatching(2, ((0, 1),))


class TestSupportingEventMatching:
    def test_single_edge_heads_holds(self):
        path = build_sample_path(make_realizations([(5, 2)]))
        config = Configuration(("H", "T"))
        report = supporting_event_matching(SINGLE_EDGE, path, config, 0)
        assert report.holds and report.witnesses["l1"] == 1

    def test_single_edge_tails_fails(self):
        path = build_sample_path(make_realizations([(5, 2)]))
        config = Configuration(("T", "H"))
        assert not supporting_event_matching(SINGLE_EDGE, path, config, 0).holds

    def test_triangle_probability_bound(self):
        # Count over all 8 configurations at the top Y-index: the supporting
        # event happens at least a quarter as often as heads-and-free-heads.
        g = GeneralMatching(3, ((0, 1), (1, 2), (0, 2)))
        reals = make_realizations([(6, 3), (5, 2), (4, 1)])
        path = build_sample_path(reals)
        support = 0
        baseline = 0
        for mask in range(8):
            config = Configuration.from_heads_mask(path, mask)
            support += supporting_event_matching(g, path, config, 0).holds
            baseline += config.coins[0] == "H"  # index 0 is always free
        assert 4 * support >= baseline


class TestCandidateNode:
    def test_first_index_gets_first_node(self):
        t = Transversal(1, 1, ((0,),))
        path = build_sample_path(make_realizations([(5, 2)]))
        config = Configuration(("H", "T"))
        assert candidate_node(t, path, config, 0) == 0

    def test_none_when_blocked(self):
        t = Transversal(2, 1, ((0,), (0,)))
        # Element 0 (larger) takes the single node on the tails side.
        path = build_sample_path(make_realizations([(9, 4), (7, 3)]))
        config = Configuration.from_heads_mask(path, 0b00)  # both Y coins tails
        j_small_y = path.y_index(1)
        assert candidate_node(t, path, config, j_small_y) is None

    def test_ordered_rule_picks_smallest_free(self):
        t = Transversal(2, 2, ((0, 1), (0,)))
        path = build_sample_path(make_realizations([(9, 4), (7, 3)]))
        # Element 0's Y-coin heads leaves node 0 free for element 1's Y-index.
        config = Configuration.from_heads_mask(path, 0b01)
        assert candidate_node(t, path, config, path.y_index(1)) == 0
        # Element 0's Y-coin tails occupies node 0 first.
        config = Configuration.from_heads_mask(path, 0b10)
        assert candidate_node(t, path, config, path.y_index(0)) == 0


class TestSupportingEventTransversal:
    def test_single_pair_heads(self):
        t = Transversal(1, 1, ((0,),))
        path = build_sample_path(make_realizations([(5, 2)]))
        assert supporting_event_transversal(
            t, path, Configuration(("H", "T")), 0, 0
        ).holds
        assert not supporting_event_transversal(
            t, path, Configuration(("T", "H")), 0, 0
        ).holds

    def test_two_left_one_right_uniqueness_and_bound(self):
        t = Transversal(2, 1, ((0,), (0,)))
        reals = make_realizations([(9, 4), (7, 3)])
        path = build_sample_path(reals)
        support_counts = [0] * path.length
        baseline = [0] * path.length
        for mask in range(4):
            config = Configuration.from_heads_mask(path, mask)
            per_config = 0
            for j in range(path.length):
                rep = supporting_event_transversal(t, path, config, j, 0)
                per_config += rep.holds
                support_counts[j] += rep.holds
                from sspilab.feasibility import free_index

                if path.entries[j].label == "Y":
                    baseline[j] += config.coins[j] == "H" and free_index(
                        t, path, config, j, "H"
                    )
            assert per_config <= 1
        for j in range(path.length):
            if path.entries[j].label == "Y":
                assert 2 * support_counts[j] >= baseline[j]


class TestSaturationIndex:
    FS = TruncatedPartition(((0, 1, 2),), (1,), 1)

    def test_next_qualifying_index(self):
        reals = make_realizations([(9, 4), (7, 3), (6, 2)])
        path = build_sample_path(reals)
        # All Y coins heads: after index 0, the first heads-free Y-index in
        # the group saturates it (capacity 1).
        config = Configuration.from_heads_mask(path, 0b111)
        got = saturation_index(self.FS, path, config, 0, 0, "H")
        assert got == path.y_index(1)

    def test_infinite_when_never_reached(self):
        reals = make_realizations([(9, 4)])
        fs = TruncatedPartition(((0,),), (1,), 1)
        path = build_sample_path(reals)
        config = Configuration.from_heads_mask(path, 0b1)
        assert saturation_index(fs, path, config, 0, 0, "H") == math.inf

    def test_matches_independent_rescan(self, rng):
        # Second implementation: gather qualifying indices, then take the
        # capacity-th one.
        from sspilab.feasibility import free_index

        for _ in range(12):
            inst = random_instance("truncated-partition", int(rng.integers(1, 6)), rng)
            fs = inst.structure
            reals = inst.draw_realizations(rng)
            path = build_sample_path(reals)
            mask = int(rng.integers(0, 1 << path.n))
            config = Configuration.from_heads_mask(path, mask)
            j = int(rng.integers(0, path.length))
            for gid, members, cap in [
                (None, set(range(path.n)), fs.total_capacity)
            ] + [
                (i, set(g), fs.group_capacities[i]) for i, g in enumerate(fs.groups)
            ]:
                for side in "HT":
                    qualifying = [
                        i
                        for i in range(j + 1, path.length)
                        if path.entries[i].label == "Y"
                        and path.entries[i].element in members
                        and config.coins[i] == side
                        and free_index(fs, path, config, i, "T")
                    ]
                    want = qualifying[cap - 1] if len(qualifying) >= cap else math.inf
                    assert saturation_index(fs, path, config, j, gid, side) == want


class TestSupportingEventLaminar:
    def test_single_element_holds_on_heads(self):
        fs = TruncatedPartition(((0,),), (1,), 1)
        path = build_sample_path(make_realizations([(5, 2)]))
        rep = supporting_event_laminar(fs, path, Configuration(("H", "T")), 0)
        assert rep.holds
        assert rep.witnesses["group_sat_T"] == math.inf

    def test_single_element_fails_on_tails(self):
        fs = TruncatedPartition(((0,),), (1,), 1)
        path = build_sample_path(make_realizations([(5, 2)]))
        assert not supporting_event_laminar(
            fs, path, Configuration(("T", "H")), 0
        ).holds

    def test_three_element_probability_bound(self):
        from sspilab.feasibility import free_index

        fs = TruncatedPartition(((0, 1), (2,)), (1, 1), 2)
        reals = make_realizations([(9, 4), (7, 3), (6, 2)])
        path = build_sample_path(reals)
        for j in range(path.length):
            if path.entries[j].label != "Y":
                continue
            support = 0
            baseline = 0
            for mask in range(8):
                config = Configuration.from_heads_mask(path, mask)
                support += supporting_event_laminar(fs, path, config, j).holds
                baseline += config.coins[j] == "H" and free_index(
                    fs, path, config, j, "H"
                )
            assert 4 * support >= baseline


class TestEngineAgreesWithScalarOps:
    def test_matching(self, rng):
        for _ in range(8):
            inst = random_instance("matching", int(rng.integers(1, 6)), rng)
            reals = inst.draw_realizations(rng)
            path = build_sample_path(reals)
            ens = ConfigEnsemble(inst.structure, reals)
            table = ens.support_matching()
            for mask in range(ens.num_configs):
                config = Configuration.from_heads_mask(path, mask)
                for j in range(path.length):
                    got = supporting_event_matching(inst.structure, path, config, j)
                    assert got.holds == bool(table[j, mask])

    def test_transversal(self, rng):
        for _ in range(8):
            inst = random_instance("transversal", int(rng.integers(1, 5)), rng)
            reals = inst.draw_realizations(rng)
            path = build_sample_path(reals)
            ens = ConfigEnsemble(inst.structure, reals)
            table, cand = ens.support_transversal()
            for mask in range(ens.num_configs):
                config = Configuration.from_heads_mask(path, mask)
                for j in range(path.length):
                    cand_scalar = candidate_node(inst.structure, path, config, j)
                    if cand_scalar is not None:
                        assert int(cand[j, mask]) == 1 << cand_scalar
                    for r in range(inst.structure.right_count):
                        got = supporting_event_transversal(
                            inst.structure, path, config, j, r
                        )
                        expect = bool(table[j, mask]) and int(cand[j, mask]) == 1 << r
                        assert got.holds == expect

    def test_laminar(self, rng):
        for _ in range(8):
            inst = random_instance("truncated-partition", int(rng.integers(1, 6)), rng)
            reals = inst.draw_realizations(rng)
            path = build_sample_path(reals)
            ens = ConfigEnsemble(inst.structure, reals)
            table = ens.support_laminar()
            for mask in range(ens.num_configs):
                config = Configuration.from_heads_mask(path, mask)
                for j in range(path.length):
                    got = supporting_event_laminar(inst.structure, path, config, j)
                    assert got.holds == bool(table[j, mask])


class TestVerifyLemma:
    def test_symmetry_single_element_counts(self):
        fs = TruncatedPartition(((0,),), (1,), 1)
        reals = make_realizations([(5, 2)])
        report = verify_lemma("symmetry", fs, reals)
        assert report.passed
        # Index 0 and index 1 each contribute one configuration per side.
        assert report.lhs == report.rhs == 2

    def test_all_lemmas_on_matched_structures(self, rng):
        structure_for = {
            "match": "matching",
            "trans": "transversal",
            "laminar": "truncated-partition",
        }
        for lemma in LEMMA_IDS:
            if lemma == "game-value":
                assert verify_lemma(lemma).passed
                continue
            kind = next(
                (v for k, v in structure_for.items() if lemma.startswith(k)),
                "matching",
            )
            inst = random_instance(kind, int(rng.integers(1, 6)), rng)
            reals = inst.draw_realizations(rng)
            report = verify_lemma(lemma, inst.structure, reals)
            assert report.passed, (lemma, report.detail)

    def test_generic_lemmas_on_every_structure(self, rng):
        for kind in (
            "matching", "transversal", "truncated-partition",
            "simple-partition", "graphic",
        ):
            inst = random_instance(kind, int(rng.integers(1, 7)), rng)
            reals = inst.draw_realizations(rng)
            for lemma in ("symmetry", "forget-z", "greedy-objective"):
                assert verify_lemma(lemma, inst.structure, reals).passed

    def test_unknown_lemma(self):
        with pytest.raises(ValueError):
            verify_lemma("not-a-lemma")

    def test_structure_mismatch(self, rng):
        inst = random_instance("matching", 2, rng)
        reals = inst.draw_realizations(rng)
        with pytest.raises(TypeError):
            verify_lemma("trans-prob", inst.structure, reals)

    def test_sufficiency_order_cap(self, rng):
        inst = random_instance("matching", 8, rng)
        reals = inst.draw_realizations(rng)
        with pytest.raises(CapExceededError):
            verify_lemma("match-sufficient", inst.structure, reals)


class TestCoinGame:
    def test_forced_tails_trace(self):
        winner, state = play_coin_game(1, 2, b_first_strategy, iter("TTT"))
        assert winner == "P2"
        assert state.saturated == {"B": "T", "R": "T"}
        assert [t for t, _, _ in state.toss_log] == [1, 2, 3]

    def test_heads_ends_immediately(self):
        winner, state = play_coin_game(1, 2, b_first_strategy, iter("HH"))
        assert winner == "P1"
        assert state.saturated["B"] == "H" and "R" not in state.saturated

    def test_r_tosses_land_in_both_bins(self):
        def r_first(state):
            return "R"

        winner, state = play_coin_game(1, 3, r_first, iter("TTTT"))
        # First toss lands in R (and B); R saturates with one tail.
        assert state.saturated["R"] == "T"
        assert state.tails["B"] >= state.tails["R"]
        assert state.r_toss_log[0][1] == "T"

    def test_saturated_choice_coerced(self):
        def stubborn_r(state):
            return "R"

        winner, state = play_coin_game(1, 2, stubborn_r, iter("TTT"))
        # After R saturates, the choice is coerced to B and the game ends.
        assert winner == "P2"

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            play_coin_game(2, 2, b_first_strategy, iter("TT"))
        with pytest.raises(ValueError):
            play_coin_game(1, 2, lambda s: "X", iter("TT"))

    def test_exact_value_quarter_everywhere(self):
        for r_r in range(1, GAME_RR_CAP + 1):
            for r_b in range(r_r + 1, GAME_RB_CAP + 1):
                assert exhaustive_game_value(r_r, r_b) == Fraction(1, 4)
                assert exhaustive_game_value(r_r, r_b, "b-first") == Fraction(1, 4)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            exhaustive_game_value(3, 5)

    def test_monte_carlo_close(self):
        freq = game_monte_carlo(1, 2, 40_000, seed=21)
        assert abs(freq - 0.25) < 0.01


class TestAllTiesStress:
    """Identical point masses force every comparison through tie tokens."""

    def _tied_instance(self, kind, n, rng):
        from sspilab.core import point_mass
        from sspilab.instances import Instance

        inst = random_instance(kind, n, rng)
        dists = {e: point_mass(3.0) for e in range(inst.ground_size)}
        return Instance(inst.name + "-tied", inst.structure, dists)

    def test_lemmas_under_total_ties(self, rng):
        suites = {
            "matching": ("symmetry", "forget-z", "greedy-objective",
                         "match-unique", "match-sufficient", "match-prob"),
            "transversal": ("symmetry", "forget-z", "greedy-objective",
                            "trans-unique", "trans-sufficient", "trans-prob"),
            "truncated-partition": ("symmetry", "forget-z", "greedy-objective",
                                    "laminar-sufficient", "laminar-prob"),
        }
        for kind, lemmas in suites.items():
            for trial in range(12):
                n = int(rng.integers(1, 6))
                inst = self._tied_instance(kind, n, rng)
                reals = inst.draw_realizations(trial_rng(trial, 0))
                for lemma in lemmas:
                    report = verify_lemma(lemma, inst.structure, reals)
                    assert report.passed, (kind, lemma, report.detail)

    def test_bounds_under_total_ties(self, rng):
        from sspilab.harness import estimate_ratio

        for kind, policy, adversary, bound in (
            ("matching", "matching", "exhaustive-min", 32),
            ("transversal", "transversal", "exhaustive-min", 8),
            ("truncated-partition", "laminar", "increasing", 8),
            ("rank1", "rank1", "increasing", 2),
        ):
            for trial in range(8):
                inst = self._tied_instance(kind, int(rng.integers(1, 6)), rng)
                rep = estimate_ratio(
                    inst, policy, adversary=adversary, mode="exact", seed=trial
                )
                assert rep.e_opt <= bound * rep.e_alg, (kind, rep.instance)
                assert rep.z_violations == 0
