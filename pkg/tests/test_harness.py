import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from sspilab.core import (
    CapExceededError,
    Configuration,
    build_sample_path,
    discrete,
    trial_rng,
    uniform,
)
from sspilab.feasibility import Graphic, TruncatedPartition, graphic_partition
from sspilab.generators import random_instance, star_graphic_instance
from sspilab.harness import (
    CSV_HEADER,
    RatioReport,
    emit_report,
    estimate_ratio,
    render_report,
    report_fields,
    tight_example,
)
from sspilab.instances import Instance
from sspilab.policies import fixed_partition_scheme, run_policy

from conftest import tv


RANK1_TWO_POINT = Instance(
    "rank1-two-point",
    TruncatedPartition(((0,),), (1,), 1),
    {0: discrete([2.0, 5.0], [0.5, 0.5])},
)


class TestExactMode:
    def test_rank1_two_point_example(self):
        # Seed 0 draws the two distinct atoms, giving the textbook numbers.
        reals = RANK1_TWO_POINT.draw_realizations(trial_rng(0, 0))
        assert sorted([reals[0].y.value, reals[0].z.value]) == [2.0, 5.0]
        report = estimate_ratio(
            RANK1_TWO_POINT, "rank1", adversary="increasing", mode="exact", seed=0
        )
        assert report.e_alg == Fraction(5, 2)
        assert report.e_opt == Fraction(7, 2)
        assert report.e_opt_prime == Fraction(7, 2)
        assert report.ratio == pytest.approx(1.4)
        assert report.ratio <= 2
        assert report.ci is None

    def test_exact_matches_brute_force_over_orders(self, rng):
        # Against a per-configuration full-order minimization running the
        # traced policies.
        cases = [
            ("matching", "matching"),
            ("transversal", "transversal"),
            ("truncated-partition", "laminar"),
            ("rank1", "rank1"),
        ]
        for kind, policy in cases:
            for _ in range(4):
                n = int(rng.integers(1, 5))
                inst = random_instance(kind, n, rng)
                seed = int(rng.integers(0, 100))
                reals = inst.draw_realizations(trial_rng(seed, 0))
                path = build_sample_path(reals)
                total = Fraction(0)
                for mask in range(1 << n):
                    rewards, samples = {}, {}
                    for r in reals:
                        if (mask >> r.element) & 1:
                            rewards[r.element], samples[r.element] = r.y, r.z
                        else:
                            rewards[r.element], samples[r.element] = r.z, r.y
                    best = None
                    for perm in permutations(range(n)):
                        t = run_policy(policy, inst.structure, samples, rewards, perm)
                        if best is None or t.chosen.total < best:
                            best = t.chosen.total
                    total += Fraction(best)
                want = total / (1 << n)
                got = estimate_ratio(
                    inst, policy, adversary="exhaustive-min", mode="exact", seed=seed
                ).e_alg
                assert float(got) == pytest.approx(float(want), rel=1e-9, abs=1e-12)

    def test_exact_reduction_graphic_sigma_average(self, rng):
        # Engine average over all vertex orders equals the per-sigma average
        # of custom reductions pinned to each order.
        inst = random_instance("graphic", 3, rng)
        g = inst.structure
        seed = 7
        got = estimate_ratio(
            inst, "reduction-graphic", adversary="increasing", mode="exact", seed=seed
        )
        acc = Fraction(0)
        count = 0
        for sigma in permutations(range(g.vertex_count)):
            partition, _ = graphic_partition(g, sigma=sigma)
            pinned = Instance(inst.name, g, inst.distributions, partition, 2.0)
            rep = estimate_ratio(
                pinned, "reduction-custom", adversary="increasing",
                mode="exact", seed=seed,
            )
            acc += rep.e_alg
            count += 1
        assert got.e_alg == acc / count

    def test_exact_mode_caps(self, rng):
        inst = random_instance("rank1", 17, rng)
        with pytest.raises(CapExceededError):
            estimate_ratio(inst, "rank1", mode="exact", seed=0)
        inst9 = random_instance("rank1", 9, rng)
        with pytest.raises(CapExceededError):
            estimate_ratio(inst9, "rank1", adversary="exhaustive-min", mode="exact", seed=0)

    def test_exact_rejects_random_adversary(self, rng):
        inst = random_instance("rank1", 3, rng)
        with pytest.raises(ValueError):
            estimate_ratio(inst, "rank1", adversary="random", mode="exact", seed=0)

    def test_policy_structure_mismatch(self, rng):
        inst = random_instance("matching", 3, rng)
        with pytest.raises(TypeError):
            estimate_ratio(inst, "laminar", mode="exact", seed=0)


class TestMonteCarlo:
    def test_exact_and_mc_agree_within_three_se(self, rng):
        for kind, policy in (
            ("matching", "matching"),
            ("truncated-partition", "laminar"),
        ):
            inst = random_instance(kind, 4, rng)
            mc = estimate_ratio(
                inst, policy, adversary="increasing", trials=4000, seed=9,
                mode="mc", workers=1,
            )
            # Expectation over fresh realizations: average exact runs over
            # several drawn realization sets.
            exact_vals = [
                float(
                    estimate_ratio(
                        inst, policy, adversary="increasing", mode="exact", seed=s
                    ).e_alg
                )
                for s in range(40)
            ]
            anchor = float(np.mean(exact_vals))
            spread = float(np.std(exact_vals) / math.sqrt(len(exact_vals)))
            se = (mc.ci or 0.0) / 1.96
            assert abs(mc.e_alg - anchor) <= 3 * (se + spread) + 1e-9

    def test_reproducible_across_workers(self, rng):
        inst = random_instance("matching", 4, rng)
        a = estimate_ratio(inst, "matching", adversary="random", trials=3000,
                           seed=3, mode="mc", workers=1)
        b = estimate_ratio(inst, "matching", adversary="random", trials=3000,
                           seed=3, mode="mc", workers=2)
        fa, fb = report_fields(a), report_fields(b)
        fa.pop("wall_ms"), fb.pop("wall_ms")
        assert fa == fb

    def test_z_violations_counted(self, rng):
        inst = random_instance("matching", 4, rng)
        rep = estimate_ratio(inst, "matching", adversary="random", trials=500,
                             seed=3, mode="mc", workers=1)
        assert rep.z_violations == 0


class TestTightExample:
    def test_vectorized_rule_matches_traced_policy(self, rng):
        # Same draws fed to both the vectorized simulator's rule and the
        # traced reduction policy with the partition pinned to the same
        # vertex ranks.
        k = 4
        g = Graphic(k + 1, tuple((0, i + 1) for i in range(k)))
        lo = 1.0 - 1.0 / k
        for trial in range(40):
            rewards_f = rng.uniform(lo, 1.0, size=k)
            samples_f = rng.uniform(lo, 1.0, size=k)
            ranks = rng.uniform(size=k + 1)  # position 0 is the center
            sigma = tuple(int(v) for v in np.argsort(ranks))
            partition, _ = graphic_partition(g, sigma=sigma)
            rewards = {e: tv(rewards_f[e], 0.5, e) for e in range(k)}
            samples = {e: tv(samples_f[e], 0.5, e) for e in range(k)}
            order = sorted(range(k), key=lambda e: rewards[e].key)
            trace = run_policy(
                "reduction-custom", g, samples, rewards, order,
                scheme=fixed_partition_scheme(partition, 2.0),
            )
            leaf_owned = ranks[1:] < ranks[0]
            alg = float((rewards_f * (leaf_owned & (rewards_f > samples_f))).sum())
            center = ~leaf_owned
            if center.any():
                thr = samples_f[center].max()
                exceed = center & (rewards_f > thr)
                if exceed.any():
                    alg += rewards_f[exceed].min()
            assert trace.chosen.total == pytest.approx(alg, rel=1e-12, abs=1e-12)

    def test_small_k_bracket(self):
        rep = tight_example(2, trials=20_000, seed=1)
        assert 1.0 < rep.ratio < 4.0

    def test_k_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            tight_example(1)


class TestReports:
    def test_csv_header_and_shape(self):
        rep = tight_example(3, trials=500, seed=0)
        text = render_report(rep, "csv")
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 2

    def test_json_field_order(self):
        rep = estimate_ratio(RANK1_TWO_POINT, "rank1", mode="exact", seed=0)
        text = render_report(rep, "json")
        keys = [line.split('"')[1] for line in text.splitlines() if '":' in line]
        assert keys == [
            "policy", "adversary", "mode", "E_ALG", "E_OPT", "E_OPT_PRIME",
            "ratio", "ci", "seed", "wall_ms",
        ]
        assert '"E_ALG": "5/2"' in text

    def test_exact_rationals_rendered_as_fractions(self):
        rep = estimate_ratio(RANK1_TWO_POINT, "rank1", mode="exact", seed=0)
        fields = report_fields(rep)
        assert fields["E_ALG"] == "5/2"
        assert fields["ci"] == ""

    def test_emit_to_file_and_unwritable_path(self, tmp_path):
        rep = tight_example(3, trials=200, seed=0)
        target = tmp_path / "report.csv"
        emit_report(rep, "csv", target)
        assert target.read_text().startswith("policy,")
        with pytest.raises(OSError):
            emit_report(rep, "csv", tmp_path / "missing" / "report.csv")

    def test_unknown_format(self):
        rep = tight_example(3, trials=200, seed=0)
        with pytest.raises(ValueError):
            render_report(rep, "xml")


def test_worker_count_env(monkeypatch):
    from sspilab.harness import worker_count

    assert worker_count(3) == 3
    monkeypatch.setenv("SSPILAB_WORKERS", "5")
    assert worker_count() == 5
    monkeypatch.delenv("SSPILAB_WORKERS")
    assert worker_count() >= 1
