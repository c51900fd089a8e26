import json
import math
from fractions import Fraction

import pytest

from rrdigraph.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    binomial_ci,
    catalan_walk_check,
    result_to_csv,
    run_tail_experiment,
    uniformity_test,
)
from rrdigraph.samplers import SamplerSpec


class TestCatalanWalk:
    @pytest.mark.parametrize("r", range(1, 7))
    def test_fraction_is_one_over_r(self, r):
        assert catalan_walk_check(r) == Fraction(1, r)

    def test_counts_match_catalan_numbers(self):
        # Independent oracle: C_m = binom(2m, m)/(m+1).
        for r in range(1, 7):
            frac = catalan_walk_check(r)
            m = r - 1
            catalan = math.comb(2 * m, m) // (m + 1)
            assert frac == Fraction(catalan, math.comb(2 * m, m))

    def test_range_guard(self):
        with pytest.raises(ValueError):
            catalan_walk_check(0)
        with pytest.raises(ValueError):
            catalan_walk_check(11)


class TestBinomialCI:
    def test_zero_successes(self):
        lo, hi = binomial_ci(0, 100)
        assert lo == 0.0 and 0 < hi < 0.05

    def test_all_successes(self):
        lo, hi = binomial_ci(100, 100)
        assert hi == 1.0 and lo > 0.95

    def test_contains_point_estimate(self):
        for k, n in ((3, 50), (17, 40), (500, 20000)):
            lo, hi = binomial_ci(k, n)
            assert lo <= k / n <= hi

    def test_coverage_shrinks_with_n(self):
        lo1, hi1 = binomial_ci(5, 50)
        lo2, hi2 = binomial_ci(500, 5000)
        assert (hi2 - lo2) < (hi1 - lo1)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            binomial_ci(5, 4)


class TestUniformity:
    def test_rejection_3_1(self):
        spec = SamplerSpec(kind="rejection", n=3, d=1, seed=301)
        res = uniformity_test(3, 1, spec, 20_000)
        assert res.class_size == 6
        assert res.tv_distance <= 0.02
        assert res.chi_sq_p > 0.001

    def test_mcmc_4_2_smoke(self):
        spec = SamplerSpec(kind="switch_mcmc", n=4, d=2, steps=200, seed=302)
        res = uniformity_test(4, 2, spec, 20_000)
        assert res.class_size == 90
        assert res.tv_distance <= 0.05

    def test_rejection_4_2_chi_square(self):
        # uniform over the 90-element class: the chi-square test must not
        # reject at any sane level
        spec = SamplerSpec(kind="rejection", n=4, d=2, seed=303)
        res = uniformity_test(4, 2, spec, 30_000)
        assert res.chi_sq_p > 0.001
        assert res.min_count > 0

    def test_rejects_non_class_sampler(self):
        spec = SamplerSpec(kind="erdos_renyi", n=4, p=0.5, seed=1)
        with pytest.raises(ValueError):
            uniformity_test(4, 2, spec, 100)


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="permutation_model", n=20, d=2, seed=3),
            statistic="perm_edge_count",
            grid=(0.5, 1.0),
            N=100,
            seed=4,
            a=5,
            b=5,
        )
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_validation(self):
        sampler = SamplerSpec(kind="rejection", n=8, d=2, seed=0)
        with pytest.raises(ValueError, match="statistic"):
            ExperimentConfig(sampler=sampler, statistic="wat", grid=(0.5,), N=10)
        with pytest.raises(ValueError, match="requires set sizes"):
            ExperimentConfig(sampler=sampler, statistic="edge_count", grid=(0.5,), N=10)
        with pytest.raises(ValueError, match="sampler kind"):
            ExperimentConfig(
                sampler=sampler, statistic="perm_edge_count", grid=(0.5,), N=10, a=2, b=2
            )
        with pytest.raises(ValueError, match="good_event_eta"):
            ExperimentConfig(
                sampler=SamplerSpec(kind="permutation_model", n=8, d=2, seed=0),
                statistic="perm_edge_count",
                grid=(0.5,),
                N=10,
                a=2,
                b=2,
                good_event_eta=0.1,
            )


class TestTailHarness:
    def test_vacuous_grid_point_passes(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="switch_mcmc", n=8, d=2, steps=150, seed=5),
            statistic="edge_count",
            grid=(0.0,),
            N=400,
            seed=6,
            a=4,
            b=4,
            good_event_eta=0.0,
        )
        res = run_tail_experiment(cfg)
        row = res.rows[0]
        assert row.bound == 1.0 and row.valid and row.verdict == "pass"

    def test_perm_edge_rows(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="permutation_model", n=60, d=4, seed=8),
            statistic="perm_edge_count",
            grid=(0.5, 1.0),
            N=4000,
            seed=9,
            a=20,
            b=20,
        )
        res = run_tail_experiment(cfg)
        mu = 4 * 20 * 20 / 60
        for row, tau in zip(res.rows, cfg.grid):
            assert row.bound == pytest.approx(
                2 * math.exp(-(tau**2) * mu / (2 + tau)), rel=1e-12
            )
            assert row.verdict == "pass"
            assert row.ci_lo <= row.empirical <= row.ci_hi

    def test_er_statistics_run(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="erdos_renyi", n=30, p=0.3, seed=11),
            statistic="er_codegree",
            grid=(0.5, 1.0),
            N=2000,
            seed=12,
        )
        res = run_tail_experiment(cfg)
        assert all(row.verdict == "pass" for row in res.rows)
        cfg2 = ExperimentConfig(
            sampler=SamplerSpec(kind="erdos_renyi", n=30, p=0.3, seed=11),
            statistic="er_edge",
            grid=(0.5,),
            N=2000,
            seed=12,
            a=10,
            b=10,
        )
        res2 = run_tail_experiment(cfg2)
        assert res2.rows[0].verdict == "pass"

    def test_codegree_uniform_statistic_runs(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="switch_mcmc", n=16, d=4, steps=400, seed=13),
            statistic="codegree_uniform",
            grid=(1.0,),
            N=1000,
            seed=14,
        )
        res = run_tail_experiment(cfg)
        assert res.rows[0].valid

    def test_edge_count_without_eta_is_invalid_row(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="switch_mcmc", n=8, d=2, steps=150, seed=5),
            statistic="edge_count",
            grid=(0.5,),
            N=200,
            seed=6,
            a=4,
            b=4,
        )
        res = run_tail_experiment(cfg)
        assert res.rows[0].verdict == "invalid"

    def test_reproducible_and_worker_independent(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="permutation_model", n=30, d=3, seed=21),
            statistic="perm_edge_count",
            grid=(0.25, 0.75),
            N=9000,
            seed=22,
            a=10,
            b=12,
        )
        first = run_tail_experiment(cfg)
        second = run_tail_experiment(cfg)
        threaded = run_tail_experiment(cfg, max_workers=4)
        assert result_to_csv(first) == result_to_csv(second) == result_to_csv(threaded)
        meta1 = dict(first.metadata)
        meta2 = dict(second.metadata)
        meta1.pop("wall_time_s")
        meta2.pop("wall_time_s")
        assert meta1 == meta2

    def test_csv_shape(self):
        cfg = ExperimentConfig(
            sampler=SamplerSpec(kind="permutation_model", n=20, d=2, seed=31),
            statistic="perm_edge_count",
            grid=(0.5,),
            N=500,
            seed=32,
            a=5,
            b=5,
        )
        text = result_to_csv(run_tail_experiment(cfg))
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert len(fields) == 7
        assert fields[5] in ("true", "false")
