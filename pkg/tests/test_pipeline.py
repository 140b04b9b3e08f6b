import numpy as np
import pytest

from texclass import (
    ConfigError,
    DataError,
    EstimationError,
    ExperimentConfig,
    SourceSelection,
    filter_correlations,
    read_results,
    relevance_report,
    run_case,
    run_experiment,
    write_results,
)
from texclass.config import parse_config_text
from texclass.pipeline import CaseResult, FeatureTable, derive_seed, feature_group

from oracles import fraction_pearson
from synth import make_dataset, make_table, write_dataset_dir


def _fast_config(**overrides):
    defaults = dict(
        permutations=4,
        cases=(1,),
        stages=("raw",),
        ga_population=16,
        ga_max_generations=12,
        ga_elitism=2,
        seed=7,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestSeedDerivation:
    def test_golden_values(self):
        # frozen so the derivation can never change silently
        assert derive_seed(42, 1, 0, 0) == 15658369528003122356
        assert derive_seed(42, 23, 1, 1) == 2438948175366449301
        assert derive_seed(42, 31, 1, 2) == 18232051616430181275

    def test_streams_differ(self):
        seeds = {derive_seed(0, 1, 0, s) for s in range(3)}
        assert len(seeds) == 3


class TestFeatureTable:
    def test_csv_round_trip_exact(self, tmp_path):
        table = make_table(seed=1, n_per_class=3)
        path = tmp_path / "cache.csv"
        table.write_csv(path)
        back = FeatureTable.read_csv(path)
        assert back.ids == table.ids
        assert back.labels == table.labels
        assert back.names == table.names
        np.testing.assert_array_equal(back.values, table.values)

    def test_select_sources_subsets_columns(self):
        table = make_table(seed=2, n_per_class=3, sources=5)
        sub = table.select_sources(SourceSelection.from_case(23))
        assert len(sub.names) == 416
        assert not any(n.startswith("entropy.") for n in sub.names)

    def test_select_sources_missing_columns(self):
        table = make_table(seed=3, n_per_class=3, sources=1)
        with pytest.raises(DataError, match="missing"):
            table.select_sources(SourceSelection.from_case(31))


class TestRunCase:
    def test_single_permutation_zero_std(self):
        table = make_table(seed=4, informative=("d0.asm",))
        result = run_case(table, SourceSelection.from_case(1),
                          _fast_config(permutations=1))
        mu, sd = result.stage_stats["raw"]
        assert sd == 0.0
        assert 0.0 <= mu <= 1.0
        assert result.nf0 == 104

    def test_confusion_trace_matches_mean_success(self):
        table = make_table(seed=5, informative=("entropy",), gap=2.0)
        result = run_case(table, SourceSelection.from_case(1),
                          _fast_config(permutations=5))
        conf = result.confusion
        mu, _ = result.stage_stats["raw"]
        assert np.trace(conf.counts) / conf.counts.sum() == pytest.approx(mu, abs=1e-9)

    def test_case_flags_match_binary_expansion(self):
        for case in (1, 8, 16, 23, 31):
            sel = SourceSelection.from_case(case)
            bits = tuple(bool((case >> shift) & 1) for shift in (4, 3, 2, 1, 0))
            assert sel.flags == bits

    def test_deterministic_given_seed(self):
        table = make_table(seed=6, informative=("sum_avg",))
        config = _fast_config(stages=("raw", "pca", "ga"), permutations=2)
        a = run_case(table, SourceSelection.from_case(1), config)
        b = run_case(table, SourceSelection.from_case(1), config)
        assert a.stage_stats == b.stage_stats
        assert a.nf_ga == b.nf_ga
        assert a.selection_frequency == b.selection_frequency

    def test_ga_not_far_below_raw_with_all_ones_seeded(self):
        # GA's initial population always includes the all-ones mask
        table = make_table(seed=7, informative=("d0.contrast", "d90.entropy"),
                           gap=5.0, n_per_class=24)
        config = _fast_config(stages=("raw", "pca", "ga"), permutations=4)
        result = run_case(table, SourceSelection.from_case(1), config)
        assert result.stage_stats["ga"][0] >= result.stage_stats["raw"][0] - 0.02
        assert result.nf_ga <= result.nf0

    def test_fixed_mask_mode_uses_one_mask(self):
        table = make_table(seed=8, informative=("diff_var",))
        config = _fast_config(
            stages=("ga",), permutations=3, ga_mask_mode="fixed"
        )
        result = run_case(table, SourceSelection.from_case(1), config)
        # one shared mask: every per-feature frequency is 0 or 1
        freqs = np.array(list(result.selection_frequency.values()))
        assert set(np.unique(freqs)) <= {0.0, 1.0}
        assert result.nf_ga == float(int(result.nf_ga))

    def test_outer_fitness_mode_runs(self):
        table = make_table(seed=9, informative=("imc2",))
        config = _fast_config(
            stages=("ga",), permutations=2, ga_fitness_mode="paper-faithful"
        )
        result = run_case(table, SourceSelection.from_case(1), config)
        assert "ga" in result.stage_stats

    def test_failed_permutation_reports_seed(self):
        # a label unique to one sample cannot satisfy the 2-per-class rule
        table = make_table(seed=10, n_per_class=6)
        table.labels[0] = "stray"
        with pytest.raises(DataError, match="split seed"):
            run_case(table, SourceSelection.from_case(1), _fast_config())


class TestResultsIO:
    def _results(self):
        table = make_table(seed=11, informative=("entropy",), gap=3.0)
        config = _fast_config(stages=("raw", "pca", "ga"), permutations=2)
        return [run_case(table, SourceSelection.from_case(c), config)
                for c in (1,)]

    def test_round_trip_at_file_precision(self, tmp_path):
        results = self._results()
        write_results(results, tmp_path)
        back = read_results(tmp_path)
        assert len(back) == 1
        for stage, (mu, sd) in results[0].stage_stats.items():
            mu_r, sd_r = back[0].stage_stats[stage]
            assert mu_r == pytest.approx(round(mu * 100, 2) / 100, abs=1e-12)
            assert sd_r == pytest.approx(round(sd * 100, 2) / 100, abs=1e-12)
        assert back[0].nf0 == results[0].nf0
        # frequencies and confusion round-trip exactly
        np.testing.assert_array_equal(
            back[0].confusion.counts, results[0].confusion.counts
        )
        assert back[0].selection_frequency == results[0].selection_frequency

    def test_rewrite_is_byte_identical(self, tmp_path):
        results = self._results()
        first = tmp_path / "first"
        second = tmp_path / "second"
        write_results(results, first)
        write_results(read_results(first), second)
        for name in ("results.csv", "case_01_confusion.csv", "case_01_frequencies.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_missing_results_dir(self, tmp_path):
        with pytest.raises(ConfigError):
            read_results(tmp_path)


def _stub_result(case, mu, stage="raw", frequencies=None):
    return CaseResult(
        case=case,
        flags=SourceSelection.from_case(case).flags,
        stage_stats={stage: (mu, 0.0)},
        nf0=104,
        nf_ga=104.0,
        selection_frequency=frequencies,
    )


class TestFilterCorrelations:
    def test_flag_count_fixture_equal_coefficients(self):
        # success = number of enabled sources: all five coefficients equal
        results = [
            _stub_result(case, mu=sum(SourceSelection.from_case(case).flags) / 10)
            for case in range(1, 32)
        ]
        report = filter_correlations(results, stage="raw")
        expected = 208.0 / np.sqrt(240.0 * 1040.0)  # exact rational derivation
        for _source, r in report:
            assert r == pytest.approx(expected, abs=1e-12)
        assert [s for s, _ in report] == [
            "original", "variance", "entropy", "canny", "gaussian",
        ]

    def test_weighted_fixture_matches_fraction_oracle(self):
        weights = {"variance": 3, "entropy": -2, "canny": 1, "gaussian": 0, "original": 5}
        results = []
        for case in range(1, 32):
            flags = SourceSelection.from_case(case)
            mu = (
                5 * flags.original + 3 * flags.variance - 2 * flags.entropy
                + 1 * flags.canny + 0 * flags.gaussian
            ) / 20 + 0.3
            results.append(_stub_result(case, mu))
        report = dict(filter_correlations(results, stage="raw"))
        for source, weight in weights.items():
            xs = [int(getattr(SourceSelection.from_case(c), source)) for c in range(1, 32)]
            ys = [results[i].stage_stats["raw"][0] for i in range(31)]
            assert report[source] == pytest.approx(fraction_pearson(xs, ys), abs=1e-12)
        assert report["entropy"] < 0 < report["original"]

    def test_two_cases_insufficient(self):
        results = [_stub_result(c, mu=c / 31) for c in (1, 2)]
        with pytest.raises(EstimationError, match="at least 3"):
            filter_correlations(results)

    def test_constant_success_undefined(self):
        results = [_stub_result(c, mu=0.5) for c in (1, 2, 3, 4)]
        with pytest.raises(EstimationError, match="constant"):
            filter_correlations(results)


class TestRelevanceReport:
    def test_group_names_strip_source_and_variant(self):
        assert feature_group("orig.d0.asm") == "asm"
        assert feature_group("gauss.avg.cluster_shade") == "cluster_shade"
        assert feature_group("var.global.fd") == "fd"

    def test_planted_entropy_feature_ranks_first(self):
        # per-column gap 0.9 keeps single columns weakly informative, so
        # fitness rises with every extra entropy column that joins a mask
        table = make_table(seed=12, n_per_class=50, informative=("entropy",), gap=0.9)
        config = _fast_config(stages=("ga",), permutations=30,
                              ga_population=20, ga_max_generations=20)
        result = run_case(table, SourceSelection.from_case(1), config)
        ranked = relevance_report([result])
        assert ranked[0][0] == "entropy"

    def test_null_fixture_near_uniform(self):
        table = make_table(seed=13, n_per_class=18, informative=())
        config = _fast_config(stages=("ga",), permutations=50,
                              ga_population=16, ga_max_generations=12)
        result = run_case(table, SourceSelection.from_case(1), config)
        ranked = relevance_report([result])
        freqs = [f for _, f in ranked]
        assert max(freqs) - min(freqs) < 0.15

    def test_requires_ga_frequencies(self):
        with pytest.raises(DataError):
            relevance_report([_stub_result(1, 0.5)])


class TestConfigParsing:
    def test_defaults(self):
        config = parse_config_text("")
        assert config.levels == 64
        assert config.permutations == 100
        assert config.cases == tuple(range(1, 32))
        assert config.stages == ("raw", "pca", "ga")
        assert config.train_fraction == 0.6

    def test_full_file(self):
        text = """
        # comment
        dataset = /data/textures
        cases = 1,23,31
        permutations = 10  # trailing comment
        stages = raw,ga
        ga.population = 30
        ga.fitness_mode = paper-faithful
        pca.threshold = 0.9
        """
        config = parse_config_text(text)
        assert config.dataset == "/data/textures"
        assert config.cases == (1, 23, 31)
        assert config.permutations == 10
        assert config.ordered_stages() == ("raw", "ga")
        assert config.ga_population == 30
        assert config.resolved_fitness_mode == "outer"
        assert config.pca_threshold == 0.9

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("mystery = 1")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config_text("levels = many")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("levels = 64\nlevels = 32")

    def test_invalid_stage_rejected(self):
        with pytest.raises(ConfigError, match="unknown stages"):
            parse_config_text("stages = raw,magic")

    def test_case_range_validated(self):
        with pytest.raises(ConfigError):
            parse_config_text("cases = 0,5")


@pytest.mark.slow
class TestRunExperiment:
    def test_end_to_end_tiny(self, tmp_path):
        samples = make_dataset(seed=0, per_class=6, side=24)[:18]  # 3 classes
        dataset_dir = tmp_path / "data"
        write_dataset_dir(samples, dataset_dir)
        config = ExperimentConfig(
            dataset=str(dataset_dir),
            output=str(tmp_path / "out"),
            cases=(1, 2, 3),
            permutations=2,
            stages=("raw",),
            seed=3,
        )
        results = run_experiment(config)
        assert [r.case for r in results] == [1, 2, 3]
        parsed = read_results(tmp_path / "out")
        assert len(parsed) == 3
        assert (tmp_path / "out" / "features.csv").is_file()

    def test_cache_reused_and_invalidated(self, tmp_path):
        samples = make_dataset(seed=1, per_class=4, side=24)[:8]
        dataset_dir = tmp_path / "data"
        write_dataset_dir(samples, dataset_dir)
        config = ExperimentConfig(
            dataset=str(dataset_dir), output=str(tmp_path / "out"),
            cases=(1,), permutations=1, stages=("raw",),
        )
        run_experiment(config)
        cache = tmp_path / "out" / "features.csv"
        stamp = cache.stat().st_mtime_ns
        run_experiment(config)
        assert cache.stat().st_mtime_ns == stamp  # reused
        run_experiment(
            ExperimentConfig(
                dataset=str(dataset_dir), output=str(tmp_path / "out"),
                cases=(1,), permutations=1, stages=("raw",), levels=32,
            )
        )
        assert cache.stat().st_mtime_ns != stamp  # key change re-extracts
