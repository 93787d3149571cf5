import numpy as np
import pandas as pd
import pytest
from scipy import stats

from core.enums import Estimator, ExperimentName
from core.errors import ValidationError
from core.estimator import CoefMatrix, FoldFits
from core.experiments import (
    AGGREGATED_COLUMNS,
    LONG_COLUMNS,
    ExperimentSpec,
    aggregate,
    preset,
    run_experiment,
    run_simulation,
    task_seed,
)
from core.simgen import SimConfig


def mean_of(aggregated, estimator, metric, **grid):
    mask = (aggregated["estimator"] == estimator) & (aggregated["metric"] == metric)
    for key, value in grid.items():
        mask &= aggregated[key] == value

    (value,) = aggregated.loc[mask, "mean"].tolist()
    return value


@pytest.fixture
def small_spec():
    return ExperimentSpec(name=None, grid=(SimConfig(n=60, p=3, m_dim=4, k=2, eta=2.0),), reps=2, seed=5)


@pytest.fixture
def small_result(small_spec):
    return run_experiment(small_spec)


class TestSpec:
    def test_empty_grid(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(name=None, grid=())

    def test_reps(self, sim_config):
        with pytest.raises(ValidationError):
            ExperimentSpec(name=None, grid=(sim_config,), reps=0)

    def test_labels(self, sim_config):
        assert ExperimentSpec(name=None, grid=(sim_config,)).label == "simulate"
        assert preset(ExperimentName.table1).label == "table1"
        assert preset(ExperimentName.table1).fixed_truth
        assert not preset(ExperimentName.fig2_n).fixed_truth

    def test_task_seeds_are_distinct(self):
        seeds = {task_seed(7, g, r) for g in range(5) for r in range(100)}
        assert len(seeds) == 500


class TestPresets:
    def test_fig1_eta(self):
        spec = preset(ExperimentName.fig1_eta)

        assert [cfg.eta for cfg in spec.grid] == [float(e) for e in range(1, 9)]
        assert {(cfg.n, cfg.p, cfg.m_dim, cfg.k) for cfg in spec.grid} == {(100, 4, 4, 3)}
        assert spec.reps == 100
        assert preset(ExperimentName.fig1_eta, full_scale=True).reps == 500

    def test_fig2(self):
        assert [cfg.n for cfg in preset(ExperimentName.fig2_n).grid] == [100, 200, 300, 400]
        assert [cfg.m_dim for cfg in preset(ExperimentName.fig2_m).grid] == [4, 12, 20]
        assert len(preset(ExperimentName.fig2_n, full_scale=True).grid) == 7

    def test_fig1_bias(self):
        spec = preset(ExperimentName.fig1_bias, n_mc=20_000, reps=2)

        assert spec.estimators == ()
        assert spec.n_mc == 20_000
        assert spec.reps == 2
        assert [cfg.p for cfg in spec.grid] == [3, 6, 12, 24, 48]
        assert all(cfg.n == 20_000 and (cfg.m_dim, cfg.k, cfg.eta) == (4, 3, 1.0) for cfg in spec.grid)
        assert preset(ExperimentName.fig1_bias).n_mc == 100_000
        assert len(preset(ExperimentName.fig1_bias, full_scale=True).grid) == 16

    def test_table1(self):
        spec = preset(ExperimentName.table1)

        assert spec.estimators == (Estimator.data_driven, Estimator.naive_mle)
        assert [cfg.n for cfg in spec.grid] == [70]
        assert all((cfg.p, cfg.m_dim, cfg.k) == (4, 20, 3) for cfg in spec.grid)
        assert all(cfg.m_dim // 2 >= cfg.k for cfg in spec.grid)
        assert spec.n_mc == 100_000
        assert [cfg.n for cfg in preset(ExperimentName.table1, full_scale=True).grid] == [40, 70]


class TestRun:
    def test_columns(self, small_result):
        assert tuple(small_result.long.columns) == LONG_COLUMNS
        assert tuple(small_result.aggregated.columns) == AGGREGATED_COLUMNS
        assert not small_result.long["failed"].any()

    def test_every_estimator_reports(self, small_result):
        long = small_result.long
        metrics = {e: set(long.loc[long["estimator"] == e, "metric"]) for e in long["estimator"].unique()}

        assert set(metrics) == {e.value for e in Estimator}
        assert metrics["naive_mle"] == {"frob_err", "frob_err_unsquared"}
        assert metrics["oracle_k"] == {"frob_err", "frob_err_unsquared", "proj_err", "k_hat"}

        k_hat = long.loc[(long["metric"] == "k_hat") & (long["estimator"] != "data_driven"), "value"]
        assert (k_hat == 2.0).all()

    def test_rerun_is_identical(self, small_spec, small_result):
        again = run_experiment(small_spec)

        assert again.aggregated.to_csv(index=False) == small_result.aggregated.to_csv(index=False)
        pd.testing.assert_frame_equal(again.long, small_result.long)

    def test_workers_do_not_change_results(self, small_spec, small_result):
        pd.testing.assert_frame_equal(run_experiment(small_spec, n_jobs=2).long, small_result.long)

    def test_aggregate_is_the_mean_of_reps(self, small_result):
        long, aggregated = small_result.long, small_result.aggregated

        for row in aggregated.itertuples():
            values = long.loc[(long["estimator"] == row.estimator) & (long["metric"] == row.metric), "value"]
            assert row.mean == pytest.approx(values.mean(), rel=1e-12)
            assert row.count == len(values) == 2

    def test_failures_become_rows(self):
        spec = ExperimentSpec(name=None, grid=(SimConfig(n=6, p=4, m_dim=4, k=3, eta=1.0),), reps=2)
        result = run_experiment(spec)

        assert result.long["failed"].all()
        assert set(result.long["metric"]) == {"failed"}
        assert len(result.long) == 2 * len(Estimator)
        assert result.aggregated.empty

    def test_aggregate_skips_failed_rows(self):
        long = pd.DataFrame(
            [
                ["x", 0, 10, 2, 2, 1, 1.0, "naive_mle", 0, "frob_err", 1.0, False],
                ["x", 0, 10, 2, 2, 1, 1.0, "naive_mle", 1, "frob_err", 3.0, False],
                ["x", 0, 10, 2, 2, 1, 1.0, "naive_mle", 2, "failed", np.nan, True],
            ],
            columns=list(LONG_COLUMNS),
        )
        aggregated = aggregate(long)

        assert aggregated["metric"].tolist() == ["frob_err"]
        assert aggregated["mean"].tolist() == [2.0]
        assert aggregated["se"].tolist() == pytest.approx([1.0])
        assert aggregated["count"].tolist() == [2]

    def test_diverged_folds_fail_only_the_projected_estimators(self, monkeypatch, small_spec):
        def diverged(data, family, split, tol, max_iter, **kwargs):
            coef = CoefMatrix(
                np.full((data.m_dim, data.p), np.inf), np.zeros(data.m_dim, dtype=bool), np.full(data.m_dim, np.inf)
            )
            return FoldFits(coef, coef, coef)

        monkeypatch.setattr("core.experiments.fit_qml_all", diverged)
        long = run_experiment(small_spec).long

        failed = long.loc[long["failed"].astype(bool)]
        assert set(failed["estimator"]) == {"data_driven", "oracle_k", "oracle_p"}
        assert set(failed["metric"]) == {"failed"}
        assert len(failed) == 3 * small_spec.reps

        naive = long.loc[long["estimator"] == "naive_mle"]
        assert not naive["failed"].any()
        assert set(naive["metric"]) == {"frob_err", "frob_err_unsquared"}

    def test_simulation_uses_config_reps(self, sim_config):
        result = run_simulation(sim_config.replace(n=80, reps=3), (Estimator.naive_mle,))

        assert sorted(result.long["rep"].unique()) == [0, 1, 2]
        assert set(result.long["estimator"]) == {"naive_mle"}

    def test_bias_experiment(self):
        spec = ExperimentSpec(
            name=ExperimentName.fig1_bias,
            grid=(SimConfig(n=10_000, p=3, m_dim=3, k=3, eta=10.0),),
            estimators=(),
            n_mc=10_000,
        )
        long = run_experiment(spec).long

        assert long["metric"].tolist() == ["bias1", "bias2"]
        assert set(long["estimator"]) == {"fstar_oracle"}
        assert long["value"].iloc[0] > 0.0
        assert long["value"].iloc[1] == pytest.approx(0.0, abs=1e-10)

    def test_coverage_experiment_rows(self):
        spec = ExperimentSpec(
            name=ExperimentName.table1,
            grid=(SimConfig(n=70, p=4, m_dim=4, k=3, eta=4.0),),
            estimators=(Estimator.data_driven, Estimator.naive_mle),
            reps=2,
            n_mc=10_000,
        )
        long = run_experiment(spec).long
        ghive = long.loc[long["estimator"] == "data_driven"].set_index(["rep", "metric"])["value"]
        naive = set(long.loc[long["estimator"] == "naive_mle", "metric"])

        expected = {"cover_pf", "cover_theta", "ci_length", "se", "se_asymptotic", "cover_pf_asymptotic"}
        assert expected <= set(ghive.index.get_level_values(1))
        assert {"cover_pf", "se", "estimate"} <= naive
        assert "se_asymptotic" not in naive
        for rep in (0, 1):
            assert ghive[rep, "se"] == pytest.approx(ghive[rep, "se_asymptotic"] * np.sqrt(70), rel=1e-12)
            assert ghive[rep, "ci_length"] == pytest.approx(2.0 * 1.959963984540054 * ghive[rep, "se"], rel=1e-9)
            assert ghive[rep, "cover_pf"] in {0.0, 1.0}


@pytest.mark.slow
class TestPublishedBehaviour:
    def test_projected_bias_is_small(self):
        aggregated = run_experiment(preset(ExperimentName.fig1_bias)).aggregated

        for p in (6, 12, 24, 48):
            projected = mean_of(aggregated, "fstar_oracle", "bias2", p=p)
            assert projected <= 0.25 * mean_of(aggregated, "fstar_oracle", "bias1", p=p)

        assert mean_of(aggregated, "fstar_oracle", "bias1", p=48) <= 0.7 * mean_of(aggregated, "fstar_oracle", "bias1", p=3)

    def test_naive_error_grows_with_confounding(self):
        aggregated = run_experiment(preset(ExperimentName.fig1_eta), n_jobs=-1).aggregated
        etas = [float(e) for e in range(1, 9)]

        naive = [mean_of(aggregated, "naive_mle", "frob_err", eta=eta) for eta in etas]
        assert stats.spearmanr(etas, naive).statistic > 0.8
        assert naive[-1] >= 1.5 * naive[0]
        assert mean_of(aggregated, "oracle_p", "frob_err", eta=8.0) <= 0.8 * naive[-1]

        naive_slope = np.polyfit(etas, naive, 1)[0]
        for estimator in ("data_driven", "oracle_k", "oracle_p"):
            errors = [mean_of(aggregated, estimator, "frob_err", eta=eta) for eta in etas]
            assert np.polyfit(etas, errors, 1)[0] < naive_slope

    def test_error_shrinks_with_sample_size(self):
        aggregated = run_experiment(preset(ExperimentName.fig2_n), n_jobs=-1).aggregated

        for estimator in Estimator:
            errors = [mean_of(aggregated, estimator.value, "frob_err", n=n) for n in (100, 400)]
            assert errors[1] < errors[0]

        oracle_p, oracle_k, data_driven = (
            mean_of(aggregated, e, "frob_err", n=400) for e in ("oracle_p", "oracle_k", "data_driven")
        )
        assert oracle_p <= 1.1 * oracle_k
        assert oracle_k <= 1.1 * data_driven

    def test_projection_wins_as_responses_grow(self):
        aggregated = run_experiment(preset(ExperimentName.fig2_m), n_jobs=-1).aggregated

        for m_dim in (4, 12, 20):
            naive = mean_of(aggregated, "naive_mle", "frob_err", m_dim=m_dim)
            for estimator in ("data_driven", "oracle_k", "oracle_p"):
                assert mean_of(aggregated, estimator, "frob_err", m_dim=m_dim) <= naive

    def test_coverage(self):
        # coverage of one truth draw is noisy, so average over several
        covered = {"data_driven": [], "naive_mle": []}
        for seed in range(5):
            aggregated = run_experiment(preset(ExperimentName.table1, reps=40, seed=seed), n_jobs=-1).aggregated
            for estimator, values in covered.items():
                values.append(mean_of(aggregated, estimator, "cover_pf"))

        assert 0.90 <= np.mean(covered["data_driven"]) <= 1.0
        assert np.mean(covered["naive_mle"]) <= 0.85
        assert np.mean(covered["naive_mle"]) < np.mean(covered["data_driven"])
