"""Tests for src/simulation.py: DGP, truth oracle, Monte Carlo aggregation."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

SMALL_SUPER_N = 100_000

# Seeds the regression values below are drawn with; they match config/simulate_*.json.
TRUTH_SEEDS = {"good": 20240, "poor": 20241}
TREATED_FRACTION_SEED = 0


def _population_moments(gamma, alpha0, nodes=100):
    """(E[e], E[h], E[h*tau]) with h = e(1-e), by Gauss-Hermite quadrature per (X1, X2) cell."""
    from scipy.special import expit

    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    ww = np.outer(w, w)
    out = np.zeros(3)
    for x1 in (0.0, 1.0):
        for x2 in (0.0, 1.0):
            p2 = 0.4 + 0.2 * x1
            prob = 0.5 * (p2 if x2 else 1.0 - p2)
            var, cov = (1.0, 0.5) if x2 else (2.0, 0.25)
            l11 = np.sqrt(var)
            l21 = cov / l11
            l22 = np.sqrt(var - l21**2)
            x3 = x1 - 0.25 * x2 + x1 * x2 + l11 * z1
            x4 = -0.25 * x1 + x2 + x1 * x2 + l21 * z1 + l22 * z2
            lin = -0.4 * (x1 + x2 + x3 + x4) - 0.1 * x3**2 + 0.1 * (x3 * x4 + x4**2)
            e = expit(gamma * lin - alpha0)
            h = e * (1.0 - e)
            tau = 4.0 + x2 * x3 + 3.0 * x3**2 + 6.0 * x3 * x4 + 3.0 * x4**2
            out += prob * np.array([np.sum(ww * e), np.sum(ww * h), np.sum(ww * h * tau)])
    return out


def _overlap_truth(gamma, alpha0):
    _, h, h_tau = _population_moments(gamma, alpha0)
    return h_tau / h


class TestDataGeneratingProcess:
    """Covariates, PS and potential outcomes."""

    def test_derived_covariates(self):
        from src.simulation import draw_covariates

        x = draw_covariates(np.random.default_rng(0), 1000)
        assert x.shape == (1000, 7)
        np.testing.assert_allclose(x[:, 4], x[:, 2] ** 2)
        np.testing.assert_allclose(x[:, 5], x[:, 2] * x[:, 3])
        np.testing.assert_allclose(x[:, 6], x[:, 3] ** 2)
        assert set(np.unique(x[:, 0])) <= {0.0, 1.0}

    def test_reference_branch_covariance(self):
        from src.simulation import draw_covariates

        x = draw_covariates(np.random.default_rng(1), 200_000)
        branch = (x[:, 0] == 0) & (x[:, 1] == 0)
        x34 = x[branch][:, 2:4]
        np.testing.assert_allclose(x34.mean(axis=0), [0.0, 0.0], atol=0.03)
        np.testing.assert_allclose(np.cov(x34.T), [[2.0, 0.25], [0.25, 2.0]], atol=0.05)

    def test_cate_baseline(self):
        from src.simulation import cate

        x = np.array([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
        assert cate(x)[0] == 4.0

    def test_true_ps_at_origin(self):
        from scipy.special import expit

        from src.simulation import true_ps

        assert true_ps(np.zeros((1, 7)), 0.5, 0.407)[0] == pytest.approx(expit(-0.407))

    def test_unit_is_consistent(self):
        from src.simulation import GOOD_OVERLAP, gen_unit

        u = gen_unit(np.random.default_rng(3), *GOOD_OVERLAP)
        assert len(u.x) == 7
        assert 0.0 < u.e < 1.0
        assert u.y == (u.y1 if u.a == 1 else u.y0)

    def test_poor_overlap_has_more_extreme_scores(self):
        from src.simulation import GOOD_OVERLAP, POOR_OVERLAP, extreme_ps_fraction

        good = extreme_ps_fraction(*GOOD_OVERLAP, n=100_000)
        poor = extreme_ps_fraction(*POOR_OVERLAP, n=100_000)
        assert poor > good

    def test_simulated_dataset_is_reproducible(self):
        from src.simulation import DGPConfig, simulate_dataset

        a = simulate_dataset(DGPConfig(N=100, seed=5), replicate=2)
        b = simulate_dataset(DGPConfig(N=100, seed=5), replicate=2)
        c = simulate_dataset(DGPConfig(N=100, seed=5), replicate=3)
        np.testing.assert_array_equal(a.outcome, b.outcome)
        assert not np.array_equal(a.outcome, c.outcome)
        assert a.covariate_names == ("X1", "X2", "X3", "X4", "X5", "X6", "X7")


class TestDGPConfig:
    """Configuration rules."""

    def test_overlap_labels(self):
        from src.simulation import POOR_OVERLAP, DGPConfig

        assert DGPConfig().overlap == "good"
        assert DGPConfig(*POOR_OVERLAP).overlap == "poor"
        assert DGPConfig(gamma=1.0, alpha0=0.0).overlap == "custom"

    def test_both_cases(self):
        from src.simulation import DGPConfig

        assert DGPConfig(ps_model="both").cases == ("correct", "misspecified")

    @pytest.mark.parametrize("kwargs", [{"N": 5}, {"seed": -1}, {"ps_model": "ensemble"}])
    def test_invalid(self, kwargs):
        from src.simulation import DGPConfig, DGPConfigError

        with pytest.raises(DGPConfigError):
            DGPConfig(**kwargs)


class TestTruth:
    """Super-population truth oracle."""

    def test_constant_tilt_gives_mean_cate(self):
        from src.simulation import DGPConfig, cate, compute_truth, draw_covariates, stream_rng
        from src.tilting import WeightScheme

        config = DGPConfig(seed=8)
        truth = compute_truth(WeightScheme("WATE", "IPW"), SMALL_SUPER_N, config)
        x = draw_covariates(stream_rng(8, 0, 0), SMALL_SUPER_N)
        assert truth == pytest.approx(float(np.mean(cate(x))), abs=1e-10)

    def test_beta_two_equals_overlap(self):
        from src.simulation import DGPConfig, compute_truths
        from src.tilting import WeightScheme, beta_scheme

        for cls in ("WATE", "WATT", "WATC"):
            ow, bw = compute_truths(
                [WeightScheme(cls, "OW"), beta_scheme(cls, 2.0)], SMALL_SUPER_N, DGPConfig(seed=1)
            )
            assert bw.value == pytest.approx(ow.value, abs=1e-12)

    def test_super_n_minimum(self):
        from src.simulation import DGPConfigError, compute_truth
        from src.tilting import WeightScheme

        with pytest.raises(DGPConfigError, match="super_n"):
            compute_truth(WeightScheme("WATE", "OW"), super_n=1000)

    def test_batch_standard_error_reported(self):
        from src.simulation import DGPConfig, compute_truth_detail
        from src.tilting import WeightScheme

        detail = compute_truth_detail(WeightScheme("WATE", "OW"), 300_000, DGPConfig(seed=2))
        assert detail.batches == 3
        assert detail.se > 0.0


class TestRegressionValues:
    """Seeded population draws against quadrature of the same expectations."""

    def test_treated_fraction_at_good_overlap(self):
        from src.simulation import GOOD_OVERLAP, treated_fraction

        expected = _population_moments(*GOOD_OVERLAP)[0]
        value = treated_fraction(*GOOD_OVERLAP, n=1_000_000, seed=TREATED_FRACTION_SEED)
        assert value == pytest.approx(expected, abs=1.5e-3)
        assert value == treated_fraction(*GOOD_OVERLAP, n=1_000_000, seed=TREATED_FRACTION_SEED)

    def test_quadrature_moments_are_ordered(self):
        from src.simulation import GOOD_OVERLAP

        e_mean, h_mean, _ = _population_moments(*GOOD_OVERLAP)
        assert 0.0 < h_mean <= 0.25
        assert h_mean < e_mean < 1.0

    @pytest.mark.parametrize("overlap", ["good", "poor"])
    def test_overlap_truth_at_million(self, overlap):
        from src.simulation import GOOD_OVERLAP, POOR_OVERLAP, DGPConfig, compute_truth_detail
        from src.tilting import WeightScheme

        gamma, alpha0 = GOOD_OVERLAP if overlap == "good" else POOR_OVERLAP
        config = DGPConfig(gamma, alpha0, seed=TRUTH_SEEDS[overlap])
        detail = compute_truth_detail(WeightScheme("WATE", "OW"), 1_000_000, config)
        assert detail.batches == 10
        assert abs(detail.value - _overlap_truth(gamma, alpha0)) <= 4.0 * detail.se

    @pytest.mark.slow
    @pytest.mark.parametrize("overlap", ["good", "poor"])
    def test_overlap_truth_at_ten_million(self, overlap):
        from src.simulation import GOOD_OVERLAP, POOR_OVERLAP, DGPConfig, compute_truth_detail
        from src.tilting import WeightScheme

        gamma, alpha0 = GOOD_OVERLAP if overlap == "good" else POOR_OVERLAP
        config = DGPConfig(gamma, alpha0, seed=TRUTH_SEEDS[overlap])
        scheme = WeightScheme("WATE", "OW")
        small = compute_truth_detail(scheme, 1_000_000, config)
        large = compute_truth_detail(scheme, 10_000_000, config)
        assert large.batches == 100
        assert abs(large.value - small.value) <= 3.0 * small.se
        assert abs(large.value - _overlap_truth(gamma, alpha0)) <= 4.0 * large.se


class TestCoverageBand:
    """Acceptance band for the coverage probability."""

    def test_band_at_thousand_replicates(self):
        from src.simulation import cp_band, cp_band_display

        assert cp_band_display(1000) == (0.937, 0.964)
        lo, hi = cp_band(1000)
        assert lo == pytest.approx(0.9365, abs=1e-4)
        assert hi == pytest.approx(0.9635, abs=1e-4)

    def test_rbias(self):
        from src.simulation import rbias_percent

        assert rbias_percent(1.1, 1.0) == pytest.approx(10.0)
        assert rbias_percent(0.9, -1.0) == pytest.approx(190.0)
        assert rbias_percent(1.0, 0.0) is None


class TestSummaries:
    """Aggregation of replicate records."""

    def test_exact_estimates_give_zero_bias_full_coverage(self):
        from src.simulation import ReplicateRecord, TruthDetail, cp_band, summarize
        from src.tilting import WeightScheme

        s = WeightScheme("WATE", "OW")
        records = [
            ReplicateRecord("correct", s, m, 2.0, 1.5, 2.5, True, 0.0) for m in range(20)
        ]
        summary = summarize("correct", s, TruthDetail(2.0, 0.0, 100_000, 1), records, cp_band(20))
        assert summary.coverage == 1.0
        assert summary.rbias_median == 0.0
        assert summary.rbias_iqr == 0.0
        assert summary.mean_ci_width == pytest.approx(1.0)
        assert summary.n_ok == 20

    def test_failed_records_are_counted_not_used(self):
        from src.simulation import ReplicateRecord, TruthDetail, cp_band, summarize
        from src.tilting import WeightScheme

        s = WeightScheme("WATE", "OW")
        records = [
            ReplicateRecord("correct", s, 0, 2.2, 1.5, 2.5, True, 10.0),
            ReplicateRecord("correct", s, 1, None, None, None, None, None, "boom"),
        ]
        summary = summarize("correct", s, TruthDetail(2.0, 0.0, 100_000, 1), records, cp_band(2))
        assert (summary.n_ok, summary.n_failed) == (1, 1)
        assert summary.coverage == 1.0


class TestMonteCarlo:
    """Small end-to-end Monte Carlo runs."""

    def _schemes(self):
        from src.tilting import WeightScheme

        return [WeightScheme("WATE", "OW"), WeightScheme("WATE", "IPW")]

    def test_small_run(self):
        from src.simulation import DGPConfig, long_records, result_to_dict, run_monte_carlo

        result = run_monte_carlo(
            M=3, N=300, B=10, schemes=self._schemes(), config=DGPConfig(seed=1),
            super_n=SMALL_SUPER_N,
        )
        assert len(result.summaries) == 2
        assert len(result.replicates) == 6
        for s in result.summaries:
            assert s.n_ok + s.n_failed == 3
            if s.coverage is not None:
                assert 0.0 <= s.coverage <= 1.0
            if s.rbias_median is not None:
                assert s.rbias_median >= 0.0
        assert result.summary("overlap").scheme.scheme == "OW"
        assert len(long_records(result)) == 2 * 13
        assert result_to_dict(result)["metadata"]["overlap"] == "good"

    def test_threads_do_not_change_results(self):
        from src.simulation import DGPConfig, compute_truths, run_monte_carlo

        schemes = self._schemes()
        truths = compute_truths(schemes, SMALL_SUPER_N, DGPConfig(seed=4))
        kwargs = dict(M=2, N=200, B=6, schemes=schemes, config=DGPConfig(seed=4), truths=truths)
        one = run_monte_carlo(threads=1, **kwargs)
        many = run_monte_carlo(threads=4, **kwargs)
        assert [r.estimate for r in one.replicates] == [r.estimate for r in many.replicates]
        assert [r.ci_upper for r in one.replicates] == [r.ci_upper for r in many.replicates]

    def test_both_ps_models(self):
        from src.simulation import DGPConfig, run_monte_carlo

        result = run_monte_carlo(
            M=2, N=300, B=5, schemes=self._schemes()[:1],
            config=DGPConfig(seed=2, ps_model="both"), super_n=SMALL_SUPER_N,
        )
        assert [s.case for s in result.summaries] == ["correct", "misspecified"]

    def test_zero_replicates_rejected(self):
        from src.simulation import DGPConfigError, run_monte_carlo

        with pytest.raises(DGPConfigError, match="M must be"):
            run_monte_carlo(M=0, N=100, B=5, schemes=self._schemes())

    @pytest.mark.slow
    def test_overlap_coverage_near_nominal(self):
        from src.simulation import DGPConfig, run_monte_carlo
        from src.tilting import WeightScheme

        schemes = [WeightScheme("WATE", name) for name in ("OW", "MW", "EW")]
        result = run_monte_carlo(
            M=300, N=2000, B=200, schemes=schemes,
            config=DGPConfig(seed=TRUTH_SEEDS["good"]), threads=4,
        )
        for label in ("overlap", "matching", "entropy"):
            coverage = result.summary(label).coverage
            assert 0.91 <= coverage <= 0.98, label

    @pytest.mark.slow
    def test_poor_overlap_favours_overlap_weights(self):
        from dataclasses import replace

        from src.config_loader import load_simulate_config
        from src.simulation import run_monte_carlo
        from src.tilting import WeightScheme

        cfg = load_simulate_config(str(PROJECT_ROOT / "config" / "simulate_poor.json"))
        config = replace(cfg.dgp(), ps_model="correct")
        assert config.overlap == "poor"
        result = run_monte_carlo(
            M=300, N=cfg.N, B=cfg.B,
            schemes=[WeightScheme("WATE", "IPW"), WeightScheme("WATE", "OW")],
            config=config, super_n=cfg.super_n, threads=4,
        )
        ipw = result.summary("overall")
        ow = result.summary("overlap")
        assert ow.rbias_median < ipw.rbias_median
        assert ipw.rbias_iqr > ow.rbias_iqr
