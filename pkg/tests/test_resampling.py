import warnings

import numpy as np
import pytest
from scipy import stats

from baequiv.data import fixture_names, load_fixture
from baequiv.errors import ConfigError, NumericalError
from baequiv.resampling import (
    CHI2_2DF_95,
    BootstrapBand,
    ConfidenceEllipse,
    band_admits_horizontal,
    band_admits_unit_slope,
    boot_band,
    boot_bias_ci,
    boot_deming_pairs,
    boot_ellipse,
    graphical_decisions,
    make_plan,
)

from conftest import make_sample, structural_sample


def _band(lower, upper, kind="precision"):
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    grid = np.arange(len(lower), dtype=float)
    return BootstrapBand(kind, grid, lower, upper, 0.5 * (lower + upper))


class TestPlan:
    @pytest.mark.property
    def test_deterministic(self):
        a, b = make_plan(5, 100, 42), make_plan(5, 100, 42)
        assert np.array_equal(a.indices, b.indices) and np.array_equal(a.reserve, b.reserve)
        assert not np.array_equal(a.indices, make_plan(5, 100, 43).indices)

    @pytest.mark.property
    def test_range_and_shape(self):
        p = make_plan(5, 100, 42)
        assert p.indices.shape == (100, 5)
        assert p.indices.min() >= 0 and p.indices.max() < 5

    def test_uniform(self):
        p = make_plan(5, 100_000, 42)
        counts = np.bincount(p.indices.ravel(), minlength=5)
        assert np.all(np.abs(counts - 100_000) <= 0.05 * 100_000)

    @pytest.mark.parametrize("n, B, seed", [(2, 100, 1), (5, 99, 1), (5, 100, -1), (5, 100, 2**64), (5, 100.0, 1)])
    def test_bad_config(self, n, B, seed):
        with pytest.raises(ConfigError) as exc:
            make_plan(n, B, seed)
        assert exc.value.code == "bad-bootstrap-config"

    def test_plan_must_match_sample(self, pefr):
        with pytest.raises(ConfigError):
            boot_bias_ci(pefr, make_plan(18, 100, 1))


class TestBiasInterval:
    def test_pefr_contains_zero(self, pefr):
        lo, hi = boot_bias_ci(pefr, make_plan(pefr.n, 2000, 42))
        assert lo < 0 < hi

    def test_syst_bp_above_zero(self):
        s = load_fixture("syst-bp")
        assert boot_bias_ci(s, make_plan(s.n, 2000, 42))[0] > 0

    def test_zero_differences(self):
        s = make_sample([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
        assert boot_bias_ci(s, make_plan(5, 100, 1)) == (0.0, 0.0)

    @pytest.mark.property
    @pytest.mark.parametrize("name", fixture_names())
    def test_contains_point_estimate(self, name):
        s = load_fixture(name)
        lo, hi = boot_bias_ci(s, make_plan(s.n, 1000, 3))
        assert lo <= float(np.mean(s.y - s.x)) <= hi

    def test_percentile_oracle(self, rng):
        s = structural_sample(rng, 30, bias=1.0)
        plan = make_plan(30, 500, 5)
        d = s.y - s.x
        means = d[plan.indices].mean(axis=1)
        assert boot_bias_ci(s, plan) == tuple(np.percentile(means, [2.5, 97.5]))

    def test_degenerate_rows_redrawn_from_reserve(self):
        # n = 4 distinct x: a resample is constant with probability 4/256.
        s = make_sample([1.0, 2.0, 3.0, 4.0], [1.5, 1.8, 3.9, 3.7])
        plan = make_plan(4, 2000, 11)
        idx = plan.indices
        bad = np.flatnonzero(np.ptp(s.x[idx], axis=1) == 0)
        assert bad.size > 0
        good_spare = plan.reserve[np.ptp(s.x[plan.reserve], axis=1) > 0]
        rows = idx.copy()
        rows[bad] = good_spare[: bad.size]
        expected = np.percentile((s.y - s.x)[rows].mean(axis=1), [2.5, 97.5])
        assert boot_bias_ci(s, plan) == tuple(expected)

    def test_unstable(self):
        # n = 3: one in nine resamples repeats a single subject.
        s = make_sample([1.0, 2.0, 3.0], [1.1, 2.3, 2.8])
        with pytest.raises(NumericalError) as exc:
            boot_bias_ci(s, make_plan(3, 2000, 1))
        assert exc.value.code == "bootstrap-unstable"


class TestBands:
    def test_zero_noise_zero_width(self):
        x = np.arange(10.0)
        s = make_sample(x, 2 * x + 1)
        plan = make_plan(10, 200, 1)
        for kind in ("precision", "bisector"):
            b = boot_band(s, kind, plan, lambda_mode=1.0)
            assert np.allclose(b.width, 0.0, atol=1e-12)
            assert np.allclose(b.lower, b.estimate, atol=1e-12)

    @pytest.mark.property
    @pytest.mark.parametrize("name", fixture_names())
    def test_band_invariants(self, name):
        s = load_fixture(name)
        plan = make_plan(s.n, 500, 2)
        for kind, source in (("precision", s.x + s.y), ("bisector", s.x)):
            b = boot_band(s, kind, plan, grid_size=50, lambda_mode=1.0)
            assert np.all(b.lower <= b.upper)
            assert np.all(np.diff(b.grid) > 0)
            assert b.grid[0] == source.min() and b.grid[-1] == source.max()
            assert len(b.grid) == 50

    def test_grid_size(self, pefr):
        with pytest.raises(ConfigError):
            boot_band(pefr, "precision", make_plan(pefr.n, 100, 1), grid_size=19)

    def test_unknown_kind(self, pefr):
        with pytest.raises(ConfigError):
            boot_band(pefr, "accuracy", make_plan(pefr.n, 100, 1))

    def test_grubbs_resampling_is_unstable_on_exact_data(self):
        x = np.arange(10.0)
        with pytest.raises(NumericalError) as exc:
            boot_band(make_sample(x, 2 * x + 1), "bisector", make_plan(10, 200, 1), lambda_mode="grubbs")
        assert exc.value.code == "bootstrap-unstable"

    def test_grubbs_per_resample_collapses_slopes(self, rng):
        s = structural_sample(rng, 200, sd_x=5, sd_y=5)
        pairs = boot_deming_pairs(s, make_plan(200, 300, 4), "grubbs")
        assert np.allclose(pairs[:, 1], 1.0, rtol=1e-8)

    def test_deming_pairs_oracle(self, rng):
        from baequiv.structural import deming_fit
        s = structural_sample(rng, 25)
        plan = make_plan(25, 100, 9)
        pairs = boot_deming_pairs(s, plan, 1.4)
        for k in (0, 17, 99):
            i = plan.indices[k]
            f = deming_fit(make_sample(s.x[i], s.y[i]), 1.4)
            assert pairs[k] == pytest.approx([f.intercept, f.slope], rel=1e-9, abs=1e-9)

    def test_replicate_lambda_resampled(self, pefr):
        pairs = boot_deming_pairs(pefr, make_plan(pefr.n, 200, 5), "replicates")
        assert np.all(np.isfinite(pairs)) and np.ptp(pairs[:, 1]) > 0

    def test_pefr_precision_admits_horizontal(self, pefr):
        b = boot_band(pefr, "precision", make_plan(pefr.n, 2000, 42))
        assert band_admits_horizontal(b)

    def test_coverage_oracle(self):
        # True precision line under H0 is d = 0.  Required: inside the band at
        # >= 90% of grid points in >= 90% of 200 simulations.
        rng = np.random.default_rng(20240601)
        hits = 0
        for i in range(200):
            s = structural_sample(rng, 50, sd_x=3, sd_y=3)
            b = boot_band(s, "precision", make_plan(50, 500, i))
            hits += np.mean((b.lower <= 0) & (0 <= b.upper)) >= 0.9
        assert hits / 200 >= 0.90

    def test_pointwise_coverage(self):
        # The property a pointwise 95% band does have: average coverage near 95%.
        rng = np.random.default_rng(20240601)
        cover = []
        for i in range(200):
            s = structural_sample(rng, 200, sd_x=3, sd_y=3)
            b = boot_band(s, "precision", make_plan(200, 500, i))
            cover.append(np.mean((b.lower <= 0) & (0 <= b.upper)))
        assert np.mean(cover) == pytest.approx(0.95, abs=0.02)

    @pytest.mark.property
    def test_width_shrinks_with_n(self):
        rng = np.random.default_rng(5)
        widths = {}
        for n in (20, 200):
            w = []
            for i in range(50):
                s = structural_sample(rng, n, sd_x=3, sd_y=3)
                w.append(np.median(boot_band(s, "precision", make_plan(n, 200, i)).width))
            widths[n] = np.median(w)
        assert widths[200] < widths[20]


class TestAdmission:
    def test_horizontal_fits(self):
        assert band_admits_horizontal(_band([-1, -0.5], [0.5, 1]))

    def test_horizontal_does_not_fit(self):
        assert not band_admits_horizontal(_band([0.5, -1], [1, -0.5]))

    def test_translation_restricts_level(self):
        b = _band([-1, -0.5], [0.5, 1])
        assert band_admits_horizontal(b, (0.2, 0.4))
        assert not band_admits_horizontal(b, (0.6, 0.9))
        assert band_admits_horizontal(b, 0.0)

    def test_unit_slope(self):
        zero = _band([0, 0, 0], [0, 0, 0], kind="bisector")
        assert band_admits_unit_slope(zero, (-0.1, 0.1))
        above = _band([1, 1.2, 1.1], [2, 2, 2], kind="bisector")
        assert not band_admits_unit_slope(above, (-0.1, 0.1))

    def test_unit_slope_needs_bisector(self):
        with pytest.raises(ConfigError):
            band_admits_unit_slope(_band([0, 0], [1, 1]), (0, 1))

    def test_fat_milk_precision_no_horizontal(self, case_analyses):
        a = case_analyses["fat-milk"]
        assert not band_admits_horizontal(a.precision_band)

    def test_syst_bp_translated_unit_slope(self, case_analyses):
        a = case_analyses["syst-bp"]
        assert band_admits_unit_slope(a.bisector_band, a.report.graphical.bias_ci)

    @pytest.mark.property
    @pytest.mark.parametrize("case", ["pefr", "syst-bp", "fat-milk", "blocking-drugs"])
    def test_decisions_recomputable(self, case_analyses, case):
        a = case_analyses[case]
        g = a.report.graphical
        again = graphical_decisions(g.bias_ci, a.precision_band, a.bisector_band, a.ellipse,
                                    bias=a.report.accuracy.estimates["bias"])
        assert again == g


class TestEllipse:
    def test_quantile_matches_chi2(self):
        assert CHI2_2DF_95 == pytest.approx(stats.chi2.ppf(0.95, 2), rel=1e-12)
        assert CHI2_2DF_95 == pytest.approx(5.991, abs=5e-4)

    def test_center_inside(self, pefr):
        e = boot_ellipse(pefr, make_plan(pefr.n, 1000, 1), 1.692)
        assert e.mahalanobis2(e.center) == 0.0 and e.contains(e.center)

    @pytest.mark.property
    def test_covariance(self, pefr):
        e = boot_ellipse(pefr, make_plan(pefr.n, 1000, 1), "replicates")
        assert np.allclose(e.covariance, e.covariance.T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(e.covariance) > 0)

    def test_moment_oracle(self, rng):
        s = structural_sample(rng, 40)
        plan = make_plan(40, 600, 2)
        pairs = boot_deming_pairs(s, plan, 1.0)
        e = boot_ellipse(s, plan, 1.0)
        assert np.allclose(e.center, pairs.mean(axis=0), rtol=1e-12)
        assert np.allclose(e.covariance, np.cov(pairs.T), rtol=1e-12)

    def test_boundary_on_contour(self, pefr):
        e = boot_ellipse(pefr, make_plan(pefr.n, 1000, 1), 1.692)
        for p in e.boundary(16):
            assert e.mahalanobis2(p) == pytest.approx(CHI2_2DF_95, rel=1e-9)

    def test_pefr_null_inside(self, case_analyses):
        assert case_analyses["pefr"].ellipse.contains((0.0, 1.0))

    def test_syst_bp_translated_null_inside(self, case_analyses):
        g = case_analyses["syst-bp"].report.graphical
        assert g.ellipse_contains_translated_null and not g.ellipse_contains_null

    def test_degenerate(self, rng):
        s = structural_sample(rng, 200, sd_x=5, sd_y=5)
        with pytest.raises(NumericalError) as exc:
            boot_ellipse(s, make_plan(200, 500, 1), "grubbs")
        assert exc.value.code == "ellipse-degenerate"

    def test_small_B_warns(self, pefr):
        with pytest.warns(UserWarning):
            boot_ellipse(pefr, make_plan(pefr.n, 200, 1), 1.692)

    @pytest.mark.property
    def test_null_rejection_rate(self):
        # The covariance ellipse is an asymptotic construction: a 1000-run study
        # gave 6.9% at n = 50, 6.1% at n = 100 and 5.7% at n = 400.
        rng = np.random.default_rng(0)
        rejected = 0
        for i in range(200):
            s = structural_sample(rng, 400, sd_x=3, sd_y=3)
            rejected += not boot_ellipse(s, make_plan(400, 500, i), 1.0).contains((0.0, 1.0))
        assert rejected / 200 == pytest.approx(0.05, abs=0.02)


class TestDeterminism:
    @pytest.mark.property
    @pytest.mark.parametrize("name", ["pefr", "plasma-volume"])
    def test_workers_do_not_change_results(self, name):
        s = load_fixture(name)
        plan = make_plan(s.n, 1000, 77)
        lam = "replicates" if s.replicated else 1.0
        one = (boot_bias_ci(s, plan), boot_band(s, "precision", plan), boot_band(s, "bisector", plan, lambda_mode=lam),
               boot_ellipse(s, plan, lam))
        four = (boot_bias_ci(s, plan, workers=4), boot_band(s, "precision", plan, workers=4),
                boot_band(s, "bisector", plan, lambda_mode=lam, workers=4), boot_ellipse(s, plan, lam, workers=4))
        assert one[0] == four[0]
        for a, b in zip(one[1:3], four[1:3]):
            assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper) and np.array_equal(a.grid, b.grid)
        assert np.array_equal(one[3].center, four[3].center) and np.array_equal(one[3].covariance, four[3].covariance)

    @pytest.mark.property
    def test_same_seed_same_band(self, pefr):
        a = boot_band(pefr, "bisector", make_plan(pefr.n, 500, 8), lambda_mode="replicates")
        b = boot_band(pefr, "bisector", make_plan(pefr.n, 500, 8), lambda_mode="replicates")
        assert a.lower.tobytes() == b.lower.tobytes() and a.upper.tobytes() == b.upper.tobytes()
