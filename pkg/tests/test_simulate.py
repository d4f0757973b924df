import pytest

from baequiv.errors import ConfigError
from baequiv.simulate import TESTS, SimulationConfig, format_table, simulate


class TestSimulate:
    @pytest.mark.property
    def test_deterministic(self):
        cfg = SimulationConfig(n=20, reps=100, seed=4)
        assert simulate(cfg).rejections == simulate(cfg).rejections
        assert format_table(simulate(cfg)) == format_table(simulate(cfg))

    def test_counts_consistent(self):
        r = simulate(SimulationConfig(n=30, reps=200, seed=2, lambda_estimate="true"))
        assert set(r.rejections) == set(TESTS)
        assert max(r.rejections["bisector_slope"], r.rejections["bisector_intercept"]) <= r.rejections["bisector"]
        assert r.rejections["bisector"] <= r.rejections["bisector_slope"] + r.rejections["bisector_intercept"]
        assert r.failures == 0

    def test_power_against_bias(self):
        r = simulate(SimulationConfig(n=50, reps=300, seed=1, bias=4.0))
        assert r.rate("accuracy") > 0.9

    def test_power_against_unequal_precision(self):
        r = simulate(SimulationConfig(n=50, reps=300, seed=1, lambda_true=9.0))
        assert r.rate("precision") > 0.8

    def test_true_lambda_slope_power(self):
        r = simulate(SimulationConfig(n=50, reps=300, seed=1, slope=1.5, lambda_estimate="true"))
        assert r.rate("bisector_slope") > 0.8

    @pytest.mark.parametrize("kw", [{"n": 3}, {"reps": 0}, {"alpha": 1.0}, {"lambda_true": 0.0}, {"lambda_estimate": "ml"}])
    def test_bad_config(self, kw):
        with pytest.raises(ConfigError):
            simulate(SimulationConfig(**kw))

    def test_mc_se(self):
        r = simulate(SimulationConfig(n=20, reps=100, seed=4))
        p = r.rate("accuracy")
        assert r.mc_se("accuracy") == pytest.approx((p * (1 - p) / 100) ** 0.5)
