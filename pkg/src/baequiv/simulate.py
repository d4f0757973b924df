"""Monte-Carlo rejection rates of the three analytical tests.

Data follow the structural model ``x = X + eps``, ``y = bias + slope * X + delta``
with ``X ~ N(mean, sd_true^2)``, ``eps ~ N(0, sd_error^2)`` and
``V[delta] = lambda_true * sd_error^2``.  Under the defaults (no bias, unit
slope, equal error variances) every rejection rate estimates a type-I error;
any departure turns it into power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import PairedSample
from .errors import ConfigError, NumericalError
from .structural import ALPHA, accuracy_test, bisector_test, deming_fit, lambda_grubbs, precision_test

__all__ = ["SimulationConfig", "SimulationResult", "simulate", "format_table"]

TESTS = ("accuracy", "precision", "bisector", "bisector_slope", "bisector_intercept")


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 50
    reps: int = 1000
    seed: int = 0
    bias: float = 0.0
    slope: float = 1.0
    lambda_true: float = 1.0
    mean: float = 100.0
    sd_true: float = 10.0
    sd_error: float = 5.0
    alpha: float = ALPHA
    lambda_estimate: str = "grubbs"

    def validate(self):
        if not (isinstance(self.n, int) and self.n >= 4):
            raise ConfigError("bad-simulation-config", f"n must be an integer >= 4, got {self.n!r}")
        if not (isinstance(self.reps, int) and self.reps >= 1):
            raise ConfigError("bad-simulation-config", f"reps must be a positive integer, got {self.reps!r}")
        if not (0 < self.alpha < 1):
            raise ConfigError("bad-simulation-config", f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (self.lambda_true > 0 and self.sd_true > 0 and self.sd_error > 0):
            raise ConfigError("bad-simulation-config", "lambda_true, sd_true and sd_error must be positive")
        if self.lambda_estimate not in ("grubbs", "true"):
            raise ConfigError("bad-simulation-config", f"lambda_estimate must be 'grubbs' or 'true', got {self.lambda_estimate!r}")


@dataclass(frozen=True)
class SimulationResult:
    config: SimulationConfig
    rejections: dict
    lambda_fallbacks: int = 0
    failures: int = 0
    extra: dict = field(default_factory=dict)

    def rate(self, test: str) -> float:
        return self.rejections[test] / self.config.reps

    def mc_se(self, test: str) -> float:
        p = self.rate(test)
        return math.sqrt(p * (1.0 - p) / self.config.reps)


def simulate(config: SimulationConfig) -> SimulationResult:
    """Run ``config.reps`` replications and count rejections per test.

    ``bisector`` counts joint rejections at the Bonferroni level; the two
    component counts are kept separately.  A non-positive Grubbs estimate
    falls back to ``lambda = 1`` as the full pipeline does.  Replications
    whose Deming fit is undefined count as failures, not rejections.
    """
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    counts = dict.fromkeys(TESTS, 0)
    fallbacks = failures = 0
    sd_delta = config.sd_error * math.sqrt(config.lambda_true)
    ids = tuple(str(i + 1) for i in range(config.n))

    for _ in range(config.reps):
        true = rng.normal(config.mean, config.sd_true, config.n)
        x = true + rng.normal(0.0, config.sd_error, config.n)
        y = config.bias + config.slope * true + rng.normal(0.0, sd_delta, config.n)
        sample = PairedSample(ids, x, y)

        counts["accuracy"] += accuracy_test(sample, config.alpha).rejected
        counts["precision"] += precision_test(sample, config.alpha).rejected
        if config.lambda_estimate == "true":
            lam = config.lambda_true
        else:
            try:
                lam = lambda_grubbs(sample)
            except NumericalError:
                lam = 1.0
                fallbacks += 1
        try:
            bis = bisector_test(deming_fit(sample, lam), config.alpha)
        except NumericalError:
            failures += 1
            continue
        counts["bisector"] += bis.rejected
        counts["bisector_slope"] += bis.p_values["slope"] < bis.alpha_used
        counts["bisector_intercept"] += bis.p_values["intercept"] < bis.alpha_used

    return SimulationResult(config=config, rejections={k: int(v) for k, v in counts.items()},
                            lambda_fallbacks=fallbacks, failures=failures)


def format_table(result: SimulationResult) -> str:
    """Plain-text summary: one row per test with rate and Monte-Carlo standard error."""
    c = result.config
    lines = [
        f"# n={c.n} reps={c.reps} seed={c.seed} bias={c.bias:g} slope={c.slope:g} "
        f"lambda_true={c.lambda_true:g} alpha={c.alpha:g} lambda_estimate={c.lambda_estimate}",
        f"{'test':<20}{'rejections':>12}{'rate':>10}{'mc_se':>10}",
    ]
    for t in TESTS:
        lines.append(f"{t:<20}{result.rejections[t]:>12d}{result.rate(t):>10.4f}{result.mc_se(t):>10.4f}")
    lines.append(f"# lambda fallbacks: {result.lambda_fallbacks}; undefined Deming fits: {result.failures}")
    return "\n".join(lines) + "\n"
