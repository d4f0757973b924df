"""Classic Bland-Altman limits of agreement, kept as a point of comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import _check_series, t_quantile

__all__ = ["LimitsOfAgreement", "limits_of_agreement", "LOA_MULTIPLIER"]

LOA_MULTIPLIER = 1.96


@dataclass(frozen=True)
class LimitsOfAgreement:
    bias: float
    sd_diff: float
    loa_lower: float
    loa_upper: float
    ci_lower_limit: tuple
    ci_upper_limit: tuple
    n: int
    level: float = 0.95


def limits_of_agreement(sample, level: float = 0.95) -> LimitsOfAgreement:
    """Bias +/- 1.96 SD, each limit with a t-based confidence interval.

    The limit's standard error uses the usual approximation
    ``sd * sqrt(3 / n)``.
    """
    x, y = _check_series(sample.x, sample.y)
    d = y - x
    n = len(d)
    bias = float(d.mean())
    sd = float(np.std(d, ddof=1))
    half = LOA_MULTIPLIER * sd
    lower, upper = bias - half, bias + half
    margin = t_quantile(0.5 + level / 2.0, n - 1) * sd * math.sqrt(3.0 / n)
    return LimitsOfAgreement(
        bias=bias,
        sd_diff=sd,
        loa_lower=lower,
        loa_upper=upper,
        ci_lower_limit=(lower - margin, lower + margin),
        ci_upper_limit=(upper - margin, upper + margin),
        n=n,
        level=level,
    )
