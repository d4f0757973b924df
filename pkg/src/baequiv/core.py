"""Scalar statistics shared by every test: moments, OLS with inference, t tails."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError

__all__ = [
    "Moments",
    "OlsFit",
    "moments",
    "ols_fit",
    "t_tail",
    "t_quantile",
    "betainc",
]


@dataclass(frozen=True)
class Moments:
    """Sample means and unbiased (divisor ``n - 1``) second moments."""

    n: int
    mean_x: float
    mean_y: float
    s_xx: float
    s_yy: float
    s_xy: float


def _check_series(*arrays):
    arrs = [np.asarray(a, dtype=float) for a in arrays]
    n = len(arrs[0])
    if any(a.ndim != 1 or len(a) != n for a in arrs):
        raise DataError("row-length-mismatch", "series must be one-dimensional and of equal length")
    if n < 3:
        raise DataError("too-few-subjects", f"need at least 3 subjects, got {n}", n=n)
    for a in arrs:
        bad = np.flatnonzero(~np.isfinite(a))
        if bad.size:
            raise DataError("non-finite-input", f"row {bad[0]} is not finite", row=int(bad[0]))
    return arrs


def moments(sample) -> Moments:
    """Two-pass moments of ``sample.x`` and ``sample.y``."""
    x, y = _check_series(sample.x, sample.y)
    n = len(x)
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    return Moments(
        n=n,
        mean_x=float(mx),
        mean_y=float(my),
        s_xx=float(dx @ dx) / (n - 1),
        s_yy=float(dy @ dy) / (n - 1),
        s_xy=float(dx @ dy) / (n - 1),
    )


# -- Student t tail ------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise NumericalError("betainc-no-convergence", f"a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # The fraction converges fast only on this side of the mode.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_tail(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t with ``df`` dof."""
    if not df >= 1:
        raise ConfigError("invalid-df", f"df must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    if not math.isfinite(t):
        raise NumericalError("non-finite-statistic", f"t = {t}")
    t2 = t * t
    # I_{df/(df+t^2)}(df/2, 1/2); the complementary form keeps precision when t is small.
    if t2 < df:
        return 1.0 - betainc(0.5, df / 2.0, t2 / (df + t2))
    return betainc(df / 2.0, 0.5, df / (df + t2))


def t_quantile(p: float, df: float) -> float:
    """Upper quantile q with P(T <= q) = p, by bisection on :func:`t_tail`."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p == 0.5:
        return 0.0
    upper_tail = 1.0 - p if p > 0.5 else p
    target = 2.0 * upper_tail
    lo, hi = 0.0, 1.0
    while t_tail(hi, df) > target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_tail(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    q = 0.5 * (lo + hi)
    return q if p > 0.5 else -q


# -- Ordinary least squares ----------------------------------------------------

@dataclass(frozen=True)
class OlsFit:
    """Straight-line OLS fit of a response on one predictor.

    ``p_slope``/``p_intercept`` raise ``degenerate-zero-residual`` when the
    residual variance is exactly zero and the coefficient is nonzero: the
    data are exact and a p-value is undefined.
    """

    slope: float
    intercept: float
    se_slope: float
    se_intercept: float
    df: int
    residual_sd: float
    residuals: np.ndarray

    @property
    def t_slope(self) -> float:
        return _t(self.slope, self.se_slope)

    @property
    def t_intercept(self) -> float:
        return _t(self.intercept, self.se_intercept)

    @property
    def p_slope(self) -> float:
        return _p(self.slope, self.se_slope, self.df, "slope")

    @property
    def p_intercept(self) -> float:
        return _p(self.intercept, self.se_intercept, self.df, "intercept")


def _t(est: float, se: float) -> float:
    if se > 0:
        return est / se
    if est == 0:
        return 0.0
    return math.copysign(math.inf, est)


def _p(est: float, se: float, df: int, what: str) -> float:
    if se == 0 and est != 0:
        raise NumericalError("degenerate-zero-residual", f"{what} = {est:g} fitted without residual error")
    return t_tail(_t(est, se), df)


def ols_fit(predictor, response) -> OlsFit:
    """Fit ``response = intercept + slope * predictor`` by least squares."""
    p, r = _check_series(predictor, response)
    n = len(p)
    mp, mr = p.mean(), r.mean()
    dp = p - mp
    s_pp = float(dp @ dp)
    if s_pp == 0:
        raise NumericalError("degenerate-predictor", "predictor has zero variance")
    slope = float(dp @ (r - mr)) / s_pp
    intercept = float(mr - slope * mp)
    resid = r - (intercept + slope * p)
    # Residuals at rounding level of an exact fit would otherwise give a tiny spurious se.
    scale = max(float(np.max(np.abs(r))), float(np.max(np.abs(r - mr))), 1e-300)
    if np.all(np.abs(resid) <= 64 * np.finfo(float).eps * scale):
        resid = np.zeros_like(resid)
    df = n - 2
    s2 = float(resid @ resid) / df
    se_slope = math.sqrt(s2 / s_pp)
    se_intercept = math.sqrt(s2 * (1.0 / n + mp * mp / s_pp))
    resid.setflags(write=False)
    return OlsFit(
        slope=slope,
        intercept=intercept,
        se_slope=se_slope,
        se_intercept=se_intercept,
        df=df,
        residual_sd=math.sqrt(s2),
        residuals=resid,
    )
