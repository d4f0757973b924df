"""Accuracy, precision and bisector-agreement tests and their estimators.

Notation: ``x`` is the reference technique, ``y`` the candidate, ``d = y - x``
and ``s = x + y``.  The error-variance ratio ``lambda`` is always
``V[candidate error] / V[reference error]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import _check_series, moments, ols_fit, t_tail
from .errors import DataError, NumericalError

__all__ = [
    "ALPHA",
    "TestResult",
    "DemingFit",
    "EquivalenceVerdict",
    "accuracy_test",
    "precision_test",
    "lambda_grubbs",
    "lambda_replicates",
    "deming_slope",
    "deming_fit",
    "bisector_test",
    "calibration_scale",
    "concordance_holds",
    "nested_verdict",
    "STRICT",
    "BIASED_CONCORDANT",
    "NOT_EQUIVALENT",
]

ALPHA = 0.05

REJECT = "reject"
NOT_REJECT = "not-reject"

STRICT = "strict-equivalence"
BIASED_CONCORDANT = "biased-but-concordant"
NOT_EQUIVALENT = "not-equivalent"


@dataclass(frozen=True)
class TestResult:
    """Outcome of one analytical test.

    ``p_values`` maps each governed parameter to its two-sided p-value; a
    value of ``None`` marks an exact (zero-residual) fit, for which ``exact``
    is set and the decision is taken without a p-value.
    """

    __test__ = False  # not a pytest class

    test_kind: str
    statistics: dict
    p_values: dict
    alpha_used: float
    decision: str
    estimates: dict
    exact: bool = False
    annotations: tuple = field(default=())

    @property
    def rejected(self) -> bool:
        return self.decision == REJECT

    @property
    def p_value(self) -> Optional[float]:
        """Smallest governed p-value (``None`` for an exact fit)."""
        ps = [p for p in self.p_values.values() if p is not None]
        return min(ps) if ps else None


def _decide(p_values: dict, alpha_used: float) -> str:
    return REJECT if any(p is not None and p < alpha_used for p in p_values.values()) else NOT_REJECT


# -- Test 1: accuracy ------------------------------------------------------------

def accuracy_test(sample, alpha: float = ALPHA) -> TestResult:
    """Zero-bias test: regress ``d`` on centred ``x``; the intercept is the mean difference."""
    x, y = _check_series(sample.x, sample.y)
    d = y - x
    xc = x - x.mean()
    bias = float(d.mean())
    if np.ptp(xc) == 0:
        raise NumericalError("degenerate-predictor", "all reference values are equal")
    fit = ols_fit(xc, d)
    estimates = {"bias": bias, "slope": fit.slope}
    try:
        p = fit.p_intercept
    except NumericalError as exc:
        if exc.code != "degenerate-zero-residual":
            raise
        # Constant nonzero difference with no scatter: bias is exact.
        return TestResult(
            test_kind="accuracy",
            statistics={"t_intercept": fit.t_intercept},
            p_values={"intercept": None},
            alpha_used=alpha,
            decision=REJECT,
            estimates=estimates,
            exact=True,
        )
    p_values = {"intercept": p}
    return TestResult(
        test_kind="accuracy",
        statistics={"t_intercept": fit.t_intercept},
        p_values=p_values,
        alpha_used=alpha,
        decision=_decide(p_values, alpha),
        estimates=estimates,
    )


# -- Test 2: precision -----------------------------------------------------------

def precision_test(sample, alpha: float = ALPHA) -> TestResult:
    """Equal-error-variance test: slope of ``d`` regressed on ``s``."""
    x, y = _check_series(sample.x, sample.y)
    d, s = y - x, x + y
    fit = ols_fit(s, d)
    m = moments(sample)
    # cov(d, s) = s_yy - s_xx identically; a mismatch means corrupted input.
    cov_ds = float((d - d.mean()) @ (s - s.mean())) / (len(d) - 1)
    expected = m.s_yy - m.s_xx
    if abs(cov_ds - expected) > 1e-9 * max(m.s_yy + m.s_xx, 1e-300):
        raise NumericalError("identity-violated", f"cov(d, s) = {cov_ds!r} but s_yy - s_xx = {expected!r}")
    try:
        p = fit.p_slope
        exact = False
    except NumericalError as exc:
        if exc.code != "degenerate-zero-residual":
            raise
        p, exact = None, True
    p_values = {"slope": p}
    return TestResult(
        test_kind="precision",
        statistics={"t_slope": fit.t_slope},
        p_values=p_values,
        alpha_used=alpha,
        decision=REJECT if exact else _decide(p_values, alpha),
        estimates={"slope": fit.slope, "intercept": fit.intercept},
        exact=exact,
    )


# -- Error-variance ratio --------------------------------------------------------

def lambda_grubbs(sample) -> float:
    """Grubbs moment estimate of ``V[delta] / V[epsilon]`` from single pairs.

    ``s_yy - s_xy`` estimates the candidate's error variance and
    ``s_xx - s_xy`` the reference's.
    """
    m = moments(sample)
    var_y_err = m.s_yy - m.s_xy
    var_x_err = m.s_xx - m.s_xy
    if var_y_err <= 0 or var_x_err <= 0:
        raise NumericalError(
            "lambda-indeterminate",
            f"non-positive error variance estimate (candidate {var_y_err:.6g}, reference {var_x_err:.6g})",
        )
    return var_y_err / var_x_err


def _pooled_within(reps) -> float:
    ss = sum(float(((r - r.mean()) ** 2).sum()) for r in reps)
    dof = sum(len(r) - 1 for r in reps)
    return ss / dof


def lambda_replicates(sample) -> float:
    """Ratio of pooled within-subject replicate variances, candidate over reference."""
    if not getattr(sample, "replicated", False):
        raise DataError("no-replicates", "sample carries no replicate measurements")
    for reps in (sample.x_reps, sample.y_reps):
        if any(len(r) < 2 for r in reps):
            raise DataError("no-replicates", "every subject needs at least 2 replicates")
    var_y_err = _pooled_within(sample.y_reps)
    var_x_err = _pooled_within(sample.x_reps)
    if var_x_err <= 0 or var_y_err <= 0:
        raise NumericalError(
            "lambda-indeterminate",
            f"zero within-subject variance (candidate {var_y_err:.6g}, reference {var_x_err:.6g})",
        )
    return var_y_err / var_x_err


# -- Test 3: bisector agreement ----------------------------------------------------

@dataclass(frozen=True)
class DemingFit:
    slope: float
    intercept: float
    lambda_: float
    se_slope: float
    se_intercept: float
    p_slope_eq_1: float
    p_intercept_eq_0: float
    df: int
    n: int

    @property
    def t_slope(self) -> float:
        return _t_null(self.slope, 1.0, self.se_slope)

    @property
    def t_intercept(self) -> float:
        return _t_null(self.intercept, 0.0, self.se_intercept)


def deming_slope(s_xx, s_yy, s_xy, lam):
    """Deming slope from second moments; vectorizes over numpy arrays.

    For ``u = s_yy - lam * s_xx < 0`` the textbook form ``(u + r) / (2 s_xy)``
    cancels catastrophically, so the conjugate ``2 lam s_xy / (r - u)`` is used.
    """
    s_xx, s_yy, s_xy, lam = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s_xx, s_yy, s_xy, lam)))
    u = s_yy - lam * s_xx
    r = np.sqrt(u * u + 4.0 * lam * s_xy * s_xy)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(u >= 0, (u + r) / (2.0 * s_xy), 2.0 * lam * s_xy / (r - u))
    return b[()] if b.ndim == 0 else b


def _deming_point(x, y, lam):
    n = len(x)
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    s_xx = float(dx @ dx) / (n - 1)
    s_yy = float(dy @ dy) / (n - 1)
    s_xy = float(dx @ dy) / (n - 1)
    if s_xy == 0:
        raise NumericalError("deming-degenerate", "zero covariance between techniques")
    b = float(deming_slope(s_xx, s_yy, s_xy, lam))
    return b, float(my - b * mx)


def _t_null(est, null, se):
    dev = est - null
    if se > 0:
        return dev / se
    return 0.0 if dev == 0 else math.copysign(math.inf, dev)


def deming_fit(sample, lam: float) -> DemingFit:
    """Deming regression of ``y`` on ``x`` with leave-one-out jackknife standard errors."""
    x, y = _check_series(sample.x, sample.y)
    n = len(x)
    if n < 4:
        raise DataError("too-few-subjects", f"Deming jackknife needs n >= 4, got {n}", n=n)
    if not (lam > 0 and math.isfinite(lam)):
        raise NumericalError("lambda-indeterminate", f"lambda must be positive and finite, got {lam}")
    slope, intercept = _deming_point(x, y, lam)

    # Leave-one-out moments by downdating centred sums, then all slopes at once.
    xc, yc = x - x.mean(), y - y.mean()
    sxx, syy, sxy = float(xc @ xc), float(yc @ yc), float(xc @ yc)
    m = n - 1
    mx_i = -xc / m
    my_i = -yc / m
    cxx = ((sxx - xc * xc) - m * mx_i * mx_i) / (m - 1)
    cyy = ((syy - yc * yc) - m * my_i * my_i) / (m - 1)
    cxy = ((sxy - xc * yc) - m * mx_i * my_i) / (m - 1)
    if np.any(cxy == 0):
        raise NumericalError("deming-degenerate", "a leave-one-out subsample has zero covariance")
    b_i = deming_slope(cxx, cyy, cxy, lam)
    a_i = (my_i + y.mean()) - b_i * (mx_i + x.mean())
    # Downdated sums lose precision on large offsets; fall back to direct refits.
    if not (np.all(np.isfinite(b_i)) and np.all(cxx >= 0) and np.all(cyy >= 0)):
        pairs = [_deming_point(np.delete(x, i), np.delete(y, i), lam) for i in range(n)]
        b_i = np.array([p[0] for p in pairs])
        a_i = np.array([p[1] for p in pairs])
    factor = (n - 1) / n
    se_slope = math.sqrt(factor * float(((b_i - b_i.mean()) ** 2).sum()))
    se_intercept = math.sqrt(factor * float(((a_i - a_i.mean()) ** 2).sum()))
    df = n - 2
    return DemingFit(
        slope=slope,
        intercept=intercept,
        lambda_=float(lam),
        se_slope=se_slope,
        se_intercept=se_intercept,
        p_slope_eq_1=t_tail(_t_null(slope, 1.0, se_slope), df),
        p_intercept_eq_0=t_tail(_t_null(intercept, 0.0, se_intercept), df),
        df=df,
        n=n,
    )


def bisector_test(fit: DemingFit, alpha: float = ALPHA) -> TestResult:
    """Reject when slope != 1 or intercept != 0, each at Bonferroni level ``alpha / 2``."""
    alpha_used = alpha / 2.0
    p_values = {"slope": fit.p_slope_eq_1, "intercept": fit.p_intercept_eq_0}
    return TestResult(
        test_kind="bisector",
        statistics={"t_slope": fit.t_slope, "t_intercept": fit.t_intercept},
        p_values=p_values,
        alpha_used=alpha_used,
        decision=_decide(p_values, alpha_used),
        estimates={"slope": fit.slope, "intercept": fit.intercept, "lambda": fit.lambda_},
    )


def calibration_scale(sample) -> float:
    """Multiplier on ``y`` that makes the mean difference exactly zero."""
    mean_y = float(np.mean(sample.y))
    if mean_y == 0:
        raise NumericalError("zero-mean-candidate", "candidate mean is zero")
    return float(np.mean(sample.x)) / mean_y


# -- Verdict -----------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: str
    annotations: tuple = ()


def concordance_holds(prec: TestResult, bis: TestResult) -> bool:
    """Analytical part of "equivalent once the bias is discounted".

    Precision must not reject.  For the bisector only the slope is judged: a
    nonzero Deming intercept is what a constant bias produces, and the bias
    is judged by the accuracy test instead.
    """
    if prec.rejected:
        return False
    p_slope = bis.p_values.get("slope")
    return p_slope is not None and p_slope >= bis.alpha_used


def nested_verdict(acc: TestResult, prec: TestResult, bis: TestResult, lam: float, graphical) -> EquivalenceVerdict:
    """Combine the three tests into one verdict.

    ``graphical`` needs ``precision_admits_horizontal`` and
    ``bisector_admits_unit_slope`` (both with translation by the bias).
    ``lam`` is the ratio the bisector fit used; it does not change the
    verdict and is accepted so a report can be re-judged from its contents.
    """
    annotations = []
    if prec.rejected:
        # Unequal error variances make lambda, and so the Deming fit, suspect.
        annotations.append("unreliable-lambda")
    if not (acc.rejected or prec.rejected or bis.rejected):
        verdict = STRICT
    elif (
        acc.rejected
        and concordance_holds(prec, bis)
        and graphical.precision_admits_horizontal
        and graphical.bisector_admits_unit_slope
    ):
        verdict = BIASED_CONCORDANT
    else:
        verdict = NOT_EQUIVALENT
    return EquivalenceVerdict(verdict=verdict, annotations=tuple(annotations))
