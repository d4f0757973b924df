"""Full analysis pipeline and the versioned JSON report.

:func:`analyze` runs the three tests, the bootstrap graphics and the limits
of agreement on one sample and returns an :class:`Analysis` holding the
serializable :class:`EquivalenceReport` plus the band and ellipse objects the
figure needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .baseline import LimitsOfAgreement, limits_of_agreement
from .errors import NumericalError
from .resampling import (
    GENERATOR,
    BootstrapBand,
    ConfidenceEllipse,
    GraphicalDecisions,
    boot_band,
    boot_bias_ci,
    boot_ellipse,
    graphical_decisions,
    make_plan,
)
from .structural import (
    ALPHA,
    TestResult,
    accuracy_test,
    bisector_test,
    calibration_scale,
    deming_fit,
    lambda_grubbs,
    lambda_replicates,
    nested_verdict,
    precision_test,
)

__all__ = [
    "SCHEMA_VERSION",
    "EquivalenceReport",
    "Analysis",
    "analyze",
    "render_report",
    "load_report",
]

SCHEMA_VERSION = "1.0"
SIGNIFICANT_DIGITS = 6

SMALL_SAMPLE = 40
RECOMMENDED_SAMPLE = 100

PLANNING_NOTE = (
    "non-rejection is not proof of equivalence; claiming equivalence with adequate power "
    "requires a sample size planned before data collection"
)


@dataclass(frozen=True)
class EquivalenceReport:
    input: dict
    alpha: float
    lambda_: float
    lambda_source: str
    accuracy: TestResult
    precision: TestResult
    bisector: TestResult
    graphical: GraphicalDecisions
    limits_of_agreement: LimitsOfAgreement
    calibration_scale: Optional[float]
    verdict: str
    annotations: tuple
    warnings: tuple
    notes: tuple
    bootstrap: dict
    schema_version: str = SCHEMA_VERSION

    def rounded(self) -> "EquivalenceReport":
        """The report exactly as it reads back from its JSON form."""
        return load_report(render_report(self))


@dataclass(frozen=True, eq=False)
class Analysis:
    report: EquivalenceReport
    precision_band: BootstrapBand
    bisector_band: BootstrapBand
    ellipse: Optional[ConfidenceEllipse]
    sample: object


def _choose_lambda(sample, override, warnings):
    if override is not None:
        return float(override), "override"
    estimator, source = (lambda_replicates, "replicates") if sample.replicated else (lambda_grubbs, "grubbs")
    try:
        return estimator(sample), source
    except NumericalError as exc:
        if exc.code != "lambda-indeterminate":
            raise
        warnings.append(f"lambda-fallback: {exc}; using lambda = 1")
        return 1.0, "fallback-1"


def analyze(
    sample,
    *,
    alpha: float = ALPHA,
    B: int = 2000,
    grid_size: int = 100,
    seed: int,
    lambda_override: Optional[float] = None,
    workers: int = 1,
    input_info: Optional[dict] = None,
) -> Analysis:
    """Run every test and bootstrap decision on ``sample``."""
    warnings = []
    notes = [PLANNING_NOTE]
    if sample.n < SMALL_SAMPLE:
        warnings.append(f"small-sample: n = {sample.n} < {SMALL_SAMPLE}")
    elif sample.n < RECOMMENDED_SAMPLE:
        warnings.append(f"sample-below-recommended: n = {sample.n} < {RECOMMENDED_SAMPLE}")
    info = {
        "name": sample.name,
        "n": sample.n,
        "unit_label": sample.unit_label,
        "replicated": sample.replicated,
    }
    info.update(input_info or {})
    if info.get("surrogate"):
        warnings.append("surrogate-data: simulated stand-in for the published dataset")

    acc = accuracy_test(sample, alpha)
    prec = precision_test(sample, alpha)
    lam, lam_source = _choose_lambda(sample, lambda_override, warnings)
    fit = deming_fit(sample, lam)
    bis = bisector_test(fit, alpha)

    # A Grubbs ratio forces the Deming slope to exactly 1, so re-estimating it per
    # resample would collapse the band to pure translations; keep it fixed.
    lambda_mode = "replicates" if lam_source == "replicates" else lam
    plan = make_plan(sample.n, B, seed)
    bias_ci = boot_bias_ci(sample, plan, workers=workers)
    pband = boot_band(sample, "precision", plan, grid_size, workers=workers)
    try:
        bband = boot_band(sample, "bisector", plan, grid_size, lambda_mode=lambda_mode,
                          point=(fit.intercept, fit.slope), workers=workers)
    except NumericalError as exc:
        if exc.code != "bootstrap-unstable" or not isinstance(lambda_mode, str):
            raise
        warnings.append(f"lambda-frozen: {exc}; bootstrap keeps lambda = {lam:.6g}")
        lambda_mode = lam
        bband = boot_band(sample, "bisector", plan, grid_size, lambda_mode=lambda_mode,
                          point=(fit.intercept, fit.slope), workers=workers)
    try:
        ellipse = boot_ellipse(sample, plan, lambda_mode, workers=workers)
    except NumericalError as exc:
        if exc.code != "ellipse-degenerate":
            raise
        warnings.append(f"ellipse-degenerate: {exc}")
        ellipse = None
    graphical = graphical_decisions(bias_ci, pband, bband, ellipse, bias=acc.estimates["bias"])
    verdict = nested_verdict(acc, prec, bis, lam, graphical)
    if verdict.annotations:
        bis = replace(bis, annotations=verdict.annotations)

    try:
        scale = calibration_scale(sample)
    except NumericalError:
        scale = None

    report = EquivalenceReport(
        input=info,
        alpha=alpha,
        lambda_=lam,
        lambda_source=lam_source,
        accuracy=acc,
        precision=prec,
        bisector=bis,
        graphical=graphical,
        limits_of_agreement=limits_of_agreement(sample),
        calibration_scale=scale,
        verdict=verdict.verdict,
        annotations=verdict.annotations,
        warnings=tuple(warnings),
        notes=tuple(notes),
        bootstrap={"seed": seed, "B": B, "grid_size": grid_size, "generator": GENERATOR},
    )
    return Analysis(report=report, precision_band=pband, bisector_band=bband, ellipse=ellipse, sample=sample)


# -- JSON --------------------------------------------------------------------------

def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{SIGNIFICANT_DIGITS}g}")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _num(obj)


def _test_dict(t: TestResult) -> dict:
    return {
        "test_kind": t.test_kind,
        "decision": t.decision,
        "alpha_used": t.alpha_used,
        "p_values": t.p_values,
        "statistics": t.statistics,
        "estimates": t.estimates,
        "exact": t.exact,
        "annotations": list(t.annotations),
    }


def render_report(report: EquivalenceReport) -> str:
    """Serialize to JSON with a fixed key order and 6 significant digits."""
    loa = report.limits_of_agreement
    doc = {
        "schema_version": report.schema_version,
        "input": report.input,
        "verdict": report.verdict,
        "annotations": list(report.annotations),
        "alpha": report.alpha,
        "lambda": report.lambda_,
        "lambda_source": report.lambda_source,
        "tests": {
            "accuracy": _test_dict(report.accuracy),
            "precision": _test_dict(report.precision),
            "bisector": _test_dict(report.bisector),
        },
        "graphical": asdict(report.graphical),
        "limits_of_agreement": asdict(loa),
        "calibration_scale": report.calibration_scale,
        "warnings": list(report.warnings),
        "notes": list(report.notes),
        "bootstrap": report.bootstrap,
    }
    return json.dumps(_clean(doc), indent=2, ensure_ascii=False) + "\n"


def _test_from(d: dict) -> TestResult:
    return TestResult(
        test_kind=d["test_kind"],
        statistics=dict(d["statistics"]),
        p_values=dict(d["p_values"]),
        alpha_used=d["alpha_used"],
        decision=d["decision"],
        estimates=dict(d["estimates"]),
        exact=d["exact"],
        annotations=tuple(d["annotations"]),
    )


def load_report(text: str) -> EquivalenceReport:
    """Parse a JSON report produced by :func:`render_report`."""
    doc = json.loads(text)
    g = dict(doc["graphical"])
    g["bias_ci"] = tuple(g["bias_ci"])
    loa = dict(doc["limits_of_agreement"])
    loa["ci_lower_limit"] = tuple(loa["ci_lower_limit"])
    loa["ci_upper_limit"] = tuple(loa["ci_upper_limit"])
    tests = doc["tests"]
    return EquivalenceReport(
        input=doc["input"],
        alpha=doc["alpha"],
        lambda_=doc["lambda"],
        lambda_source=doc["lambda_source"],
        accuracy=_test_from(tests["accuracy"]),
        precision=_test_from(tests["precision"]),
        bisector=_test_from(tests["bisector"]),
        graphical=GraphicalDecisions(**g),
        limits_of_agreement=LimitsOfAgreement(**loa),
        calibration_scale=doc["calibration_scale"],
        verdict=doc["verdict"],
        annotations=tuple(doc["annotations"]),
        warnings=tuple(doc["warnings"]),
        notes=tuple(doc["notes"]),
        bootstrap=doc["bootstrap"],
        schema_version=doc["schema_version"],
    )
