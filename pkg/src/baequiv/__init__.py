"""Accuracy, precision and bisector-agreement tests for paired measurement techniques."""

from .baseline import LimitsOfAgreement, limits_of_agreement
from .core import Moments, OlsFit, moments, ols_fit, t_tail
from .data import ColumnMap, PairedSample, load_fixture, parse_csv, transform, write_csv
from .errors import AgreementError, ConfigError, DataError, NumericalError
from .figure import figure_for, render_figure
from .report import Analysis, EquivalenceReport, analyze, load_report, render_report
from .resampling import (
    BootstrapBand,
    ConfidenceEllipse,
    band_admits_horizontal,
    band_admits_unit_slope,
    boot_band,
    boot_bias_ci,
    boot_ellipse,
    make_plan,
)
from .simulate import SimulationConfig, simulate
from .structural import (
    DemingFit,
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

__version__ = "0.1.0"
