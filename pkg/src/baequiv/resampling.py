"""Percentile bootstrap: bias interval, regression bands, Deming ellipse.

All randomness comes from a :class:`ResamplePlan`, generated up front and
sequentially from one seeded PCG64 stream.  Replicates may then be evaluated
in any order (``workers > 1`` uses threads); results are always assembled in
replicate order, so output never depends on the worker count.

A resample whose fit is undefined (constant predictor, indeterminate lambda,
zero covariance) is replaced by the next unused row of the plan's reserve
stream, taken in replicate order.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, NumericalError
from .structural import deming_slope

__all__ = [
    "GENERATOR",
    "CHI2_2DF_95",
    "ResamplePlan",
    "BootstrapBand",
    "ConfidenceEllipse",
    "GraphicalDecisions",
    "make_plan",
    "boot_bias_ci",
    "boot_band",
    "boot_deming_pairs",
    "boot_ellipse",
    "band_admits_horizontal",
    "band_admits_unit_slope",
    "graphical_decisions",
]

GENERATOR = f"numpy.random.PCG64 (numpy {np.__version__})"

# Closed form of the chi-square(2) quantile: -2 ln(1 - level).
CHI2_2DF_95 = -2.0 * math.log(0.05)

LEVEL = 0.95
MAX_DEGENERATE_FRACTION = 0.10
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class ResamplePlan:
    n: int
    B: int
    seed: int
    indices: np.ndarray
    reserve: np.ndarray
    generator: str = GENERATOR


def make_plan(n: int, B: int, seed: int, reserve: Optional[int] = None) -> ResamplePlan:
    """Draw ``B`` resamples of ``n`` subject indices, then a reserve block."""
    if not (isinstance(n, (int, np.integer)) and n >= 3):
        raise ConfigError("bad-bootstrap-config", f"n must be an integer >= 3, got {n!r}")
    if not (isinstance(B, (int, np.integer)) and B >= 100):
        raise ConfigError("bad-bootstrap-config", f"B must be an integer >= 100, got {B!r}")
    if not (isinstance(seed, (int, np.integer)) and 0 <= seed < 2**64):
        raise ConfigError("bad-bootstrap-config", f"seed must be an integer in [0, 2**64), got {seed!r}")
    if reserve is None:
        reserve = max(10, B // 5)
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    indices = rng.integers(0, n, size=(B, n), dtype=np.int64)
    spare = rng.integers(0, n, size=(reserve, n), dtype=np.int64)
    indices.setflags(write=False)
    spare.setflags(write=False)
    return ResamplePlan(n=int(n), B=int(B), seed=int(seed), indices=indices, reserve=spare)


def _check_plan(sample, plan: ResamplePlan):
    if plan.n != sample.n:
        raise ConfigError("bad-bootstrap-config", f"plan is for n={plan.n}, sample has n={sample.n}")


def _run(plan: ResamplePlan, stat, workers: int = 1):
    """Evaluate ``stat`` on every plan row, redrawing degenerate rows.

    ``stat(idx_block) -> (values, ok)`` with ``values`` shaped ``(k, ...)``.
    """
    rows = plan.indices
    starts = range(0, plan.B, _CHUNK)
    blocks = [rows[s:s + _CHUNK] for s in starts]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(stat, blocks))
    else:
        parts = [stat(b) for b in blocks]
    values = np.concatenate([p[0] for p in parts])
    ok = np.concatenate([p[1] for p in parts])

    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return values
    limit = MAX_DEGENERATE_FRACTION * plan.B
    if bad.size > limit:
        raise NumericalError("bootstrap-unstable", f"{bad.size} of {plan.B} resamples are degenerate")
    spare_values, spare_ok = stat(plan.reserve)
    usable = np.flatnonzero(spare_ok)
    if usable.size < bad.size:
        raise NumericalError("bootstrap-unstable", "reserve stream exhausted by degenerate resamples")
    # Reserve rows are consumed in order; the ones skipped count as degenerate too.
    skipped = int(usable[bad.size - 1]) + 1 - bad.size
    if bad.size + skipped > limit:
        raise NumericalError("bootstrap-unstable", f"{bad.size + skipped} degenerate draws exceed 10% of B={plan.B}")
    values = values.copy()
    values[bad] = spare_values[usable[: bad.size]]
    return values


def _percentiles(values: np.ndarray, level: float = LEVEL):
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(values, [tail, 100.0 - tail], axis=0)
    return lo, hi


def _block_moments(x: np.ndarray, y: np.ndarray, idx: np.ndarray):
    xs, ys = x[idx], y[idx]
    n = idx.shape[1]
    mx, my = xs.mean(axis=1), ys.mean(axis=1)
    dx, dy = xs - mx[:, None], ys - my[:, None]
    s_xx = np.einsum("ij,ij->i", dx, dx) / (n - 1)
    s_yy = np.einsum("ij,ij->i", dy, dy) / (n - 1)
    s_xy = np.einsum("ij,ij->i", dx, dy) / (n - 1)
    return mx, my, s_xx, s_yy, s_xy


# -- Accuracy ----------------------------------------------------------------------

def boot_bias_ci(sample, plan: ResamplePlan, level: float = LEVEL, workers: int = 1):
    """Percentile interval of the accuracy intercept (the mean difference)."""
    _check_plan(sample, plan)
    x = np.asarray(sample.x)
    d = np.asarray(sample.y) - x

    def stat(idx):
        xs = x[idx]
        ok = np.ptp(xs, axis=1) > 0
        return d[idx].mean(axis=1), ok

    values = _run(plan, stat, workers)
    lo, hi = _percentiles(values, level)
    return float(lo), float(hi)


# -- Bands ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BootstrapBand:
    """Pointwise percentile envelope over resampled regression lines.

    Both kinds live in difference space: ``precision`` plots ``y - x``
    against ``x + y``; ``bisector`` plots predicted ``y`` minus ``x``
    against ``x``.
    """

    kind: str
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    estimate: np.ndarray
    level: float = LEVEL

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


LambdaMode = Union[str, float]


def _lambda_source(sample, lambda_mode: LambdaMode):
    """Return ``f(idx, s_xx, s_yy, s_xy) -> (lam, ok)`` for the chosen policy."""
    if lambda_mode == "grubbs":
        def lam(idx, s_xx, s_yy, s_xy):
            num, den = s_yy - s_xy, s_xx - s_xy
            ok = (num > 0) & (den > 0)
            return np.where(ok, num / np.where(den > 0, den, 1.0), 1.0), ok
        return lam
    if lambda_mode == "replicates":
        if not sample.replicated:
            raise ConfigError("bad-bootstrap-config", "replicate lambda needs a replicated sample")
        ss_x = np.array([((r - r.mean()) ** 2).sum() for r in sample.x_reps])
        ss_y = np.array([((r - r.mean()) ** 2).sum() for r in sample.y_reps])
        df_x = np.array([len(r) - 1 for r in sample.x_reps], dtype=float)
        df_y = np.array([len(r) - 1 for r in sample.y_reps], dtype=float)

        def lam(idx, s_xx, s_yy, s_xy):
            vx = ss_x[idx].sum(axis=1) / df_x[idx].sum(axis=1)
            vy = ss_y[idx].sum(axis=1) / df_y[idx].sum(axis=1)
            ok = (vx > 0) & (vy > 0)
            return np.where(ok, vy / np.where(vx > 0, vx, 1.0), 1.0), ok
        return lam
    fixed = float(lambda_mode)
    if not (fixed > 0 and math.isfinite(fixed)):
        raise ConfigError("bad-bootstrap-config", f"lambda must be positive, got {lambda_mode!r}")

    def lam(idx, s_xx, s_yy, s_xy):
        return np.full(len(idx), fixed), np.ones(len(idx), dtype=bool)
    return lam


def boot_deming_pairs(sample, plan: ResamplePlan, lambda_mode: LambdaMode = "grubbs", workers: int = 1) -> np.ndarray:
    """Resampled Deming ``(intercept, slope)`` pairs, shape ``(B, 2)``.

    ``lambda_mode`` is ``"grubbs"`` or ``"replicates"`` (re-estimated in
    every resample) or a fixed positive number.
    """
    _check_plan(sample, plan)
    x, y = np.asarray(sample.x), np.asarray(sample.y)
    lam_of = _lambda_source(sample, lambda_mode)

    def stat(idx):
        mx, my, s_xx, s_yy, s_xy = _block_moments(x, y, idx)
        lam, ok = lam_of(idx, s_xx, s_yy, s_xy)
        ok = ok & (s_xy != 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            b = deming_slope(s_xx, s_yy, np.where(ok, s_xy, 1.0), lam)
        a = my - b * mx
        ok = ok & np.isfinite(a) & np.isfinite(b)
        return np.column_stack([a, b]), ok

    return _run(plan, stat, workers)


def _grid(values: np.ndarray, grid_size: int) -> np.ndarray:
    if not (isinstance(grid_size, (int, np.integer)) and grid_size >= 20):
        raise ConfigError("bad-bootstrap-config", f"grid_size must be an integer >= 20, got {grid_size!r}")
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi > lo:
        raise NumericalError("degenerate-predictor", "abscissa has zero range")
    g = np.linspace(lo, hi, grid_size)
    g[-1] = hi
    return g


def boot_band(
    sample,
    kind: str,
    plan: ResamplePlan,
    grid_size: int = 100,
    lambda_mode: LambdaMode = "grubbs",
    point: Optional[tuple] = None,
    workers: int = 1,
    level: float = LEVEL,
) -> BootstrapBand:
    """Pointwise percentile band for the precision or bisector regression.

    ``point`` is the full-sample ``(intercept, slope)`` drawn as the
    estimate line; for ``bisector`` it is the Deming line of ``y`` on ``x``.
    """
    _check_plan(sample, plan)
    x, y = np.asarray(sample.x), np.asarray(sample.y)
    if kind == "precision":
        d, s = y - x, x + y
        grid = _grid(s, grid_size)

        def stat(idx):
            ds, ss = d[idx], s[idx]
            ms, md = ss.mean(axis=1), ds.mean(axis=1)
            cs = ss - ms[:, None]
            vs = np.einsum("ij,ij->i", cs, cs)
            ok = vs > 0
            slope = np.einsum("ij,ij->i", cs, ds - md[:, None]) / np.where(ok, vs, 1.0)
            return np.column_stack([md - slope * ms, slope]), ok

        pairs = _run(plan, stat, workers)
        lines = pairs[:, :1] + pairs[:, 1:] * grid[None, :]
        if point is None:
            sc = s - s.mean()
            b = float(sc @ (d - d.mean())) / float(sc @ sc)
            point = (float(d.mean() - b * s.mean()), b)
        estimate = point[0] + point[1] * grid
    elif kind == "bisector":
        grid = _grid(x, grid_size)
        pairs = boot_deming_pairs(sample, plan, lambda_mode, workers)
        lines = pairs[:, :1] + (pairs[:, 1:] - 1.0) * grid[None, :]
        if point is None:
            point = (float(np.median(pairs[:, 0])), float(np.median(pairs[:, 1])))
        estimate = point[0] + (point[1] - 1.0) * grid
    else:
        raise ConfigError("bad-bootstrap-config", f"unknown band kind {kind!r}")
    lower, upper = _percentiles(lines, level)
    return BootstrapBand(kind=kind, grid=grid, lower=lower, upper=upper, estimate=estimate, level=level)


# -- Admission geometry -----------------------------------------------------------------

def _interval(value) -> tuple:
    if np.ndim(value) == 0:
        v = float(value)
        return v, v
    lo, hi = value
    return float(lo), float(hi)


def _admissible(band: BootstrapBand):
    """Constants ``c`` with ``lower[i] <= c <= upper[i]`` at every grid point."""
    lo, hi = float(np.max(band.lower)), float(np.min(band.upper))
    scale = max(1.0, float(np.max(np.abs(band.lower))), float(np.max(np.abs(band.upper))))
    return lo, hi, 1e-12 * scale


def band_admits_horizontal(band: BootstrapBand, translation=None) -> bool:
    """Whether some horizontal line fits inside the band.

    With ``translation`` (a value or an interval, normally the bias
    interval) the line's level must also lie in that interval.
    """
    lo, hi, tol = _admissible(band)
    if translation is not None:
        t_lo, t_hi = _interval(translation)
        lo, hi = max(lo, t_lo), min(hi, t_hi)
    return lo <= hi + tol


def band_admits_unit_slope(band: BootstrapBand, bias_ci) -> bool:
    """Whether a line parallel to the bisector, shifted by some ``c`` in ``bias_ci``, fits.

    ``band`` must be a bisector band in difference space, where such a line is
    the constant ``c``.  Pass ``(0, 0)`` for the untranslated bisector.
    """
    if band.kind != "bisector":
        raise ConfigError("bad-bootstrap-config", "unit-slope admission needs a bisector band")
    return band_admits_horizontal(band, bias_ci)


# -- Ellipse ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConfidenceEllipse:
    """Covariance ellipse of resampled Deming ``(intercept, slope)`` pairs."""

    center: np.ndarray
    covariance: np.ndarray
    level: float = LEVEL
    quantile: float = CHI2_2DF_95

    def mahalanobis2(self, point) -> float:
        diff = np.asarray(point, dtype=float) - self.center
        return float(diff @ np.linalg.solve(self.covariance, diff))

    def contains(self, point) -> bool:
        return self.mahalanobis2(point) <= self.quantile

    def boundary(self, k: int = 120) -> np.ndarray:
        """``k`` points on the level contour, as ``(intercept, slope)`` rows."""
        vals, vecs = np.linalg.eigh(self.covariance)
        theta = np.linspace(0.0, 2.0 * math.pi, k, endpoint=False)
        circle = np.column_stack([np.cos(theta), np.sin(theta)])
        return self.center + (circle * np.sqrt(vals * self.quantile)) @ vecs.T


def boot_ellipse(sample, plan: ResamplePlan, lambda_mode: LambdaMode = "grubbs", workers: int = 1) -> ConfidenceEllipse:
    if plan.B < 500:
        warnings.warn(f"ellipse from only B={plan.B} resamples; 500 or more recommended", stacklevel=2)
    pairs = boot_deming_pairs(sample, plan, lambda_mode, workers)
    center = pairs.mean(axis=0)
    cov = np.cov(pairs, rowvar=False)
    cov = 0.5 * (cov + cov.T)
    vals = np.linalg.eigvalsh(cov)
    if not (vals[0] > 1e-12 * max(vals[1], 1e-300)):
        raise NumericalError("ellipse-degenerate", "bootstrap (intercept, slope) pairs are collinear")
    center.setflags(write=False)
    cov.setflags(write=False)
    return ConfidenceEllipse(center=center, covariance=cov)


# -- Decisions ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphicalDecisions:
    """Bootstrap-based decisions; all recomputable from the band objects.

    ``precision_admits_horizontal`` and ``bisector_admits_unit_slope`` are the
    translated checks (line level restricted to ``bias_ci``); the
    ``*_untranslated`` fields use any level (precision) or the bisector
    itself (bisector).
    """

    accuracy_origin_inside: bool
    precision_admits_horizontal: bool
    bisector_admits_unit_slope: bool
    bias_ci: tuple
    precision_admits_horizontal_untranslated: bool = False
    bisector_admits_unit_slope_untranslated: bool = False
    ellipse_contains_null: Optional[bool] = None
    ellipse_contains_translated_null: Optional[bool] = None


def graphical_decisions(bias_ci, precision_band: BootstrapBand, bisector_band: BootstrapBand,
                        ellipse: Optional[ConfidenceEllipse] = None,
                        bias: Optional[float] = None) -> GraphicalDecisions:
    """``bias`` (default: interval midpoint) is the intercept of the translated null ``(bias, 1)``."""
    lo, hi = _interval(bias_ci)
    bias_mid = 0.5 * (lo + hi) if bias is None else float(bias)
    return GraphicalDecisions(
        accuracy_origin_inside=bool(lo <= 0.0 <= hi),
        precision_admits_horizontal=band_admits_horizontal(precision_band, (lo, hi)),
        bisector_admits_unit_slope=band_admits_unit_slope(bisector_band, (lo, hi)),
        bias_ci=(lo, hi),
        precision_admits_horizontal_untranslated=band_admits_horizontal(precision_band),
        bisector_admits_unit_slope_untranslated=band_admits_unit_slope(bisector_band, 0.0),
        ellipse_contains_null=None if ellipse is None else ellipse.contains((0.0, 1.0)),
        ellipse_contains_translated_null=None if ellipse is None else ellipse.contains((bias_mid, 1.0)),
    )
