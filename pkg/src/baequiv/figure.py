"""Three-panel SVG figure for an analysis.

Panel 1 shows the bias with its bootstrap interval against the origin;
panel 2 the differences against the sums with the precision band; panel 3
the candidate against the reference with the Deming band, the bisector and
an inset of the (intercept, slope) confidence ellipse.

Elements that tests inspect carry stable ``id`` attributes.  Output depends
only on the inputs, so the same analysis always renders to the same bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Mapping, Optional

import numpy as np

from .errors import NumericalError

__all__ = ["render_figure", "figure_for", "PANEL_SIZE"]

PANEL_SIZE = 300.0
MARGIN = 40.0
GAP = 30.0
INSET = 110.0

BAND_FILL = "#c6dbef"
LINE = "#08519c"
NULL = "#cb181d"
POINT = "#252525"

SVG_NS = "http://www.w3.org/2000/svg"


def _f(v: float) -> str:
    return f"{float(v):.2f}"


class _Axes:
    """Maps data coordinates into one panel's pixel box (y axis points down)."""

    def __init__(self, left, top, width, height, xlim, ylim):
        self.left, self.top, self.width, self.height = left, top, width, height
        self.x0, self.x1 = _pad(*xlim)
        self.y0, self.y1 = _pad(*ylim)

    def px(self, x):
        return self.left + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y):
        return self.top + self.height - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * self.height

    def points(self, xs, ys) -> str:
        return " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(np.atleast_1d(self.px(xs)), np.atleast_1d(self.py(ys))))


def _pad(lo, hi, frac=0.06):
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        half = max(abs(lo), 1.0) * 0.5
        return lo - half, hi + half
    span = hi - lo
    return lo - frac * span, hi + frac * span


def _sub(parent, tag, **attrs):
    # Keyword names map to attributes: stroke_width -> stroke-width.
    clean = {k.rstrip("_").replace("_", "-"): str(v) for k, v in attrs.items()}
    return ET.SubElement(parent, tag, clean)


def _frame(g, ax: _Axes, title: str, xlabel: str, ylabel: str):
    _sub(g, "rect", x=_f(ax.left), y=_f(ax.top), width=_f(ax.width), height=_f(ax.height),
         fill="none", stroke="#969696", stroke_width="1")
    t = _sub(g, "text", x=_f(ax.left + ax.width / 2), y=_f(ax.top - 12), text_anchor="middle", font_size="13")
    t.text = title
    t = _sub(g, "text", x=_f(ax.left + ax.width / 2), y=_f(ax.top + ax.height + 28), text_anchor="middle", font_size="11")
    t.text = xlabel
    cx, cy = ax.left - 28, ax.top + ax.height / 2
    t = _sub(g, "text", x=_f(cx), y=_f(cy), text_anchor="middle", font_size="11",
             transform=f"rotate(-90 {_f(cx)} {_f(cy)})")
    t.text = ylabel
    for v, anchor in ((ax.x0, "start"), (ax.x1, "end")):
        t = _sub(g, "text", x=_f(ax.px(v)), y=_f(ax.top + ax.height + 13), text_anchor=anchor, font_size="9")
        t.text = f"{v:.4g}"
    for v, dy in ((ax.y0, 0.0), (ax.y1, 9.0)):
        t = _sub(g, "text", x=_f(ax.left - 3), y=_f(ax.py(v) + dy), text_anchor="end", font_size="9")
        t.text = f"{v:.4g}"


def _band_polygon(g, ax: _Axes, grid, lower, upper, id_):
    xs = np.concatenate([grid, grid[::-1]])
    ys = np.concatenate([upper, lower[::-1]])
    _sub(g, "polygon", id=id_, points=ax.points(xs, ys), fill=BAND_FILL, fill_opacity="0.8", stroke="none")


def _line(g, ax: _Axes, x0, y0, x1, y1, id_, color, dash=None):
    attrs = dict(id=id_, x1=_f(ax.px(x0)), y1=_f(ax.py(y0)), x2=_f(ax.px(x1)), y2=_f(ax.py(y1)),
                 stroke=color, stroke_width="1.5")
    if dash:
        attrs["stroke_dasharray"] = dash
    _sub(g, "line", **attrs)


def _scatter(g, ax: _Axes, xs, ys, id_):
    sg = _sub(g, "g", id=id_, fill=POINT, fill_opacity="0.7")
    for a, b in zip(np.atleast_1d(ax.px(xs)), np.atleast_1d(ax.py(ys))):
        _sub(sg, "circle", cx=_f(a), cy=_f(b), r="2.2")


def _diamond(g, ax: _Axes, x, y, id_, color, r=5.0):
    cx, cy = float(ax.px(x)), float(ax.py(y))
    pts = f"{_f(cx)},{_f(cy - r)} {_f(cx + r)},{_f(cy)} {_f(cx)},{_f(cy + r)} {_f(cx - r)},{_f(cy)}"
    _sub(g, "polygon", id=id_, points=pts, fill=color)


def _admissible_level(band, interval):
    """A constant inside ``band`` and ``interval``, or ``None``."""
    lo, hi = float(np.max(band.lower)), float(np.min(band.upper))
    lo, hi = max(lo, interval[0]), min(hi, interval[1])
    return 0.5 * (lo + hi) if lo <= hi else None


def _panel_accuracy(svg, left, top, report):
    acc = report.accuracy
    bias = float(acc.estimates["bias"])
    lo, hi = report.graphical.bias_ci
    vals = [0.0, bias, lo, hi]
    ax = _Axes(left, top, PANEL_SIZE, PANEL_SIZE, (-1.0, 1.0), (min(vals), max(vals)))
    g = _sub(svg, "g", id="panel-accuracy")
    _frame(g, ax, "Accuracy", "", f"mean difference {_unit(report)}".strip())
    _line(g, ax, -1.0, 0.0, 1.0, 0.0, "zero-line", "#969696", dash="4 3")
    _line(g, ax, 0.0, lo, 0.0, hi, "bias-ci", LINE)
    for v in (lo, hi):
        _line(g, ax, -0.15, v, 0.15, v, f"bias-ci-{'lower' if v == lo else 'upper'}", LINE)
    _sub(g, "circle", id="bias-point", cx=_f(ax.px(0.0)), cy=_f(ax.py(bias)), r="4", fill=LINE)
    _diamond(g, ax, 0.0, 0.0, "origin", NULL)


def _panel_precision(svg, left, top, report, band, sample):
    grid = band.grid
    ys = [band.lower, band.upper, [0.0]]
    xs = [grid]
    if sample is not None:
        xs.append(sample.x + sample.y)
        ys.append(sample.y - sample.x)
    ax = _Axes(left, top, PANEL_SIZE, PANEL_SIZE,
               (min(np.min(v) for v in xs), max(np.max(v) for v in xs)),
               (min(np.min(v) for v in ys), max(np.max(v) for v in ys)))
    g = _sub(svg, "g", id="panel-precision")
    _frame(g, ax, "Precision", "sum", "difference")
    _band_polygon(g, ax, grid, band.lower, band.upper, "precision-band")
    if sample is not None:
        _scatter(g, ax, sample.x + sample.y, sample.y - sample.x, "precision-points")
    _line(g, ax, grid[0], band.estimate[0], grid[-1], band.estimate[-1], "precision-estimate", LINE)
    _line(g, ax, grid[0], 0.0, grid[-1], 0.0, "zero-line-precision", "#969696", dash="4 3")
    level = _admissible_level(band, report.graphical.bias_ci)
    if level is not None:
        _line(g, ax, grid[0], level, grid[-1], level, "horizontal-line", NULL, dash="6 3")


def _panel_bisector(svg, left, top, report, band, ellipse, sample):
    grid = band.grid
    lower, upper = band.lower + grid, band.upper + grid
    xs = [grid]
    ys = [lower, upper, grid]
    if sample is not None:
        xs.append(sample.x)
        ys.append(sample.y)
    lo = min(min(np.min(v) for v in xs), min(np.min(v) for v in ys))
    hi = max(max(np.max(v) for v in xs), max(np.max(v) for v in ys))
    ax = _Axes(left, top, PANEL_SIZE, PANEL_SIZE, (lo, hi), (lo, hi))
    g = _sub(svg, "g", id="panel-bisector")
    _frame(g, ax, "Bisector", "reference", "candidate")
    _band_polygon(g, ax, grid, lower, upper, "bisector-band")
    if sample is not None:
        _scatter(g, ax, sample.x, sample.y, "bisector-points")
    _line(g, ax, grid[0], band.estimate[0] + grid[0], grid[-1], band.estimate[-1] + grid[-1], "deming-line", LINE)
    _line(g, ax, grid[0], grid[0], grid[-1], grid[-1], "bisector-line", NULL, dash="6 3")

    # Inset in the panel's upper-left corner.
    pts = ellipse.boundary(120)
    null, shifted = (0.0, 1.0), (float(report.accuracy.estimates["bias"]), 1.0)
    ex = np.concatenate([pts[:, 0], [null[0], shifted[0]]])
    ey = np.concatenate([pts[:, 1], [null[1], shifted[1]]])
    ia = _Axes(left + 8, top + 8, INSET, INSET, (ex.min(), ex.max()), (ey.min(), ey.max()))
    ig = _sub(g, "g", id="ellipse-inset")
    _sub(ig, "rect", x=_f(ia.left), y=_f(ia.top), width=_f(INSET), height=_f(INSET),
         fill="white", stroke="#969696", stroke_width="0.8")
    _sub(ig, "polygon", id="ellipse", points=ia.points(pts[:, 0], pts[:, 1]),
         fill=BAND_FILL, stroke=LINE, stroke_width="1")
    _diamond(ig, ia, *null, "ellipse-null", NULL, r=3.5)
    _sub(ig, "circle", id="ellipse-translated-null", cx=_f(ia.px(shifted[0])), cy=_f(ia.py(shifted[1])),
         r="2.5", fill="none", stroke=NULL)
    t = _sub(ig, "text", x=_f(ia.left + INSET / 2), y=_f(ia.top + INSET - 4), text_anchor="middle", font_size="8")
    t.text = "intercept, slope"


def _unit(report) -> str:
    u = report.input.get("unit_label") or ""
    return f"({u})" if u else ""


def render_figure(report, bands: Optional[Mapping], ellipse, sample=None) -> str:
    """Render the three panels as an SVG 1.1 document.

    Parameters
    ----------
    report : EquivalenceReport
    bands : mapping
        ``{"precision": BootstrapBand, "bisector": BootstrapBand}``.
    ellipse : ConfidenceEllipse
    sample : PairedSample, optional
        Adds the scatter points to panels 2 and 3.

    Raises
    ------
    NumericalError
        ``incomplete-graphics`` when a band or the ellipse is missing.
    """
    bands = dict(bands or {})
    missing = [k for k in ("precision", "bisector") if bands.get(k) is None]
    if ellipse is None:
        missing.append("ellipse")
    if missing:
        raise NumericalError("incomplete-graphics", f"missing {', '.join(missing)}")

    width = 2 * MARGIN + 3 * PANEL_SIZE + 2 * GAP + 2 * MARGIN
    height = PANEL_SIZE + 2 * MARGIN + 30
    svg = ET.Element("svg", {
        "xmlns": SVG_NS,
        "version": "1.1",
        "width": _f(width),
        "height": _f(height),
        "viewBox": f"0 0 {_f(width)} {_f(height)}",
        "font-family": "sans-serif",
    })
    title = ET.SubElement(svg, "title")
    title.text = f"{report.input.get('name', 'sample')}: {report.verdict}"
    _sub(svg, "rect", x="0", y="0", width=_f(width), height=_f(height), fill="white")
    top = MARGIN + 10
    step = PANEL_SIZE + GAP + MARGIN
    _panel_accuracy(svg, MARGIN + 10, top, report)
    _panel_precision(svg, MARGIN + 10 + step, top, report, bands["precision"], sample)
    _panel_bisector(svg, MARGIN + 10 + 2 * step, top, report, bands["bisector"], ellipse, sample)
    body = ET.tostring(svg, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def figure_for(analysis) -> str:
    """Render the figure straight from an :class:`~baequiv.report.Analysis`."""
    return render_figure(
        analysis.report,
        {"precision": analysis.precision_band, "bisector": analysis.bisector_band},
        analysis.ellipse,
        sample=analysis.sample,
    )
