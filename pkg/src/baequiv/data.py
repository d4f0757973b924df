"""Paired measurement samples: CSV ingestion, transforms and bundled fixtures.

A :class:`PairedSample` holds one value per subject for the reference
technique (``x``) and the candidate technique (``y``).  Replicated designs
keep the raw replicates alongside; ``x`` and ``y`` are then the per-subject
means.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "PairedSample",
    "ColumnMap",
    "FIXTURES",
    "parse_csv",
    "write_csv",
    "transform",
    "load_fixture",
    "fixture_names",
]

# Plain decimal notation only; rejects "1,5", "nan", "inf", "0x1p3", blanks.
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Observed pairs for ``n`` subjects.

    ``x_reps``/``y_reps`` are ``None`` for single-measurement designs, else a
    tuple of per-subject replicate arrays (each of length >= 2).
    """

    subject_ids: tuple
    x: np.ndarray
    y: np.ndarray
    x_reps: Optional[tuple] = None
    y_reps: Optional[tuple] = None
    unit_label: str = ""
    name: str = "sample"

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "subject_ids", tuple(str(s) for s in self.subject_ids))
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y) or len(x) != len(self.subject_ids):
            raise DataError("row-length-mismatch", "x, y and subject_ids must have equal length")
        if (self.x_reps is None) != (self.y_reps is None):
            raise DataError("no-replicates", "replicates must be given for both techniques")
        if self.x_reps is not None:
            for attr in ("x_reps", "y_reps"):
                reps = tuple(_frozen(r) for r in getattr(self, attr))
                if len(reps) != len(x):
                    raise DataError("row-length-mismatch", f"{attr} has {len(reps)} subjects, expected {len(x)}")
                for i, r in enumerate(reps):
                    if r.ndim != 1 or r.size < 2:
                        raise DataError("no-replicates", f"subject {i} has fewer than 2 replicates", row=i)
                    if not np.all(np.isfinite(r)):
                        raise DataError("non-finite-input", f"{attr}[{i}] has a non-finite value", row=i)
                object.__setattr__(self, attr, reps)
        for col, arr in (("x", x), ("y", y)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataError("non-finite-input", f"{col}[{bad[0]}] is not finite", row=int(bad[0]))

    @classmethod
    def from_replicates(cls, subject_ids, x_reps, y_reps, unit_label="", name="sample"):
        """Build a replicated sample; ``x``/``y`` become per-subject means."""
        x_reps = tuple(np.asarray(r, dtype=float) for r in x_reps)
        y_reps = tuple(np.asarray(r, dtype=float) for r in y_reps)
        return cls(
            subject_ids=tuple(subject_ids),
            x=[r.mean() if r.size else math.nan for r in x_reps],
            y=[r.mean() if r.size else math.nan for r in y_reps],
            x_reps=x_reps,
            y_reps=y_reps,
            unit_label=unit_label,
            name=name,
        )

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def replicated(self) -> bool:
        return self.x_reps is not None

    @property
    def d(self) -> np.ndarray:
        """Differences ``y - x``."""
        return self.y - self.x

    def same_values(self, other: "PairedSample") -> bool:
        if self.subject_ids != other.subject_ids or self.replicated != other.replicated:
            return False
        if not (np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)):
            return False
        if self.replicated:
            pairs = zip(self.x_reps + self.y_reps, other.x_reps + other.y_reps)
            return all(np.array_equal(a, b) for a, b in pairs)
        return True


@dataclass(frozen=True)
class ColumnMap:
    """Which CSV columns hold what. Several x (or y) columns mean replicates."""

    x: tuple = ("x",)
    y: tuple = ("y",)
    id: Optional[str] = "id"

    @classmethod
    def parse(cls, x: str = "x", y: str = "y", id: Optional[str] = "id") -> "ColumnMap":
        split = lambda s: tuple(c.strip() for c in s.split(",") if c.strip())
        return cls(x=split(x), y=split(y), id=id or None)


def _cell(text: str, row: int, column: str) -> float:
    s = text.strip()
    if not _NUMBER.match(s):
        raise DataError("non-numeric-cell", f"row {row}, column {column!r}: {text!r}", row=row, column=column)
    return float(s)


def parse_csv(source, config: ColumnMap = ColumnMap(), *, name: str = "input", unit_label: str = "") -> PairedSample:
    """Read a UTF-8, comma-separated file with a header row.

    ``source`` may be bytes, text, a path-like or a binary/text stream.  Row
    numbers in error messages count the header as row 1.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    else:
        with open(source, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()

    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty-input", "no header row")
    header = [h.strip() for h in rows[0]]
    wanted = list(config.x) + list(config.y) + ([config.id] if config.id else [])
    missing = [c for c in wanted if c not in header]
    if missing:
        raise DataError("missing-column", f"columns not found: {', '.join(missing)}", columns=missing)
    if len(rows) < 2:
        raise DataError("empty-input", "header present but no data rows")
    pos = {h: i for i, h in enumerate(header)}

    ids, xs, ys = [], [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise DataError("row-length-mismatch", f"row {lineno} has {len(r)} cells, header has {len(header)}", row=lineno)
        ids.append(r[pos[config.id]].strip() if config.id else str(lineno - 1))
        xs.append([_cell(r[pos[c]], lineno, c) for c in config.x])
        ys.append([_cell(r[pos[c]], lineno, c) for c in config.y])

    if len(config.x) == 1 and len(config.y) == 1:
        return PairedSample(tuple(ids), [v[0] for v in xs], [v[0] for v in ys], unit_label=unit_label, name=name)
    if len(config.x) < 2 or len(config.y) < 2:
        raise DataError("no-replicates", "replicated designs need at least 2 columns per technique")
    return PairedSample.from_replicates(ids, xs, ys, unit_label=unit_label, name=name)


def write_csv(sample: PairedSample, config: Optional[ColumnMap] = None) -> str:
    """Serialize ``sample`` in the layout :func:`parse_csv` reads back."""
    if config is None:
        if sample.replicated:
            mx = len(sample.x_reps[0])
            my = len(sample.y_reps[0])
            config = ColumnMap(x=tuple(f"x{j + 1}" for j in range(mx)), y=tuple(f"y{j + 1}" for j in range(my)))
        else:
            config = ColumnMap()
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(([config.id] if config.id else []) + list(config.x) + list(config.y))
    for i in range(sample.n):
        if sample.replicated:
            xv, yv = sample.x_reps[i], sample.y_reps[i]
        else:
            xv, yv = [sample.x[i]], [sample.y[i]]
        if len(xv) != len(config.x) or len(yv) != len(config.y):
            raise DataError("row-length-mismatch", f"subject {i} does not fit the column layout")
        w.writerow(([sample.subject_ids[i]] if config.id else []) + [repr(float(v)) for v in xv] + [repr(float(v)) for v in yv])
    return out.getvalue()


def transform(sample: PairedSample, spec: str) -> PairedSample:
    """Apply ``log``, ``scale-y=c`` or ``scale-x=c`` to a sample.

    Replicates are transformed value by value and the per-subject means
    recomputed, so ``log`` of a replicated sample is the mean of the logs.
    """
    spec = spec.strip()
    if spec == "log":
        values = [sample.x, sample.y] + (list(sample.x_reps + sample.y_reps) if sample.replicated else [])
        if any(np.any(v <= 0) for v in values):
            raise DataError("non-positive-for-log", "log transform needs strictly positive values")
        fx = fy = np.log
        label = f"log({sample.unit_label})" if sample.unit_label else "log"
    else:
        m = re.fullmatch(r"scale-([xy])\s*=\s*(\S+)", spec)
        if not m:
            raise ConfigError("bad-transform", f"unknown transform {spec!r}")
        try:
            c = float(m.group(2))
        except ValueError:
            raise ConfigError("bad-transform", f"scale factor {m.group(2)!r} is not a number") from None
        if c == 0 or not math.isfinite(c):
            raise DataError("zero-scale", "scale factor must be finite and nonzero")
        ident = lambda v: v
        scale = lambda v: v * c
        fx, fy = (scale, ident) if m.group(1) == "x" else (ident, scale)
        label = f"{sample.unit_label} ({m.group(1)} x {c:g})".strip()

    name = f"{sample.name}[{spec}]"
    if sample.replicated:
        return PairedSample.from_replicates(
            sample.subject_ids,
            [fx(r) for r in sample.x_reps],
            [fy(r) for r in sample.y_reps],
            unit_label=label,
            name=name,
        )
    return replace(sample, x=fx(sample.x), y=fy(sample.y), unit_label=label, name=name)


@dataclass(frozen=True)
class FixtureInfo:
    file: str
    columns: ColumnMap
    unit_label: str
    n: int
    description: str
    provenance: str
    surrogate: bool = field(default=False)


FIXTURES = {
    "pefr": FixtureInfo(
        "pefr.csv",
        ColumnMap(x=("wright_1", "wright_2"), y=("mini_1", "mini_2"), id="subject"),
        "L/min",
        17,
        "Peak expiratory flow rate, Wright peak flow meter (x) vs Mini Wright meter (y), two readings each",
        "transcribed from Bland & Altman (1986), Lancet 327:307-310, Table 1",
    ),
    "syst-bp": FixtureInfo(
        "syst_bp.csv",
        ColumnMap(x=("j_1", "j_2", "j_3"), y=("s_1", "s_2", "s_3"), id="subject"),
        "mmHg",
        85,
        "Systolic blood pressure, observer J (x) vs automatic machine S (y), three readings each",
        "simulated surrogate: constant positive machine bias, equal error variances",
        surrogate=True,
    ),
    "plasma-volume": FixtureInfo(
        "plasma_volume.csv",
        ColumnMap(x=("nadler",), y=("hurley",), id="subject"),
        "%",
        99,
        "Plasma volume as a percentage of normal, Nadler (x) vs Hurley (y) equations",
        "simulated surrogate: proportional bias (mean ratio 1.1038), equal relative errors",
        surrogate=True,
    ),
    "fat-milk": FixtureInfo(
        "fat_milk.csv",
        ColumnMap(x=("gerber",), y=("trig",), id="subject"),
        "g/100ml",
        45,
        "Fat content of human milk, standard Gerber method (x) vs enzymic hydrolysis of triglycerides (y)",
        "simulated surrogate: equal means, candidate slope below one",
        surrogate=True,
    ),
    "blocking-drugs": FixtureInfo(
        "blocking_drugs.csv",
        ColumnMap(x=("peers",), y=("self",), id="subject"),
        "score",
        88,
        "Skill scores on neuromuscular blocking drug use, peers' perception (x) vs self-perception (y)",
        "simulated surrogate: positive self bias, self-rating error variance about four times the peers'",
        surrogate=True,
    ),
}


def fixture_names() -> Sequence[str]:
    return tuple(FIXTURES)


def load_fixture(name: str) -> PairedSample:
    """Load one of the bundled datasets by name (see :data:`FIXTURES`)."""
    try:
        info = FIXTURES[name]
    except KeyError:
        raise DataError("unknown-fixture", f"{name!r}; available: {', '.join(FIXTURES)}") from None
    raw = resources.files("baequiv").joinpath("fixtures").joinpath(info.file).read_bytes()
    sample = parse_csv(raw, info.columns, name=name, unit_label=info.unit_label)
    if sample.n != info.n:
        raise DataError("row-length-mismatch", f"fixture {name} has {sample.n} rows, expected {info.n}")
    return sample
