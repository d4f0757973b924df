#!/usr/bin/env python3
"""Regenerate the simulated surrogate fixtures.

Only ``pefr.csv`` holds real measurements.  The per-subject values of the
other four datasets could not be bundled, so each is replaced by a simulated
sample with the published subject count and the qualitative structure the
original data are documented to have:

syst-bp         85 subjects, triplicates, machine reads ~16 mmHg high, equal errors
plasma-volume   99 subjects, Nadler ~ 1.1038 x Hurley, equal relative errors
fat-milk        45 samples, equal means, enzymic method slope < 1
blocking-drugs  88 subjects, self-rating biased upward and ~4x noisier

The output is deterministic for a given numpy version.  Run from the repo root:

    python scripts/make_surrogate_fixtures.py
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "baequiv" / "fixtures"
SEED = 20240601


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def syst_bp(rng):
    n, m = 85, 3
    true = rng.normal(140.0, 32.0, n)
    sd = 7.0
    j = np.rint(true[:, None] + rng.normal(0.0, sd, (n, m)))
    s = np.rint(true[:, None] + 16.0 + rng.normal(0.0, sd, (n, m)))
    rows = [[i + 1, *map(int, j[i]), *map(int, s[i])] for i in range(n)]
    write(OUT / "syst_bp.csv", ["subject", "j_1", "j_2", "j_3", "s_1", "s_2", "s_3"], rows)


def plasma_volume(rng, ratio=1.1038):
    n = 99
    true = rng.normal(78.0, 11.0, n)
    rel = 0.014
    nadler = true * np.exp(rng.normal(0.0, rel, n))
    hurley = true / ratio * np.exp(rng.normal(0.0, rel, n))
    nadler = np.round(nadler, 1)
    # Pin the mean ratio to the documented calibration factor.
    hurley = np.round(hurley * (nadler.mean() / hurley.mean()) / ratio, 1)
    rows = [[i + 1, f"{nadler[i]:.1f}", f"{hurley[i]:.1f}"] for i in range(n)]
    write(OUT / "plasma_volume.csv", ["subject", "nadler", "hurley"], rows)


def fat_milk(rng):
    n = 45
    true = rng.uniform(0.9, 6.3, n)
    slope = 0.93
    pivot = true.mean()
    gerber = true + rng.normal(0.0, 0.06, n)
    trig = pivot + slope * (true - pivot) + rng.normal(0.0, 0.06, n)
    rows = [[i + 1, f"{gerber[i]:.2f}", f"{trig[i]:.2f}"] for i in range(n)]
    write(OUT / "fat_milk.csv", ["subject", "gerber", "trig"], rows)


def blocking_drugs(rng):
    n = 88
    true = rng.normal(6.0, 1.0, n)
    peers = true + rng.normal(0.0, 0.8, n)
    self_ = true + 0.6 + rng.normal(0.0, 1.6, n)
    rows = [[i + 1, f"{peers[i]:.2f}", f"{self_[i]:.2f}"] for i in range(n)]
    write(OUT / "blocking_drugs.csv", ["subject", "peers", "self"], rows)


def main():
    rng = np.random.Generator(np.random.PCG64(SEED))
    syst_bp(rng)
    plasma_volume(rng)
    fat_milk(rng)
    blocking_drugs(rng)


if __name__ == "__main__":
    main()
