"""Dataset ingestion, sub-sampling and synthetic data."""

from __future__ import annotations

import csv
import logging
import math
from typing import Sequence

import numpy as np

from .errors import AllRowsSkippedError, MissingColumnError, SampleTooLargeError

log = logging.getLogger(__name__)


def _sniff_delimiter(sample: str) -> str:
    try:
        return csv.Sniffer().sniff(sample, delimiters=",;\t").delimiter
    except csv.Error:
        return ","


def load_csv(path, feature_columns: Sequence[str]) -> tuple[np.ndarray, int]:
    """Read the named numeric columns of a delimited text file.

    Comma, semicolon (the UCI bank files) and tab delimiters are detected.
    Rows with a missing or non-numeric value in any requested column are
    skipped and counted. Returns (points, skipped_rows).
    """
    with open(path, newline="") as fh:
        sample = fh.read(8192)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=_sniff_delimiter(sample))
        try:
            header = [h.strip().strip('"') for h in next(reader)]
        except StopIteration:
            raise AllRowsSkippedError(f"{path}: empty file") from None
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise MissingColumnError(f"{path}: missing column(s) {', '.join(missing)}")
        cols = [header.index(c) for c in feature_columns]

        rows, skipped = [], 0
        for record in reader:
            if not record:
                continue
            try:
                vals = [float(record[j].strip().strip('"')) for j in cols]
            except (IndexError, ValueError):
                skipped += 1
                continue
            if not all(math.isfinite(v) for v in vals):
                skipped += 1
                continue
            rows.append(vals)
    if skipped:
        log.warning("%s: skipped %d malformed row(s)", path, skipped)
    if not rows:
        raise AllRowsSkippedError(f"{path}: no usable rows")
    return np.array(rows, dtype=float), skipped


def sample_indices(n: int, m: int, seed: int) -> np.ndarray:
    """m distinct indices out of n, sorted; uniform without replacement."""
    if m > n:
        raise SampleTooLargeError(f"sample of {m} from {n} points")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=m, replace=False))


def sample_points(points, m: int, seed: int) -> np.ndarray:
    points = np.asarray(points)
    return points[sample_indices(len(points), m, seed)]


def standardize(points) -> np.ndarray:
    """Per-column z-score; constant columns are only centred."""
    points = np.asarray(points, dtype=float)
    sd = points.std(axis=0)
    sd[sd == 0] = 1.0
    return (points - points.mean(axis=0)) / sd


def gaussian_mixture(n: int, dim: int = 2, clusters: int = 8, spread: float = 6.0, seed: int = 0) -> np.ndarray:
    """Isotropic unit-variance blobs around N(0, spread^2) centres."""
    rng = np.random.default_rng(seed)
    centres = rng.normal(scale=spread, size=(clusters, dim))
    labels = rng.integers(0, clusters, size=n)
    return centres[labels] + rng.normal(size=(n, dim))
