"""CSV ingestion and bundled fixtures."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

FIXTURES = ("separable", "xor", "corral")


class DataError(ValueError):
    """Input data cannot be used (missing file, bad cell, wrong label count)."""


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise DataError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return Path(str(resources.files("gateprune") / "data" / f"{name}.csv"))


def resolve_dataset(ref: str, base: Path | None = None) -> Path:
    """``fixture:<name>`` or a path (relative paths resolve against ``base``)."""
    if ref.startswith("fixture:"):
        return fixture_path(ref.split(":", 1)[1])
    p = Path(ref)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def minmax_normalize(X: np.ndarray) -> np.ndarray:
    """Scale each column onto [0, 1]; constant columns become 0.5."""
    X = np.asarray(X, float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    out = np.full_like(X, 0.5)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return np.clip(out, 0.0, 1.0)


def _label_order(values):
    try:
        return sorted(values, key=float)
    except ValueError:
        return sorted(values)


def ingest_csv(path, label_column: str = "last") -> tuple[np.ndarray, np.ndarray]:
    """Read a headed CSV into normalized features and -1/+1 labels.

    Labels are mapped by sorted distinct value (numeric order when every
    label parses as a number): the first becomes -1, the second +1.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    if label_column == "last":
        li = len(header) - 1
    elif label_column in header:
        li = header.index(label_column)
    else:
        raise DataError(f"{path}: no column named {label_column!r}")
    feat_cols = [i for i in range(len(header)) if i != li]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")

    X = np.empty((len(rows) - 1, len(feat_cols)))
    raw_labels = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for j, c in enumerate(feat_cols):
            try:
                X[r - 2, j] = float(row[c])
            except ValueError:
                raise DataError(f"{path}: non-numeric value {row[c]!r} at row {r}, column {header[c]!r}") from None
        raw_labels.append(row[li].strip())
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite feature values")

    values = _label_order(set(raw_labels))
    if len(values) != 2:
        raise DataError(f"{path}: expected exactly 2 label values, found {len(values)}")
    sign = {values[0]: -1, values[1]: 1}
    y = np.array([sign[v] for v in raw_labels], dtype=int)
    return minmax_normalize(X), y
