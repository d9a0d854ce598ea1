"""CSV ingestion and emission for directional data.

Input files are rectangular UTF-8 CSVs with a header row and '.' decimal
separator.  Rows are validated to lie on the unit sphere, or projected
onto it when requested; an optional integer label column turns the result
into a labeled sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DirectionalData",
    "format_float",
    "load_directional_csv",
    "load_matrix_csv",
    "write_csv",
]

# CSVs round coordinates, so on-sphere validation is looser than the
# in-memory tolerance; accepted rows are renormalized to machine precision
_CSV_NORM_TOL = 1e-6


@dataclass(frozen=True)
class DirectionalData:
    Y: np.ndarray
    labels: np.ndarray | None
    feature_names: tuple[str, ...]
    label_name: str | None = None

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def n_groups(self) -> int:
        if self.labels is None:
            raise ValueError("sample is unlabeled")
        return int(np.unique(self.labels).size)


def _parse_cell(text: str, line_no: int, col_name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"non-numeric value {text!r} at line {line_no}, column {col_name!r}"
        ) from None


def load_directional_csv(
    path,
    project_to_sphere: bool = False,
    label_column: str | None = None,
) -> DirectionalData:
    """Read a headered CSV of coordinates (plus optional label column).

    Without projection every row must already have unit norm (within a
    rounding tolerance); with it, any nonzero row is rescaled to the
    sphere and a zero row is an error.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column is not None:
            if label_column not in header:
                raise ValueError(
                    f"{path}: label column {label_column!r} not in header {header}"
                )
            label_idx = header.index(label_column)
        else:
            label_idx = None
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        if len(feat_idx) < 2:
            raise ValueError(f"{path}: need at least 2 coordinate columns")
        rows = []
        labels = []
        for line_no, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != len(header):
                raise ValueError(
                    f"{path}: line {line_no} has {len(rec)} fields, expected {len(header)}"
                )
            rows.append([_parse_cell(rec[i], line_no, header[i]) for i in feat_idx])
            if label_idx is not None:
                raw = rec[label_idx].strip()
                val = _parse_cell(raw, line_no, header[label_idx])
                if val != int(val):
                    raise ValueError(
                        f"non-integer label {raw!r} at line {line_no}, "
                        f"column {header[label_idx]!r}"
                    )
                labels.append(int(val))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    Y = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(Y, axis=1)
    if project_to_sphere:
        bad = norms < 1e-12
        if np.any(bad):
            line = int(np.flatnonzero(bad)[0]) + 2
            raise ValueError(f"{path}: zero-norm row at line {line} cannot be projected")
    else:
        dev = np.abs(norms - 1.0)
        worst = int(np.argmax(dev))
        if dev[worst] > _CSV_NORM_TOL:
            raise ValueError(
                f"{path}: row at line {worst + 2} has norm {norms[worst]:.6g}, "
                "not on the unit sphere (pass project_to_sphere to rescale)"
            )
    Y = Y / norms[:, None]
    return DirectionalData(
        Y=Y,
        labels=np.asarray(labels, dtype=int) if label_idx is not None else None,
        feature_names=tuple(header[i] for i in feat_idx),
        label_name=None if label_idx is None else header[label_idx],
    )


def load_matrix_csv(path):
    """Read a headered numeric CSV as a plain matrix (no sphere checks)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = []
        for line_no, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != len(header):
                raise ValueError(
                    f"{path}: line {line_no} has {len(rec)} fields, expected {len(header)}"
                )
            rows.append([_parse_cell(rec[i], line_no, header[i]) for i in range(len(header))])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float), tuple(header)


def write_csv(path, header, rows) -> None:
    """Write a rectangular CSV with header (UTF-8, '.' decimal)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def format_float(v: float) -> str:
    """Full-precision float text that round-trips through CSV."""
    return repr(float(v))
