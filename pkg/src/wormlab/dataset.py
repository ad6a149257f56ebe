"""Labelled sample container used by every classifier."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, InputError
from .regression import as_matrix


@dataclass(frozen=True)
class LabeledDataset:
    """Samples stored as the columns of ``data`` with one integer label each.

    ``num_classes`` defaults to ``max(labels) + 1``. Whether every class is
    populated is checked by the fitting routines, not here, so that a test
    split may legitimately miss a class.
    """

    data: np.ndarray
    labels: np.ndarray
    num_classes: int = -1

    def __post_init__(self):
        data = as_matrix(self.data, "data")
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != data.shape[1]:
            raise ContractError(
                f"need one label per column: {data.shape[1]} columns, labels shape {labels.shape}"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InputError("labels must be integers")
        labels = labels.astype(np.int64)
        num_classes = int(self.num_classes)
        if num_classes < 0:
            num_classes = int(labels.max()) + 1 if labels.size else 0
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            raise ContractError(f"labels must lie in 0..{num_classes - 1}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_classes", num_classes)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.data.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


def export_csv(dataset: LabeledDataset, path) -> Path:
    """Write one sample per row with the label in the last column.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for j in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.data[:, j]]
            row.append(str(int(dataset.labels[j])))
            writer.writerow(row)
    return path


def read_csv_rows(path) -> np.ndarray:
    """Load a headerless numeric CSV as a ``(rows, cols)`` float array."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise InputError(f"{path}: no rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)


def import_csv(path, num_classes: int = -1) -> LabeledDataset:
    """Inverse of :func:`export_csv`."""
    table = read_csv_rows(path)
    return LabeledDataset(table[:, :-1].T.copy(), table[:, -1].astype(np.int64), num_classes)
