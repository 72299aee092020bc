"""Labeled dataset model and CSV ingestion.

CSV dialect: comma separated, ``.`` decimal point, UTF-8, header row
required.  The label column is named explicitly (no positional guessing); an
optional id column supplies instance identifiers, otherwise the 0-based row
number is used.  Every other column must be numeric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .relations import AttributeTable


class DatasetError(ValueError):
    """Malformed dataset input (missing columns, non-numeric cells, empty file)."""


@dataclass(frozen=True)
class LabeledDataset:
    ids: tuple
    table: AttributeTable
    labels: np.ndarray

    def __post_init__(self):
        if len(self.ids) != self.table.n_instances:
            raise DatasetError("one id per instance required")
        if self.labels.shape != (self.table.n_instances,):
            raise DatasetError("one label per instance required")
        if len(set(self.ids)) != len(self.ids):
            raise DatasetError("instance ids must be unique")
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.table.n_instances

    @property
    def classes(self) -> tuple:
        return tuple(sorted(set(self.labels.tolist()), key=str))

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @classmethod
    def from_arrays(cls, X, y, ids=None, attribute_names=None,
                    ranges=None) -> "LabeledDataset":
        table = AttributeTable.from_array(X, names=attribute_names, ranges=ranges)
        labels = np.asarray(y, dtype=object)
        if labels.ndim != 1:
            raise DatasetError("labels must be one-dimensional")
        if ids is None:
            ids = tuple(str(i) for i in range(table.n_instances))
        return cls(tuple(str(i) for i in ids), table, labels)

    @classmethod
    def from_csv(cls, path, label_column: str, id_column=None,
                 ranges=None) -> "LabeledDataset":
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                try:
                    header = next(reader)
                except StopIteration:
                    raise DatasetError(f"{path}: empty file (header required)")
                rows = [row for row in reader if row]
        except OSError as exc:
            raise DatasetError(f"cannot read dataset {path}: {exc}")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in "
                               f"header {header}")
        if id_column is not None and id_column not in header:
            raise DatasetError(f"{path}: id column {id_column!r} not in header")
        if not rows:
            raise DatasetError(f"{path}: no data rows")
        lab_idx = header.index(label_column)
        id_idx = header.index(id_column) if id_column is not None else None
        attr_cols = [k for k in range(len(header))
                     if k != lab_idx and k != id_idx]
        if not attr_cols:
            raise DatasetError(f"{path}: no numeric attribute columns")

        ids, labels, values = [], [], []
        for r, row in enumerate(rows):
            if len(row) != len(header):
                raise DatasetError(f"{path}: row {r + 2} has {len(row)} cells, "
                                   f"expected {len(header)}")
            ids.append(row[id_idx].strip() if id_idx is not None else str(r))
            labels.append(row[lab_idx].strip())
            vals = []
            for k in attr_cols:
                cell = row[k].strip()
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {r + 2}, column {header[k]!r}: "
                        f"non-numeric value {cell!r}")
            values.append(vals)
        arr = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DatasetError(f"{path}: non-finite attribute values")
        names = tuple(header[k] for k in attr_cols)
        table = AttributeTable.from_array(arr, names=names, ranges=ranges)
        return cls(tuple(ids), table, np.asarray(labels, dtype=object))
