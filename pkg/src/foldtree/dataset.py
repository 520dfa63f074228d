"""Tabular data container, CSV io, and stratified partitioning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_NA_TOKENS = frozenset({"", "NA", "?"})


class DataError(ValueError):
    """Raised for malformed input data or degenerate partitions."""


def _parse_number(text: str) -> float | None:
    """Return the cell as a finite float, or None if it is not a number."""
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class NumericColumn:
    """Real-valued column; missing cells are NaN."""

    name: str
    values: np.ndarray  # float64, NaN marks missing

    @property
    def is_numeric(self) -> bool:
        return True

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def take(self, rows: np.ndarray) -> "NumericColumn":
        return NumericColumn(self.name, self.values[rows])


@dataclass(frozen=True)
class CategoricalColumn:
    """Level-coded column; missing cells are code -1."""

    name: str
    codes: np.ndarray  # int64, -1 marks missing
    levels: tuple[str, ...]

    @property
    def is_numeric(self) -> bool:
        return False

    @property
    def missing_mask(self) -> np.ndarray:
        return self.codes < 0

    def take(self, rows: np.ndarray) -> "CategoricalColumn":
        return CategoricalColumn(self.name, self.codes[rows], self.levels)


Column = NumericColumn | CategoricalColumn


@dataclass(frozen=True)
class Dataset:
    """Immutable typed table with an integer-coded class target."""

    columns: tuple[Column, ...]
    target: np.ndarray  # int64 class indices, 0..n_classes-1
    class_labels: tuple[str, ...]
    target_name: str = "class"

    def __post_init__(self):
        n = self.n_rows
        for col in self.columns:
            length = len(col.values if col.is_numeric else col.codes)
            if length != n:
                raise DataError(f"column {col.name!r} has {length} rows, expected {n}")
        if len(self.class_labels) < 2:
            raise DataError("target must have at least 2 classes")
        if self.target.size and (self.target.min() < 0 or self.target.max() >= len(self.class_labels)):
            raise DataError("target indices outside the class-label table")

    @property
    def n_rows(self) -> int:
        return len(self.target)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def has_missing(self) -> bool:
        return any(c.missing_mask.any() for c in self.columns)

    def take(self, rows: np.ndarray) -> "Dataset":
        """Row subset (copy), preserving column types and label tables."""
        rows = np.asarray(rows)
        return Dataset(
            columns=tuple(c.take(rows) for c in self.columns),
            target=self.target[rows],
            class_labels=self.class_labels,
            target_name=self.target_name,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.target, minlength=self.n_classes)


@dataclass(frozen=True)
class FoldPlan:
    """Stratified cross-validation assignment: fold index per row."""

    k: int
    assignment: np.ndarray  # int64, values in 0..k-1
    seed: int

    def fold_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def rest_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [cell.strip() for cell in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    body = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        body.append([cell.strip() for cell in row])
    return header, body


def _type_column(name: str, cells: list[str], na_tokens: frozenset[str]) -> Column:
    """Numeric iff every non-NA cell parses as a finite number, else categorical."""
    missing = [cell in na_tokens for cell in cells]
    parsed = [None if m else _parse_number(cell) for cell, m in zip(cells, missing)]
    if all(p is not None for p, m in zip(parsed, missing) if not m):
        values = np.array(
            [np.nan if m else p for p, m in zip(parsed, missing)], dtype=np.float64
        )
        return NumericColumn(name, values)
    levels = tuple(sorted({cell for cell, m in zip(cells, missing) if not m}))
    index = {level: i for i, level in enumerate(levels)}
    codes = np.array(
        [-1 if m else index[cell] for cell, m in zip(cells, missing)], dtype=np.int64
    )
    return CategoricalColumn(name, codes, levels)


def load_csv(path, target_name: str, na_tokens=DEFAULT_NA_TOKENS) -> Dataset:
    """Load a headered CSV, inferring column types and coding the target."""
    na_tokens = frozenset(na_tokens)
    header, body = _read_rows(path)
    if target_name not in header:
        raise DataError(f"{path}: target column {target_name!r} not in header {header}")
    t_pos = header.index(target_name)
    target_cells = [row[t_pos] for row in body]
    if any(cell in na_tokens for cell in target_cells):
        raise DataError(f"{path}: missing value in target column {target_name!r}")
    labels = tuple(sorted(set(target_cells)))
    if len(labels) < 2:
        raise DataError(f"{path}: target has {len(labels)} distinct class(es), need >= 2")
    label_index = {label: i for i, label in enumerate(labels)}
    target = np.array([label_index[cell] for cell in target_cells], dtype=np.int64)

    columns = []
    for j, name in enumerate(header):
        if j == t_pos:
            continue
        columns.append(_type_column(name, [row[j] for row in body], na_tokens))
    return Dataset(tuple(columns), target, labels, target_name=target_name)


def load_csv_with_schema(path, schema, na_tokens=DEFAULT_NA_TOKENS):
    """Load feature columns typed per a model schema instead of by inference.

    `schema` is a sequence of (name, kind) pairs with kind "numeric" or
    "categorical". Extra CSV columns (including a target) are ignored.
    Returns the columns in schema order.
    """
    na_tokens = frozenset(na_tokens)
    header, body = _read_rows(path)
    positions = {name: i for i, name in enumerate(header)}
    columns: list[Column] = []
    for name, kind in schema:
        if name not in positions:
            raise DataError(f"{path}: schema column {name!r} missing from file")
        cells = [row[positions[name]] for row in body]
        missing = [cell in na_tokens for cell in cells]
        if kind == "numeric":
            values = np.empty(len(cells), dtype=np.float64)
            for i, (cell, m) in enumerate(zip(cells, missing)):
                if m:
                    values[i] = np.nan
                    continue
                parsed = _parse_number(cell)
                if parsed is None:
                    raise DataError(
                        f"{path}: column {name!r} is numeric in the model but "
                        f"cell {cell!r} does not parse"
                    )
                values[i] = parsed
            columns.append(NumericColumn(name, values))
        else:
            levels = tuple(sorted({c for c, m in zip(cells, missing) if not m}))
            index = {level: i for i, level in enumerate(levels)}
            codes = np.array(
                [-1 if m else index[c] for c, m in zip(cells, missing)], dtype=np.int64
            )
            columns.append(CategoricalColumn(name, codes, levels))
    return columns, len(body)


def save_csv(ds: Dataset, path, na_token: str = "NA") -> None:
    """Write the dataset back to CSV; numeric cells use round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(ds.column_names + [ds.target_name])
        for i in range(ds.n_rows):
            row = []
            for col in ds.columns:
                if col.is_numeric:
                    v = col.values[i]
                    row.append(na_token if np.isnan(v) else repr(float(v)))
                else:
                    code = col.codes[i]
                    row.append(na_token if code < 0 else col.levels[code])
            row.append(ds.class_labels[ds.target[i]])
            writer.writerow(row)


def _stratified_quota(counts: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of `total` across class counts."""
    n = counts.sum()
    exact = counts * (total / n)
    quota = np.floor(exact).astype(np.int64)
    shortfall = total - quota.sum()
    # Distribute the remainder to the largest fractional parts; ties go to the
    # lowest class index for determinism.
    order = np.lexsort((np.arange(len(counts)), -(exact - quota)))
    for idx in order[:shortfall]:
        quota[idx] += 1
    return quota


def split_train_test(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic stratified holdout split: (train, test)."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must be in (0,1), got {fraction}")
    counts = ds.class_counts()
    n_train_total = int(round(fraction * ds.n_rows))
    quota = _stratified_quota(counts, n_train_total)
    rng = np.random.default_rng(seed)
    train_rows, test_rows = [], []
    for cls in range(ds.n_classes):
        rows = np.flatnonzero(ds.target == cls)
        rng.shuffle(rows)
        train_rows.append(rows[: quota[cls]])
        test_rows.append(rows[quota[cls] :])
    train_idx = np.sort(np.concatenate(train_rows))
    test_idx = np.sort(np.concatenate(test_rows))
    for name, idx in (("train", train_idx), ("test", test_idx)):
        present = len(np.unique(ds.target[idx])) if idx.size else 0
        if present < 2:
            raise DataError(
                f"degenerate fraction {fraction}: {name} partition has {present} class(es)"
            )
    return ds.take(train_idx), ds.take(test_idx)


def make_folds(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Stratified k-fold assignment, deterministic in (seed, n_rows, k, target)."""
    if k < 2:
        raise DataError(f"fold count must be >= 2, got {k}")
    if k > ds.n_rows:
        raise DataError(f"fold count {k} exceeds row count {ds.n_rows}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(ds.n_rows, dtype=np.int64)
    cursor = 0  # rotates across classes so overall fold sizes stay balanced
    for cls in range(ds.n_classes):
        rows = np.flatnonzero(ds.target == cls)
        rng.shuffle(rows)
        for row in rows:
            assignment[row] = cursor % k
            cursor += 1
    return FoldPlan(k=k, assignment=assignment, seed=seed)
