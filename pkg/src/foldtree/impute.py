"""Missing-value handling: constant imputation with indicators, one-hot encoding.

Numeric columns are imputed with a stored constant (the fitting slice's median)
and, when the fitting slice actually contained missing cells, an indicator
column is appended. Categorical columns gain a synthetic missing level under
the same condition. The record can be replayed on new data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CategoricalColumn, DataError, Dataset, NumericColumn

MISSING_LEVEL = "<missing>"


@dataclass(frozen=True)
class NumericRule:
    """Replay rule for one numeric column."""

    constant: float
    add_indicator: bool


@dataclass(frozen=True)
class CategoricalRule:
    """Replay rule for one categorical column: full level table for dummies."""

    levels: tuple[str, ...]
    missing_level: bool

    @property
    def encoded_levels(self) -> tuple[str, ...]:
        return self.levels + ((MISSING_LEVEL,) if self.missing_level else ())


@dataclass(frozen=True)
class ImputationRecord:
    """Per-column replay rules, aligned with the dataset's column order."""

    column_names: tuple[str, ...]
    rules: tuple[NumericRule | CategoricalRule, ...]

    @property
    def n_encoded_columns(self) -> int:
        total = 0
        for rule in self.rules:
            if isinstance(rule, NumericRule):
                total += 2 if rule.add_indicator else 1
            else:
                total += len(rule.encoded_levels)
        return total


@dataclass(frozen=True)
class ColumnSource:
    """Provenance of one encoded column."""

    kind: str  # "numeric" | "indicator" | "dummy"
    column: str
    level: str | None = None


@dataclass(frozen=True)
class EncodedMatrix:
    """Fully numeric design matrix with per-column provenance."""

    values: np.ndarray  # (n, m) float64, all finite
    provenance: tuple[ColumnSource, ...]
    row_ids: np.ndarray


def _median(values: np.ndarray) -> float:
    """Median of the observed cells; even sizes average the middle pair."""
    observed = values[~np.isnan(values)]
    return float(np.median(observed)) if observed.size else float("nan")


def fit_imputation(
    ds_slice: Dataset,
    policy: str = "node_wise",
    root_record: ImputationRecord | None = None,
) -> ImputationRecord:
    """Fit replay rules on a data slice.

    policy "node_wise" takes constants from the slice medians; "root_node"
    copies them from `root_record` (required for non-root fits). Indicator and
    missing-level creation always follow the slice's own missingness.
    """
    if ds_slice.n_rows == 0:
        raise DataError("cannot fit imputation on an empty slice")
    if policy not in ("node_wise", "root_node"):
        raise DataError(f"unknown imputation policy {policy!r}")
    if policy == "root_node" and root_record is None:
        raise DataError("root_node policy requires the root record")

    rules: list[NumericRule | CategoricalRule] = []
    for j, col in enumerate(ds_slice.columns):
        root_rule = root_record.rules[j] if root_record is not None else None
        if isinstance(col, NumericColumn):
            any_missing = bool(col.missing_mask.any())
            if policy == "root_node":
                constant = root_rule.constant
            elif not any_missing and root_rule is not None:
                # Unused for training; copying the root constant keeps the two
                # policies bit-identical on complete data.
                constant = root_rule.constant
            else:
                constant = _median(col.values)
                if np.isnan(constant):  # column entirely missing in the slice
                    constant = root_rule.constant if root_rule is not None else 0.0
            rules.append(NumericRule(constant=constant, add_indicator=any_missing))
        else:
            rules.append(
                CategoricalRule(
                    levels=col.levels,
                    missing_level=bool(col.missing_mask.any()),
                )
            )
    return ImputationRecord(tuple(ds_slice.column_names), tuple(rules))


def _encode_categorical(col: CategoricalColumn, rule: CategoricalRule) -> np.ndarray:
    """One-hot over the rule's level table; unseen levels fall back to the
    missing level when present, otherwise to an all-zero block."""
    table = rule.encoded_levels
    index = {level: i for i, level in enumerate(table)}
    missing_slot = index.get(MISSING_LEVEL, -1)
    # Map this column's own level table into the rule's table by name.
    lookup = np.array([index.get(level, missing_slot) for level in col.levels], dtype=np.int64)
    slots = np.where(col.codes >= 0, lookup[np.clip(col.codes, 0, None)], missing_slot)
    block = np.zeros((len(col.codes), len(table)), dtype=np.float64)
    keep = slots >= 0
    block[np.flatnonzero(keep), slots[keep]] = 1.0
    return block


def _as_columns(data) -> tuple:
    """Accept a Dataset or a bare sequence of feature columns."""
    if isinstance(data, Dataset):
        return data.columns
    return tuple(data)


def encode(data, rec: ImputationRecord, row_ids: np.ndarray | None = None) -> EncodedMatrix:
    """Apply a fitted record to a (possibly different) data slice.

    `data` is a Dataset or a sequence of feature columns (prediction inputs
    have no target).
    """
    columns = _as_columns(data)
    names = tuple(col.name for col in columns)
    if names != rec.column_names:
        raise DataError(
            f"schema mismatch: record columns {rec.column_names} vs data columns {names}"
        )
    blocks: list[np.ndarray] = []
    sources: list[ColumnSource] = []
    for col, rule in zip(columns, rec.rules):
        if isinstance(rule, NumericRule):
            if not isinstance(col, NumericColumn):
                raise DataError(f"column {col.name!r}: expected numeric, got categorical")
            mask = col.missing_mask
            values = np.where(mask, rule.constant, col.values)
            blocks.append(values[:, None])
            sources.append(ColumnSource("numeric", col.name))
            if rule.add_indicator:
                blocks.append(mask.astype(np.float64)[:, None])
                sources.append(ColumnSource("indicator", col.name))
        else:
            if not isinstance(col, CategoricalColumn):
                raise DataError(f"column {col.name!r}: expected categorical, got numeric")
            blocks.append(_encode_categorical(col, rule))
            sources.extend(
                ColumnSource("dummy", col.name, level) for level in rule.encoded_levels
            )
    first = columns[0]
    n = len(first.values if first.is_numeric else first.codes)
    values = np.hstack(blocks) if blocks else np.empty((n, 0), dtype=np.float64)
    if not np.isfinite(values).all():
        raise DataError("encoded matrix contains non-finite entries")
    if row_ids is None:
        row_ids = np.arange(n, dtype=np.int64)
    return EncodedMatrix(values=values, provenance=tuple(sources), row_ids=row_ids)


def record_to_json(rec: ImputationRecord) -> list[dict]:
    out = []
    for name, rule in zip(rec.column_names, rec.rules):
        if isinstance(rule, NumericRule):
            out.append(
                {
                    "name": name,
                    "kind": "numeric",
                    "constant": rule.constant,
                    "indicator": rule.add_indicator,
                }
            )
        else:
            out.append(
                {
                    "name": name,
                    "kind": "categorical",
                    "levels": list(rule.levels),
                    "missing_level": rule.missing_level,
                }
            )
    return out


def record_from_json(items: list[dict]) -> ImputationRecord:
    names, rules = [], []
    for item in items:
        names.append(item["name"])
        if item["kind"] == "numeric":
            rules.append(
                NumericRule(constant=item["constant"], add_indicator=item["indicator"])
            )
        else:
            rules.append(
                CategoricalRule(
                    levels=tuple(item["levels"]), missing_level=item["missing_level"]
                )
            )
    return ImputationRecord(tuple(names), tuple(rules))
