"""Loading, validation, encoding, normalization, and splitting of tabular data.

Datasets are immutable once constructed: feature/label arrays are marked
read-only so they can be shared freely across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, ContractError, DataError

STD_FLOOR = 1e-12


def _frozen_copy(arr, dtype) -> np.ndarray:
    """Read-only contiguous copy; never flips flags on a caller-owned array."""
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DatasetSchema:
    """Column layout and label encoding of a dataset."""

    n_features: int
    feature_names: tuple[str, ...]
    label_column: int | str
    n_classes: int
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if self.n_features < 1:
            raise ConfigError("schema needs at least one feature")
        if self.n_classes < 2:
            raise ConfigError("schema needs at least two classes")
        if len(self.class_names) != self.n_classes:
            raise ConfigError("class_names length must equal n_classes")
        if len(set(self.class_names)) != self.n_classes:
            raise ConfigError("class names must be unique")
        if len(self.feature_names) != self.n_features:
            raise ConfigError("feature_names length must equal n_features")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus dense integer class labels."""

    schema: DatasetSchema
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = _frozen_copy(self.features, np.float64)
        labels = _frozen_copy(self.labels, np.int64)
        if feats.ndim != 2 or feats.shape[1] != self.schema.n_features:
            raise ContractError(
                f"features must be S x {self.schema.n_features}, got shape {feats.shape}"
            )
        if labels.shape != (feats.shape[0],):
            raise ContractError("labels must be a vector with one entry per row")
        if not np.all(np.isfinite(feats)):
            raise DataError("dataset contains non-finite feature values")
        if labels.size and (labels.min() < 0 or labels.max() >= self.schema.n_classes):
            raise DataError("label index out of range for schema")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.schema.n_features

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset sharing this dataset's schema."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.schema, self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters; train_fraction must lie strictly in (0, 1)."""

    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class NormalizerState:
    """Per-feature z-score statistics fitted on the training portion only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = _frozen_copy(self.mean, np.float64)
        std = _frozen_copy(self.std, np.float64)
        if np.any(std <= 0):
            raise ContractError("standard deviations must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def _parse_feature(cell: str, line_no: int, col_name: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(
            f"line {line_no}: non-numeric value {cell!r} in feature column {col_name!r}"
        ) from None
    if not math.isfinite(value):
        raise DataError(
            f"line {line_no}: non-finite value {cell!r} in feature column {col_name!r}"
        )
    return value


def _resolve_label_column(label_column: int | str, header: list[str] | None,
                          n_columns: int) -> int:
    if isinstance(label_column, str):
        if header is None:
            raise ConfigError(
                f"label column named {label_column!r} requires a header row"
            )
        try:
            return header.index(label_column)
        except ValueError:
            raise DataError(f"label column {label_column!r} not found in header") from None
    idx = label_column
    if idx < 0:
        idx += n_columns
    if not (0 <= idx < n_columns):
        raise DataError(f"label column index {label_column} out of range for {n_columns} columns")
    return idx


def _looks_like_header(row: list[str], label_idx_hint: int | None) -> bool:
    # A row is treated as a header when any would-be feature cell fails float parsing.
    for i, cell in enumerate(row):
        if label_idx_hint is not None and i == label_idx_hint:
            continue
        try:
            float(cell)
        except ValueError:
            return True
    return False


def load_csv(
    path: str | Path,
    label_column: int | str = -1,
    delimiter: str = ",",
    has_header: bool | None = None,
    class_names: Sequence[str] | None = None,
) -> Dataset:
    """Load a delimited text file into a Dataset.

    Labels are mapped to dense indices in first-appearance order unless an
    explicit ``class_names`` ordering is given (needed when a second file,
    e.g. a predefined test split, must share the training file's encoding).
    ``has_header=None`` auto-detects a header row by attempting to parse the
    first row's feature cells as numbers.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh, delimiter=delimiter))]
    rows = [(ln, row) for ln, row in rows if row]
    if not rows:
        raise DataError(f"{path}: file contains no data rows")

    first_line, first_row = rows[0]
    n_columns = len(first_row)
    label_hint = None
    if isinstance(label_column, int):
        hint = label_column + n_columns if label_column < 0 else label_column
        if 0 <= hint < n_columns:
            label_hint = hint

    if has_header is None:
        has_header = isinstance(label_column, str) or _looks_like_header(first_row, label_hint)

    header: list[str] | None = None
    data_rows = rows
    if has_header:
        header = [c.strip() for c in first_row]
        data_rows = rows[1:]
        if not data_rows:
            raise DataError(f"{path}: no data rows after header")

    label_idx = _resolve_label_column(label_column, header, n_columns)

    if header is not None:
        feature_names = tuple(name for i, name in enumerate(header) if i != label_idx)
    else:
        feature_names = tuple(f"f{i}" for i in range(n_columns - 1))
    n_features = n_columns - 1
    if n_features < 1:
        raise DataError(f"{path}: need at least one feature column besides the label")

    class_index: dict[str, int] = {}
    if class_names is not None:
        class_index = {name: i for i, name in enumerate(class_names)}

    features = np.empty((len(data_rows), n_features), dtype=np.float64)
    labels = np.empty(len(data_rows), dtype=np.int64)
    for r, (line_no, row) in enumerate(data_rows):
        if len(row) != n_columns:
            raise DataError(
                f"line {line_no}: expected {n_columns} cells, got {len(row)}"
            )
        label_cell = row[label_idx].strip()
        if not label_cell:
            raise DataError(f"line {line_no}: empty label")
        if label_cell not in class_index:
            if class_names is not None:
                raise DataError(
                    f"line {line_no}: label {label_cell!r} not among the expected classes"
                )
            class_index[label_cell] = len(class_index)
        labels[r] = class_index[label_cell]
        c = 0
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            features[r, c] = _parse_feature(cell.strip(), line_no, feature_names[c])
            c += 1

    ordered = tuple(class_names) if class_names is not None else tuple(class_index)
    if len(ordered) < 2:
        raise DataError(f"{path}: fewer than two distinct class labels")
    schema = DatasetSchema(
        n_features=n_features,
        feature_names=feature_names,
        label_column=label_column,
        n_classes=len(ordered),
        class_names=ordered,
    )
    return Dataset(schema, features, labels)


def save_csv(dataset: Dataset, path: str | Path, delimiter: str = ",",
             label_name: str = "label") -> Path:
    """Write a Dataset as delimited text with a header row.

    Feature values are written with repr so a reload is bit-exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(list(dataset.schema.feature_names) + [label_name])
        names = dataset.schema.class_names
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [names[label]])
    return path


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition a dataset into disjoint train/test subsets.

    Deterministic for a fixed spec.seed. With stratification, each class
    contributes a train count within one sample of train_fraction and both
    sides keep at least one sample per class.
    """
    rng = np.random.default_rng(spec.seed)
    S = dataset.n_samples
    if S < 2:
        raise ConfigError("cannot split fewer than 2 samples")

    if spec.stratified:
        train_parts = []
        test_parts = []
        for c in range(dataset.schema.n_classes):
            members = np.flatnonzero(dataset.labels == c)
            if members.size < 2:
                raise ConfigError(
                    f"class {dataset.schema.class_names[c]!r} has {members.size} sample(s); "
                    "stratified splitting needs at least 2 per class"
                )
            shuffled = rng.permutation(members)
            n_train = int(round(spec.train_fraction * members.size))
            n_train = min(max(n_train, 1), members.size - 1)
            train_parts.append(shuffled[:n_train])
            test_parts.append(shuffled[n_train:])
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        shuffled = rng.permutation(S)
        n_train = int(round(spec.train_fraction * S))
        n_train = min(max(n_train, 1), S - 1)
        train_idx = np.sort(shuffled[:n_train])
        test_idx = np.sort(shuffled[n_train:])

    return dataset.take(train_idx), dataset.take(test_idx)


def fit_normalizer(train: Dataset) -> NormalizerState:
    """Per-feature mean/std from the training portion; std floored at 1e-12."""
    if train.n_samples == 0:
        raise ConfigError("cannot fit a normalizer on an empty dataset")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    return NormalizerState(mean=mean, std=np.maximum(std, STD_FLOOR))


def apply_normalizer(state: NormalizerState, dataset: Dataset) -> Dataset:
    if state.mean.shape[0] != dataset.n_features:
        raise ContractError(
            f"normalizer fitted for {state.mean.shape[0]} features, dataset has {dataset.n_features}"
        )
    transformed = (dataset.features - state.mean) / state.std
    return Dataset(dataset.schema, transformed, dataset.labels)
