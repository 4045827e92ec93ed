"""Expression matrices, CSV ingestion, two-class views and synthetic data.

On-disk layout is one row per sample::

    sample_id,label,<feature_1>,...,<feature_n>
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """Raised when a CSV file cannot be parsed into an expression matrix."""


class ValidationError(ValueError):
    """Raised when a matrix or view violates its structural invariants."""


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    """Samples x features abundance matrix with one class tag per sample."""

    sample_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "labels", tuple(self.labels))
        self.validate()

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def validate(self):
        if self.values.ndim != 2:
            raise ValidationError("values must be a 2-d matrix")
        m, n = self.values.shape
        if len(self.sample_ids) != m or len(self.labels) != m:
            raise ValidationError(
                f"expected {m} sample ids and labels, got "
                f"{len(self.sample_ids)} and {len(self.labels)}")
        if len(self.feature_names) != n:
            raise ValidationError(
                f"expected {n} feature names, got {len(self.feature_names)}")
        _check_unique(self.sample_ids, "sample id")
        _check_unique(self.feature_names, "feature name")
        if not np.all(np.isfinite(self.values)):
            i, j = np.argwhere(~np.isfinite(self.values))[0]
            raise ValidationError(
                f"non-finite value at sample {self.sample_ids[i]!r}, "
                f"feature {self.feature_names[j]!r}")

    def classes(self) -> list[str]:
        """Distinct labels in order of first appearance."""
        return list(dict.fromkeys(self.labels))

    def log2(self) -> ExpressionMatrix:
        if np.any(self.values <= 0):
            raise ValidationError("log2 transform requires strictly positive values")
        return ExpressionMatrix(self.sample_ids, self.feature_names,
                                np.log2(self.values), self.labels)

    def __eq__(self, other):
        if not isinstance(other, ExpressionMatrix):
            return NotImplemented
        return (self.sample_ids == other.sample_ids
                and self.feature_names == other.feature_names
                and self.labels == other.labels
                and np.array_equal(self.values, other.values))


def _check_unique(names, what):
    seen = set()
    for name in names:
        if name in seen:
            raise ValidationError(f"duplicate {what}: {name!r}")
        seen.add(name)


@dataclass(frozen=True, eq=False)
class BinaryView:
    """Two-class restriction of an expression matrix.

    Holds row indices only; ``X`` and ``y`` are materialized on access.
    ``y`` is +1 for the positive (treated) class and -1 for the negative
    (control) class.
    """

    base: ExpressionMatrix
    negative_label: str
    positive_label: str
    sample_indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.sample_indices, dtype=np.intp)
        idx.setflags(write=False)
        object.__setattr__(self, "sample_indices", idx)
        labels = [self.base.labels[i] for i in idx]
        for label in (self.negative_label, self.positive_label):
            count = labels.count(label)
            if count < 2:
                raise ValidationError(
                    f"class {label!r} has {count} sample(s); at least 2 required")
        if len(labels) != labels.count(self.negative_label) + labels.count(self.positive_label):
            raise ValidationError("view contains samples outside its two classes")

    @property
    def m(self) -> int:
        return len(self.sample_indices)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def X(self) -> np.ndarray:
        return self.base.values[self.sample_indices]

    @property
    def y(self) -> np.ndarray:
        labels = np.asarray(self.base.labels, dtype=object)[self.sample_indices]
        return np.where(labels == self.positive_label, 1, -1).astype(np.int64)

    def without(self, position: int) -> BinaryView:
        """View with the sample at ``position`` (0-based, within the view) dropped."""
        if not 0 <= position < self.m:
            raise IndexError(f"position {position} outside view of {self.m} samples")
        keep = np.delete(self.sample_indices, position)
        return BinaryView(self.base, self.negative_label, self.positive_label, keep)


def binary_view(matrix: ExpressionMatrix, negative: str, positive: str) -> BinaryView:
    """Restrict ``matrix`` to the samples tagged ``negative`` or ``positive``.

    Row order of the base matrix is preserved.
    """
    if negative == positive:
        raise ValidationError("negative and positive classes must differ")
    present = set(matrix.labels)
    for tag in (negative, positive):
        if tag not in present:
            raise ValidationError(f"unknown class tag {tag!r}; have {sorted(present)}")
    idx = [i for i, lab in enumerate(matrix.labels) if lab in (negative, positive)]
    return BinaryView(matrix, negative, positive, np.array(idx, dtype=np.intp))


def load_csv(path) -> ExpressionMatrix:
    """Read an expression matrix from ``path``.

    Raises
    ------
    DataFormatError
        Malformed header or a cell that does not parse as a finite real.
    ValidationError
        Duplicate sample ids or feature names.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if len(header) < 3:
            raise DataFormatError(f"{path}: header needs sample_id, label and at least one feature")
        for col, expected in enumerate(("sample_id", "label")):
            if header[col].strip() != expected:
                raise DataFormatError(
                    f"{path}: header column {col + 1} is {header[col]!r}, expected {expected!r}")
        features = [h.strip() for h in header[2:]]
        for col, name in enumerate(features, start=3):
            if not name:
                raise DataFormatError(f"{path}: empty feature name in header column {col}")
        _check_unique(features, "feature name")

        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            ids.append(row[0].strip())
            labels.append(row[1].strip())
            values = []
            for col, cell in enumerate(row[2:]):
                try:
                    v = float(cell)
                except ValueError:
                    v = float("nan")
                if not np.isfinite(v):
                    raise DataFormatError(
                        f"{path}: non-numeric cell {cell!r} at line {lineno}, "
                        f"column {features[col]!r}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no sample rows")
    return ExpressionMatrix(ids, features, np.array(rows), labels)


def write_csv(matrix: ExpressionMatrix, path) -> None:
    """Write ``matrix`` in the layout read by :func:`load_csv`.

    Floats are written with ``repr`` so that a reload is bit-exact.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label", *matrix.feature_names])
        for sid, label, row in zip(matrix.sample_ids, matrix.labels, matrix.values):
            writer.writerow([sid, label, *(repr(float(v)) for v in row)])


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the planted-biomarker generator.

    ``effect_size`` is the treated-minus-control mean shift of each planted
    feature in units of the within-class standard deviation (which is 1).
    """

    m_per_class: int = 10
    n: int = 1000
    n_planted: int = 30
    effect_size: float = 2.0
    correlation_block: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.m_per_class < 2:
            raise ValueError("m_per_class must be at least 2")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.n_planted <= self.n:
            raise ValueError("n_planted must lie in [0, n]")
        if not self.effect_size >= 0:
            raise ValueError("effect_size must be non-negative")
        if self.correlation_block < 1:
            raise ValueError("correlation_block must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


BLOCK_LOADING = 0.7
NEGATIVE_TAG = "control"
POSITIVE_TAG = "treated"


def synthesize(spec: SynthSpec) -> ExpressionMatrix:
    """Draw a two-class dataset with ``spec.n_planted`` planted biomarkers.

    Features ``0..n_planted-1`` are named ``planted_*`` and have their
    treated-class mean shifted by ``effect_size``. Within each class every
    feature has unit variance; features in the same block of
    ``correlation_block`` consecutive columns share a latent factor with
    loading 0.7.
    """
    rng = np.random.default_rng(spec.seed)
    m = 2 * spec.m_per_class
    noise = rng.standard_normal((m, spec.n))
    if spec.correlation_block > 1:
        n_blocks = -(-spec.n // spec.correlation_block)
        latent = rng.standard_normal((m, n_blocks))
        block_of = np.arange(spec.n) // spec.correlation_block
        noise = BLOCK_LOADING * latent[:, block_of] + np.sqrt(1 - BLOCK_LOADING**2) * noise
    y = np.repeat([0, 1], spec.m_per_class)
    noise[:, :spec.n_planted] += spec.effect_size * y[:, None]

    width = len(str(max(spec.n - 1, 1)))
    names = [f"planted_{j:0{width}d}" if j < spec.n_planted else f"feature_{j:0{width}d}"
             for j in range(spec.n)]
    sid_width = len(str(m - 1))
    ids = [f"s{i:0{sid_width}d}" for i in range(m)]
    labels = [POSITIVE_TAG if t else NEGATIVE_TAG for t in y]
    return ExpressionMatrix(ids, names, noise, labels)


def planted_indices(matrix: ExpressionMatrix) -> list[int]:
    return [j for j, name in enumerate(matrix.feature_names) if name.startswith("planted_")]
