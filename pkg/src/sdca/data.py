"""Sparse labeled datasets: parsing, validation, normalization, inner products.

Datasets are stored row-wise (one sparse vector per example) with cached
squared norms, plus a flat CSR view used by the solver's hot loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class DataFormatError(ValueError):
    """Raised for malformed dataset text (carries the offending line number)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(eq=False)
class SparseVector:
    """One example's features as (index, value) pairs.

    Indices are 0-based, strictly increasing and free of duplicates; zero
    values are pruned on construction; all values must be finite.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and idx[0] < 0:
            raise ValueError("feature indices must be nonnegative")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise ValueError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        keep = val != 0.0
        if not keep.all():
            idx = idx[keep]
            val = val[keep]
        idx.flags.writeable = False
        val.flags.writeable = False
        self.indices = idx
        self.values = val

    def __len__(self):
        return int(self.indices.size)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )

    def norm_sq(self):
        return float(np.dot(self.values, self.values))


def dot(x: SparseVector, w) -> float:
    """Inner product of a sparse vector with a dense weight vector."""
    w = np.asarray(w, dtype=np.float64)
    if x.indices.size and int(x.indices[-1]) >= w.shape[0]:
        raise IndexError(
            f"feature index {int(x.indices[-1])} out of range for dense vector "
            f"of length {w.shape[0]}"
        )
    if not x.indices.size:
        return 0.0
    return float(np.dot(x.values, w[x.indices]))


@dataclass(eq=False)
class Example:
    """A labeled sparse example with its cached squared feature norm."""

    features: SparseVector
    label: float
    norm_sq: float = None

    def __post_init__(self):
        self.label = float(self.label)
        if not np.isfinite(self.label):
            raise ValueError("label must be finite")
        computed = self.features.norm_sq()
        if self.norm_sq is None:
            self.norm_sq = computed
        else:
            self.norm_sq = float(self.norm_sq)
            tol = 1e-12 * max(1.0, abs(computed))
            if abs(self.norm_sq - computed) > tol:
                raise ValueError(
                    f"cached norm_sq {self.norm_sq} disagrees with features ({computed})"
                )

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return self.label == other.label and self.features == other.features


@dataclass(eq=False)
class Dataset:
    """An immutable collection of sparse labeled examples.

    ``dim`` is 1 + the largest feature index. ``max_norm`` caches the largest
    example norm so the unit-ball assumption can be checked cheaply.
    """

    examples: tuple
    n: int = field(init=False)
    dim: int = field(init=False)
    max_norm: float = field(init=False)

    def __post_init__(self):
        self.examples = tuple(self.examples)
        if not self.examples:
            raise ValueError("dataset must contain at least one example")
        self.n = len(self.examples)
        max_idx = -1
        for ex in self.examples:
            if len(ex.features):
                max_idx = max(max_idx, int(ex.features.indices[-1]))
        self.dim = max(1, max_idx + 1)
        self.norms_sq = np.array([ex.norm_sq for ex in self.examples])
        self.labels = np.array([ex.label for ex in self.examples])
        self.max_norm = float(np.sqrt(self.norms_sq.max()))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, ex in enumerate(self.examples):
            indptr[i + 1] = indptr[i] + len(ex.features)
        self.indptr = indptr
        self.col_indices = np.concatenate(
            [ex.features.indices for ex in self.examples]
        ) if indptr[-1] else np.zeros(0, dtype=np.int64)
        self.col_values = np.concatenate(
            [ex.features.values for ex in self.examples]
        ) if indptr[-1] else np.zeros(0, dtype=np.float64)
        for arr in (self.norms_sq, self.labels, self.indptr,
                    self.col_indices, self.col_values):
            arr.flags.writeable = False
        self._csr = None

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n == other.n
            and self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.col_values, other.col_values)
        )

    def matrix(self):
        """The n x dim scipy CSR matrix of features (built lazily, cached)."""
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.col_values, self.col_indices, self.indptr),
                shape=(self.n, self.dim),
            )
        return self._csr

    def margins(self, w):
        """All inner products x_i . w as a dense length-n vector."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape[0] < self.dim:
            raise IndexError(
                f"dense vector of length {w.shape[0]} too short for dim {self.dim}"
            )
        return self.matrix().dot(w[: self.dim])

    def row(self, i):
        """Column indices and values of example i, as array views."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.col_indices[lo:hi], self.col_values[lo:hi]


def parse_svmlight(source) -> Dataset:
    """Parse svmlight/libsvm text (``<label> <idx>:<val> ...``, 1-based indices).

    Lines whose first non-blank character is ``#`` are skipped. Duplicate or
    non-increasing indices within a line are rejected rather than merged.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source
    examples = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataFormatError(f"invalid label token {tokens[0]!r}", lineno) from None
        if not np.isfinite(label):
            raise DataFormatError(f"non-finite label {tokens[0]!r}", lineno)
        indices = []
        values = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataFormatError(f"invalid feature token {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise DataFormatError(f"invalid feature token {tok!r}", lineno) from None
            if idx < 1:
                raise DataFormatError(f"feature index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise DataFormatError(
                    f"feature indices not strictly increasing at {tok!r}", lineno
                )
            if not np.isfinite(val):
                raise DataFormatError(f"non-finite feature value in {tok!r}", lineno)
            prev = idx
            indices.append(idx - 1)
            values.append(val)
        examples.append(Example(SparseVector(np.array(indices, dtype=np.int64),
                                             np.array(values)), label))
    if not examples:
        raise DataFormatError("no examples found")
    return Dataset(examples)


def load_svmlight(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_svmlight(fh)


def dumps_svmlight(dataset: Dataset) -> str:
    """Serialize to svmlight text; floats use repr so parsing round-trips exactly."""
    lines = []
    for ex in dataset.examples:
        parts = [repr(float(ex.label))]
        for idx, val in zip(ex.features.indices, ex.features.values):
            parts.append(f"{int(idx) + 1}:{float(val)!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def normalize_to_unit_ball(dataset: Dataset):
    """Scale all features by one global constant so that max ||x_i|| <= 1.

    Returns ``(dataset, scale)``; the input is returned unchanged with scale 1
    when it already satisfies the bound. A single global scale preserves the
    relative geometry of the examples.
    """
    scale = dataset.max_norm
    if scale <= 1.0:
        return dataset, 1.0
    examples = [
        Example(SparseVector(ex.features.indices, ex.features.values / scale), ex.label)
        for ex in dataset.examples
    ]
    return Dataset(examples), float(scale)


def dataset_from_arrays(X, y) -> Dataset:
    """Build a Dataset from a dense 2-d array or scipy sparse matrix plus labels."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if sp.issparse(X):
        X = X.tocsr()
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        X.sort_indices()
        examples = []
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            vec = SparseVector(X.indices[lo:hi].astype(np.int64),
                               X.data[lo:hi].astype(np.float64))
            examples.append(Example(vec, y[i]))
        return Dataset(examples)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-d with one row per label")
    examples = []
    for i in range(X.shape[0]):
        nz = np.nonzero(X[i])[0]
        examples.append(Example(SparseVector(nz.astype(np.int64), X[i, nz]), y[i]))
    return Dataset(examples)
