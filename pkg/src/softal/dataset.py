"""Data containers, CSV ingestion and standardization.

Every other module consumes :class:`RawDataset`. A labeled dataset is simply
one whose ``response`` is not ``None``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


@dataclass(frozen=True)
class RawDataset:
    features: np.ndarray
    feature_names: tuple[str, ...]
    response: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DataError(f"dataset needs n >= 1 and p >= 1, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        names = tuple(self.feature_names)
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} columns")
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "feature_names", names)
        if self.response is not None:
            y = np.array(self.response, dtype=float).reshape(-1)
            if y.shape[0] != n:
                raise DataError(f"response length {y.shape[0]} != n = {n}")
            if not np.all(np.isfinite(y)):
                raise DataError("response contains NaN or Inf")
            y.setflags(write=False)
            object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def labeled(self) -> bool:
        return self.response is not None

    def take(self, rows) -> "RawDataset":
        """Row subset (index array or slice), keeping the response if any."""
        y = None if self.response is None else self.response[rows]
        return RawDataset(self.features[rows], self.feature_names, y)

    def unlabeled(self) -> "RawDataset":
        return RawDataset(self.features, self.feature_names, None)


def load_csv(path, response_column: Optional[str] = None) -> RawDataset:
    """Read a headered, comma-separated file of finite reals.

    Raises :class:`DataError` naming the row and column of the first bad
    cell. Row numbers are 1-based file lines (the header is line 1).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
                )
            values = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {name!r}: cannot parse {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {lineno}, column {name!r}: non-finite value {cell!r}"
                    )
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)

    if response_column is None:
        return RawDataset(table, header)
    if response_column not in header:
        raise DataError(f"{path}: response column {response_column!r} not in header")
    j = header.index(response_column)
    keep = [k for k in range(len(header)) if k != j]
    return RawDataset(
        table[:, keep], [header[k] for k in keep], table[:, j]
    )


def format_float(v: float) -> str:
    """17 significant digits: exact round-trip through ``float``."""
    return format(float(v), ".17g")


def write_table(path, header: Sequence[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(
                [format_float(v) if isinstance(v, (float, np.floating)) else v for v in row]
            )


def write_csv(path, data: RawDataset, response_column: str = "y") -> None:
    header = list(data.feature_names)
    table = data.features
    if data.response is not None:
        header.append(response_column)
        table = np.column_stack([table, data.response])
    write_table(path, header, ([float(v) for v in r] for r in table))


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        m = np.array(self.means, dtype=float).reshape(-1)
        s = np.array(self.scales, dtype=float).reshape(-1)
        if m.shape != s.shape:
            raise DataError("means and scales differ in length")
        if np.any(s <= 0):
            raise DataError("scales must be strictly positive")
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "scales", s)

    @property
    def p(self) -> int:
        return self.means.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.p:
            raise DataError(f"expected {self.p} columns, got {X.shape[-1]}")
        return (X - self.means) / self.scales

    def inverse(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.p:
            raise DataError(f"expected {self.p} columns, got {X.shape[-1]}")
        return X * self.scales + self.means


def fit_standardizer(data: RawDataset) -> Standardizer:
    """Column means and ``ddof=1`` standard deviations; constant columns get scale 1."""
    if data.n < 2:
        raise DataError(f"need at least 2 rows to fit a standardizer, got {data.n}")
    means = data.features.mean(axis=0)
    scales = data.features.std(axis=0, ddof=1)
    scales = np.where(scales > 0, scales, 1.0)
    return Standardizer(means, scales)


def standardize(data: RawDataset, s: Standardizer) -> RawDataset:
    return RawDataset(s.transform(data.features), data.feature_names, data.response)


def inverse_standardize(data: RawDataset, s: Standardizer) -> RawDataset:
    return RawDataset(s.inverse(data.features), data.feature_names, data.response)


class StreamExhausted(RuntimeError):
    pass


class LabelUnavailable(RuntimeError):
    pass


@dataclass
class StreamSource:
    """Single-consumer stream of observations whose labels stay hidden until queried.

    Each position is emitted at most once. A label can only be revealed for the
    observation most recently emitted, which enforces the online constraint
    that a discarded point's label is gone.
    """

    features: np.ndarray
    hidden_labels: np.ndarray = field(repr=False)
    cursor: int = 0
    n_queries: int = 0
    _last: int = field(default=-1, repr=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.hidden_labels = np.asarray(self.hidden_labels, dtype=float).reshape(-1)
        if self.features.ndim != 2 or self.features.shape[0] != self.hidden_labels.shape[0]:
            raise DataError("stream features and labels must align")

    @classmethod
    def from_dataset(cls, data: RawDataset) -> "StreamSource":
        if data.response is None:
            raise DataError("a stream needs (hidden) labels")
        return cls(data.features, data.response)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def remaining(self) -> int:
        return len(self) - self.cursor

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self)

    def next(self) -> tuple[int, np.ndarray]:
        """Emit the next ``(index, x)``."""
        if self.exhausted:
            raise StreamExhausted(f"stream of length {len(self)} exhausted")
        i = self.cursor
        self.cursor += 1
        self._last = i
        return i, self.features[i]

    def query(self, index: int) -> float:
        """Reveal the label of the observation just emitted."""
        if index != self._last:
            raise LabelUnavailable(
                f"label of index {index} is no longer available (last emitted {self._last})"
            )
        self.n_queries += 1
        self._last = -1
        return float(self.hidden_labels[index])

    def __iter__(self) -> Iterator[tuple[int, np.ndarray]]:
        while not self.exhausted:
            yield self.next()
