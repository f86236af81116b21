"""Regression datasets: container, CSV ingestion and small column utilities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from os import PathLike
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DataError


@dataclass(frozen=True)
class Dataset:
    """Response vector ``y`` and covariate matrix ``x`` with column labels.

    Arrays are copied and marked read-only on construction.
    """

    y: NDArray[np.float64]
    x: NDArray[np.float64]
    names: tuple[str, ...]
    response: str = "y"

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float)
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 1 or x.ndim != 2:
            raise DataError("y must be a vector and x a matrix")
        n, d = x.shape
        if n < 1 or d < 1:
            raise DataError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if y.shape[0] != n:
            raise DataError(f"y has {y.shape[0]} entries but x has {n} rows")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise DataError("non-finite values in dataset")
        names = tuple(str(s) for s in self.names)
        if len(names) != d:
            raise DataError(f"{len(names)} column labels for {d} columns")
        if any(not s for s in names):
            raise DataError("empty column label")
        if len(set(names)) != d:
            raise DataError("duplicate column labels")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def index(self, name: str) -> int:
        """Column index of ``name``."""
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"no covariate column named {name!r}") from None

    def select(self, columns: Sequence[int]) -> Dataset:
        """Dataset restricted to ``columns`` (in the given order)."""
        cols = list(columns)
        return Dataset(self.y, self.x[:, cols], tuple(self.names[c] for c in cols), self.response)

    def permute_rows(self, perm: ArrayLike) -> Dataset:
        perm = np.asarray(perm)
        return Dataset(self.y[perm], self.x[perm], self.names, self.response)

    def with_y(self, y: ArrayLike) -> Dataset:
        return Dataset(np.asarray(y, dtype=float), self.x, self.names, self.response)


@dataclass(frozen=True)
class ColumnSplit:
    """Tested column ``tested`` and the ordered adjustment columns ``remaining``."""

    tested: int
    remaining: tuple[int, ...]


def split_columns(ds: Dataset | int, j: int) -> ColumnSplit:
    """Split columns into the tested column ``j`` (0-based) and the rest.

    ``ds`` may be a :class:`Dataset` or just the column count ``d``.
    """
    d = ds if isinstance(ds, int) else ds.d
    if not 0 <= j < d:
        raise IndexError(f"column index {j} out of range for d={d}")
    return ColumnSplit(j, tuple(c for c in range(d) if c != j))


def standardize(
    x: ArrayLike,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Center each column and scale it to unit sample variance (ddof=1).

    Returns ``(z, center, scale)`` with ``x == z * scale + center``.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DataError("standardize needs at least two rows")
    center = x.mean(axis=0)
    scale = x.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(scale > 0))
    if bad.size:
        raise DataError(f"constant column(s) {bad.tolist()} cannot be standardized")
    z = (x - center) / scale
    if squeeze:
        z = z[:, 0]
    return z, center, scale


def load_csv(path: str | PathLike[str], response: str) -> Dataset:
    """Read a headed, comma-separated numeric file.

    ``response`` names the response column; every other column becomes a
    covariate, in file order. Missing or non-numeric cells are rejected with
    the offending row (1-based, header is row 1) and column name.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            dup = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"{path}: duplicate header(s) {dup}")
        if any(not h for h in header):
            raise DataError(f"{path}: empty header cell")
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
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
                    v = math.nan
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {lineno}, column {name!r}: not a finite number ({cell!r})"
                    )
                values.append(v)
            rows.append(values)
    if response not in header:
        raise DataError(f"{path}: response column {response!r} not in header")
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    r = header.index(response)
    cols = [c for c in range(len(header)) if c != r]
    if not cols:
        raise DataError(f"{path}: no covariate columns besides {response!r}")
    return Dataset(data[:, r], data[:, cols], tuple(header[c] for c in cols), response)


def write_csv(ds: Dataset, path: str | PathLike[str]) -> None:
    """Write ``ds`` with the response first; floats use round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([ds.response, *ds.names])
        for yi, row in zip(ds.y, ds.x):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in row)])
