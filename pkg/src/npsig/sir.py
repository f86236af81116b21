"""Sliced inverse regression (SIR) for the model ``m(x) = g(B x)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import chi2

from .dataset import Dataset
from .errors import DataError, NullBasisError

Array = NDArray[np.float64]


@dataclass(frozen=True)
class SirConfig:
    """``num_slices`` slices; ``k`` is either ``"chi2"`` (sequential test) or a fixed int."""

    num_slices: int = 10
    k: int | str = "chi2"
    level: float = 0.05

    def __post_init__(self) -> None:
        if self.num_slices < 2:
            raise ValueError("SIR needs at least two slices")
        if isinstance(self.k, str):
            if self.k != "chi2":
                raise ValueError(f"unknown K rule {self.k!r}")
        elif self.k < 1:
            raise ValueError("fixed K must be >= 1")


@dataclass(frozen=True)
class SirBasis:
    """Rows of ``b`` are estimated directions in the original covariate scale.

    ``eigenvalues`` are those of the slice-mean covariance of the whitened
    covariates, sorted in decreasing order (one per covariate).
    """

    b: Array
    eigenvalues: Array
    k: int

    @property
    def d(self) -> int:
        return self.b.shape[1]

    def to_dict(self, names: tuple[str, ...] | None = None) -> dict:
        return {
            "k": self.k,
            "eigenvalues": self.eigenvalues.tolist(),
            "directions": self.b.tolist(),
            "columns": list(names) if names is not None else None,
        }


def _inv_sqrt(cov: Array) -> Array:
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() <= 1e-12 * max(vals.max(), 1e-300):
        raise DataError("covariate covariance matrix is singular")
    return (vecs / np.sqrt(vals)) @ vecs.T


def slice_indices(y: ArrayLike, num_slices: int) -> list[NDArray[np.intp]]:
    """Partition rows into ``num_slices`` groups of consecutive ``y`` order.

    Sizes differ by at most one, with the extra rows in the lowest slices;
    ties in ``y`` keep the original row order.
    """
    y = np.asarray(y, dtype=float)
    if num_slices > y.shape[0]:
        raise DataError(f"{num_slices} slices for {y.shape[0]} observations")
    return np.array_split(np.argsort(y, kind="stable"), num_slices)


def select_k(
    eigenvalues: ArrayLike, n: int, d: int, num_slices: int, level: float = 0.05
) -> int:
    """Smallest ``K >= 1`` whose trailing-eigenvalue chi-squared test accepts.

    For each ``K`` the statistic ``n * sum(eigenvalues[K:])`` is compared with
    the ``1 - level`` quantile of chi-squared on ``(d-K)(H-K-1)`` degrees of
    freedom. ``K`` is capped at ``min(d, H-1)``.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    cap = max(1, min(d, num_slices - 1))
    for k in range(1, cap):
        df = (d - k) * (num_slices - k - 1)
        if df <= 0:
            return k
        if n * lam[k:].sum() < chi2.ppf(1.0 - level, df):
            return k
    return cap


def sir_fit(ds: Dataset, cfg: SirConfig | None = None) -> SirBasis:
    """Estimate the SIR directions of ``ds.y`` on ``ds.x``."""
    cfg = cfg or SirConfig()
    x, y = ds.x, ds.y
    n, d = x.shape
    if cfg.num_slices > n:
        raise DataError(f"{cfg.num_slices} slices for {n} observations")
    xc = x - x.mean(axis=0)
    root = _inv_sqrt(xc.T @ xc / n)
    z = xc @ root
    m = np.zeros((d, d))
    for idx in slice_indices(y, cfg.num_slices):
        mean = z[idx].mean(axis=0)
        m += (idx.shape[0] / n) * np.outer(mean, mean)
    vals, vecs = np.linalg.eigh(m)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    vals = np.clip(vals, 0.0, None)
    if isinstance(cfg.k, str):
        k = select_k(vals, n, d, cfg.num_slices, cfg.level)
    else:
        k = min(cfg.k, d, cfg.num_slices - 1)
    b = (root @ vecs[:, :k]).T
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    # sign convention: largest-magnitude entry of each direction positive
    signs = np.sign(b[np.arange(k), np.abs(b).argmax(axis=1)])
    b *= signs[:, None]
    return SirBasis(b, vals, k)


def project(x: ArrayLike, basis: SirBasis | ArrayLike) -> Array:
    """Map rows of ``x`` (n x d) to ``x @ B'`` (n x K)."""
    x = np.asarray(x, dtype=float)
    b = basis.b if isinstance(basis, SirBasis) else np.atleast_2d(np.asarray(basis, dtype=float))
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != b.shape[1]:
        raise ValueError(f"x has {x.shape[1]} columns, basis expects {b.shape[1]}")
    return x @ b.T


def drop_column(basis: SirBasis, j: int) -> SirBasis:
    """Basis over the covariates without column ``j``.

    Directions that vanish once column ``j`` is removed are discarded and
    ``k`` shrinks accordingly. If none survive, :class:`NullBasisError` is
    raised and the caller should fall back to a marginal test.
    """
    d = basis.d
    if d < 2:
        raise ValueError("cannot drop a column from a one-column basis")
    if not 0 <= j < d:
        raise IndexError(f"column {j} out of range for d={d}")
    b = np.delete(basis.b, j, axis=1)
    before = np.linalg.norm(basis.b, axis=1)
    keep = np.linalg.norm(b, axis=1) > 1e-12 * before
    if not keep.any():
        raise NullBasisError(f"dropping column {j} leaves no nonzero direction")
    # eigenvalues describe the original fit; keep the leading d-1 for shape
    return SirBasis(b[keep], basis.eigenvalues[: d - 1], int(keep.sum()))
