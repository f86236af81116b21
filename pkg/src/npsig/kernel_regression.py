"""Nadaraya-Watson regression with a diagonal bandwidth.

The kernel is a product of univariate profiles; only the ratio of kernel
sums enters the estimator, so the ``|H|^{-1}`` normalisation is dropped.
Points whose kernel mass is zero are predicted by the mean of the available
responses and counted as fallbacks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

Array = NDArray[np.float64]

# Theory for the test statistic covers at most four adjustment dimensions.
MAX_THEORY_DIM = 4


def _uniform(u: Array) -> Array:
    return (np.abs(u) <= 0.5).astype(float)


def _epanechnikov(u: Array) -> Array:
    # rescaled to support (-0.5, 0.5)
    return np.clip(1.0 - 4.0 * u * u, 0.0, None) * 1.5


_PROFILES: dict[str, Callable[[Array], Array]] = {
    "uniform": _uniform,
    "epanechnikov": _epanechnikov,
}


@dataclass(frozen=True)
class KernelSpec:
    """Univariate kernel profile applied coordinatewise.

    ``family`` picks a built-in profile; a custom ``profile`` callable may be
    supplied instead. Profiles must vanish outside ``[-half_width, half_width]``.
    """

    family: str = "uniform"
    half_width: float = 0.5
    profile: Callable[[Array], Array] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.profile is None and self.family not in _PROFILES:
            raise ValueError(f"unknown kernel family {self.family!r}")

    def __call__(self, u: Array) -> Array:
        f = self.profile if self.profile is not None else _PROFILES[self.family]
        return f(u)


UNIFORM = KernelSpec()


@dataclass(frozen=True)
class Bandwidth:
    """Diagonal bandwidth: one positive scale per coordinate."""

    lambdas: tuple[float, ...]

    def __post_init__(self) -> None:
        lam = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lambdas, dtype=float)))
        if not lam:
            raise ValueError("bandwidth needs at least one coordinate")
        if not all(np.isfinite(v) and v > 0 for v in lam):
            raise ValueError(f"bandwidths must be positive and finite, got {lam}")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def of(cls, h: Bandwidth | float | Sequence[float], q: int | None = None) -> Bandwidth:
        """Coerce a scalar (broadcast to ``q`` coordinates) or sequence."""
        if isinstance(h, Bandwidth):
            bw = h
        elif np.ndim(h) == 0:
            bw = cls((float(h),) * (q or 1))
        else:
            bw = cls(tuple(h))
        if q is not None and len(bw.lambdas) != q:
            raise ValueError(f"bandwidth has {len(bw.lambdas)} coordinates, data has {q}")
        return bw

    def as_array(self) -> Array:
        return np.array(self.lambdas)

    def __len__(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class NwFit:
    fitted: Array
    residuals: Array
    bandwidth: Bandwidth
    fallback_count: int


def _as_design(x: ArrayLike) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("design must be a vector or a matrix")
    return x


def _check_dim(q: int) -> None:
    if q > MAX_THEORY_DIM:
        warnings.warn(
            f"kernel fit in {q} dimensions; the null distribution is only justified for "
            f"at most {MAX_THEORY_DIM}",
            RuntimeWarning,
            stacklevel=3,
        )


def kernel_matrix(
    points: Array, x: Array, h: Bandwidth, kernel: KernelSpec = UNIFORM
) -> Array:
    """``K[a, j] = prod_k kernel((points[a, k] - x[j, k]) / lambda_k)``."""
    lam = h.as_array()
    out = np.ones((points.shape[0], x.shape[0]))
    for k in range(x.shape[1]):
        out *= kernel((points[:, k, None] - x[None, :, k]) / lam[k])
    return out


def _weighted_mean(kmat: Array, y: Array, fallback: Array | float) -> tuple[Array, int]:
    den = kmat.sum(axis=1)
    num = kmat @ y
    empty = den <= 0
    safe = np.where(empty, 1.0, den)
    pred = np.where(empty, fallback, num / safe)
    return pred, int(empty.sum())


def nw_fit(
    x1: ArrayLike,
    y: ArrayLike,
    h: Bandwidth | float | Sequence[float],
    kernel: KernelSpec = UNIFORM,
) -> NwFit:
    """In-sample Nadaraya-Watson fit (each point keeps its own weight)."""
    x1 = _as_design(x1)
    y = np.asarray(y, dtype=float)
    n, q = x1.shape
    if n < 2:
        raise ValueError("nw_fit needs n >= 2")
    if y.shape != (n,):
        raise ValueError("y length does not match the design")
    h = Bandwidth.of(h, q)
    _check_dim(q)
    fitted, fb = _weighted_mean(kernel_matrix(x1, x1, h, kernel), y, float(np.mean(y)))
    return NwFit(fitted, y - fitted, h, fb)


def nw_predict(
    x1: ArrayLike,
    y: ArrayLike,
    h: Bandwidth | float | Sequence[float],
    points: ArrayLike,
    kernel: KernelSpec = UNIFORM,
) -> Array:
    """Nadaraya-Watson prediction at arbitrary ``points`` (m x q)."""
    x1 = _as_design(x1)
    y = np.asarray(y, dtype=float)
    pts = _as_design(points)
    if pts.shape[1] != x1.shape[1]:
        raise ValueError("points and design have different dimensions")
    h = Bandwidth.of(h, x1.shape[1])
    pred, _ = _weighted_mean(kernel_matrix(pts, x1, h, kernel), y, float(np.mean(y)))
    return pred


def default_grid(x1: ArrayLike, size: int = 20, lo: float = 0.25, hi: float = 4.0) -> list[Bandwidth]:
    """Log-spaced multiples of ``sd_k * n**(-1/(4+q))`` per coordinate.

    Columns with zero spread get scale 1 so the grid stays valid.
    """
    x1 = _as_design(x1)
    n, q = x1.shape
    sd = x1.std(axis=0, ddof=1) if n > 1 else np.ones(q)
    sd = np.where(sd > 0, sd, 1.0)
    base = sd * n ** (-1.0 / (4 + q))
    return [Bandwidth(tuple(base * c)) for c in np.geomspace(lo, hi, size)]


def loo_cv_scores(
    x1: ArrayLike, y: ArrayLike, grid: Sequence[Bandwidth], kernel: KernelSpec = UNIFORM
) -> Array:
    """Leave-one-out squared prediction error for each grid element."""
    x1 = _as_design(x1)
    y = np.asarray(y, dtype=float)
    n = x1.shape[0]
    if n < 2:
        raise ValueError("leave-one-out needs n >= 2")
    loo_mean = (y.sum() - y) / (n - 1)
    diffs = [x1[:, k, None] - x1[None, :, k] for k in range(x1.shape[1])]
    scores = np.empty(len(grid))
    for g, h in enumerate(grid):
        lam = Bandwidth.of(h, x1.shape[1]).as_array()
        kmat = np.ones((n, n))
        for k, dk in enumerate(diffs):
            kmat *= kernel(dk / lam[k])
        np.fill_diagonal(kmat, 0.0)
        pred, _ = _weighted_mean(kmat, y, loo_mean)
        r = y - pred
        scores[g] = r @ r
    return scores


def loo_cv_bandwidth(
    x1: ArrayLike,
    y: ArrayLike,
    kernel: KernelSpec = UNIFORM,
    grid: Sequence[Bandwidth] | None = None,
) -> Bandwidth:
    """Grid element minimising the leave-one-out CV score.

    Scores equal up to rounding count as ties, which go to the
    lexicographically smallest bandwidth.
    """
    x1 = _as_design(x1)
    y = np.asarray(y, dtype=float)
    if grid is None:
        grid = default_grid(x1)
    grid = [Bandwidth.of(h, x1.shape[1]) for h in grid]
    if not grid:
        raise ValueError("empty bandwidth grid")
    _check_dim(x1.shape[1])
    scores = loo_cv_scores(x1, y, grid, kernel)
    tol = 1e-12 * (abs(scores.min()) + float(y @ y)) + 1e-300
    tied = [h for h, s in zip(grid, scores) if s <= scores.min() + tol]
    return min(tied, key=lambda h: h.lambdas)


def marginal_integration_fit(
    x1: ArrayLike | None,
    x2: ArrayLike,
    y: ArrayLike,
    h_full: Bandwidth | float | Sequence[float],
    kernel: KernelSpec = UNIFORM,
) -> NwFit:
    """Fit that averages the full-dimensional NW surface over ``x2``.

    The fitted value at row ``i`` is ``mean_l mhat(x1[i], x2[l])`` where
    ``mhat`` is the Nadaraya-Watson fit on ``(x1, x2)``. ``h_full`` carries
    the ``x1`` bandwidths followed by the one for ``x2``.
    """
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float)
    n = x2.shape[0]
    x1 = np.empty((n, 0)) if x1 is None else _as_design(x1)
    q = x1.shape[1]
    if n < 2:
        raise ValueError("marginal_integration_fit needs n >= 2")
    if x1.shape[0] != n or y.shape != (n,):
        raise ValueError("inconsistent lengths")
    h = Bandwidth.of(h_full, q + 1)
    _check_dim(q + 1)
    lam = h.as_array()
    a = kernel_matrix(x1, x1, Bandwidth(tuple(lam[:q])), kernel) if q else np.ones((n, n))
    b = kernel((x2[:, None] - x2[None, :]) / lam[q])
    # surface[i, l] = mhat(x1[i], x2[l])
    num = a @ (y[:, None] * b.T)
    den = a @ b.T
    empty = den <= 0
    surface = np.where(empty, np.mean(y), num / np.where(empty, 1.0, den))
    fitted = surface.mean(axis=1)
    return NwFit(fitted, y - fitted, h, int(empty.any(axis=1).sum()))
