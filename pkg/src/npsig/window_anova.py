"""Window ANOVA significance test for one covariate.

Residuals from a fit that ignores the tested covariate are grouped into
overlapping nearest-neighbour windows along that covariate. Each window is
treated as a cell of a balanced one-way ANOVA; ``MST - MSE`` measures how
much the residual mean moves with the covariate and is standardised with a
local fourth-moment estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from .dataset import ColumnSplit, Dataset
from .errors import DataError
from .kernel_regression import (
    UNIFORM,
    Bandwidth,
    KernelSpec,
    default_grid,
    loo_cv_bandwidth,
    marginal_integration_fit,
    nw_fit,
)

Array = NDArray[np.float64]
Estimator = Literal["nw", "mi"]


def variance_constant(p: int) -> float:
    """Null variance factor ``2p(2p-1) / (3(p-1))`` of ``sqrt(n)(MST-MSE) / tau``."""
    return 2.0 * p * (2 * p - 1) / (3.0 * (p - 1))


@dataclass(frozen=True)
class WindowLayout:
    """Windows over the sorted tested covariate.

    ``order`` sorts the covariate ascending (stable, so ties keep their
    original order). ``windows[i]`` lists the ranks (positions in sorted
    order) of the ``p`` members of cell ``i``; there are ``N = n - p + 1``
    cells, one per interior rank.
    """

    order: NDArray[np.intp]
    p: int
    windows: NDArray[np.intp]

    @property
    def n(self) -> int:
        return self.order.shape[0]

    @property
    def cells(self) -> int:
        return self.windows.shape[0]

    @property
    def interior(self) -> range:
        half = (self.p - 1) // 2
        return range(half, self.n - half)

    def members(self) -> NDArray[np.intp]:
        """Windows expressed as original row indices."""
        return self.order[self.windows]


def build_windows(x2: ArrayLike, p: int) -> WindowLayout:
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    n = x2.shape[0]
    if p % 2 == 0 or p < 3:
        raise ValueError(f"cell size p must be an odd integer >= 3, got {p}")
    if p > n:
        raise ValueError(f"cell size p={p} exceeds sample size n={n}")
    order = np.argsort(x2, kind="stable")
    windows = np.arange(n - p + 1)[:, None] + np.arange(p)[None, :]
    return WindowLayout(order, p, windows)


def augmented_vector(residuals: ArrayLike, layout: WindowLayout) -> Array:
    """Concatenate the residuals of every window, cells in sorted order."""
    r = np.asarray(residuals, dtype=float)
    if r.shape != (layout.n,):
        raise ValueError(f"{r.shape[0]} residuals for a layout over n={layout.n}")
    return r[layout.order][layout.windows].ravel()


def _cells(xi_v: ArrayLike, n_cells: int, p: int) -> Array:
    xi = np.asarray(xi_v, dtype=float)
    if n_cells < 2:
        raise ValueError("need at least two cells")
    if p < 2:
        raise ValueError("need at least two observations per cell")
    if xi.shape != (n_cells * p,):
        raise ValueError(f"vector of length {xi.shape} is not {n_cells} cells of {p}")
    return xi.reshape(n_cells, p)


def mst_mse(xi_v: ArrayLike, n_cells: int, p: int) -> tuple[float, float]:
    """Balanced one-way ANOVA mean squares (treatment, error)."""
    cells = _cells(xi_v, n_cells, p)
    means = cells.mean(axis=1)
    mst = p * float(np.sum((means - means.mean()) ** 2)) / (n_cells - 1)
    mse = float(np.sum((cells - means[:, None]) ** 2)) / (n_cells * (p - 1))
    return mst, mse


def quadratic_form_oracle(xi_v: ArrayLike, n_cells: int, p: int) -> float:
    """``MST - MSE`` evaluated as an explicit quadratic form ``xi' A xi``.

    Dense and O((N p)^2); meant for checking :func:`mst_mse`.
    """
    xi = _cells(xi_v, n_cells, p).ravel()
    N = n_cells
    m = N * p
    a = (
        (N * p - 1) / (N * (N - 1) * p * (p - 1)) * np.kron(np.eye(N), np.ones((p, p)))
        - 1.0 / (N * (N - 1) * p) * np.ones((m, m))
        - 1.0 / (N * (p - 1)) * np.eye(m)
    )
    return float(xi @ a @ xi)


def rice_tau_sq(residuals_sorted: ArrayLike) -> float:
    """Local fourth-moment estimate from products of adjacent squared differences.

    ``residuals_sorted`` must be ordered by the tested covariate.
    """
    r = np.asarray(residuals_sorted, dtype=float)
    n = r.shape[0]
    if n < 4:
        raise ValueError("need at least four residuals")
    d2 = np.diff(r) ** 2
    # pairs (r[j]-r[j-1])^2 * (r[j+2]-r[j+1])^2, j = 1..n-3 zero-based
    return float(np.sum(d2[:-2] * d2[2:])) / (4.0 * (n - 3))


def normal_sf(z: float) -> float:
    """Upper-tail standard normal probability ``1 - Phi(z)``."""
    return float(ndtr(-z))


@dataclass(frozen=True)
class TestResult:
    stat: float
    mst: float
    mse: float
    tau_sq: float
    z: float
    p_value: float
    n: int
    p: int
    bandwidth: tuple[float, ...] | None
    variance_constant: float
    estimator: str

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "stat": self.stat,
            "mst": self.mst,
            "mse": self.mse,
            "tau_sq": self.tau_sq,
            "z": self.z,
            "p_value": self.p_value,
            "n": self.n,
            "p": self.p,
            "bandwidth": list(self.bandwidth) if self.bandwidth is not None else None,
            "variance_constant": self.variance_constant,
            "estimator": self.estimator,
        }


def standardized_z(stat: float, tau_sq: float, n: int, c: float) -> float:
    """``sqrt(n) * stat / sqrt(c * tau_sq)`` with the degenerate limits spelled out."""
    if tau_sq > 0:
        return math.sqrt(n) * stat / math.sqrt(c * tau_sq)
    if stat == 0:
        return 0.0
    return math.copysign(math.inf, stat)


def residual_test(
    residuals: ArrayLike,
    x2: ArrayLike,
    p: int,
    *,
    bandwidth: tuple[float, ...] | None = None,
    estimator: str = "nw",
    constant: float | None = None,
) -> TestResult:
    """Window test on precomputed null residuals."""
    r = np.asarray(residuals, dtype=float)
    layout = build_windows(x2, p)
    n = layout.n
    if n <= p:
        raise ValueError(f"need n > p, got n={n}, p={p}")
    mst, mse = mst_mse(augmented_vector(r, layout), layout.cells, p)
    tau_sq = rice_tau_sq(r[layout.order])
    c = variance_constant(p) if constant is None else float(constant)
    stat = mst - mse
    z = standardized_z(stat, tau_sq, n, c)
    return TestResult(stat, mst, mse, tau_sq, z, normal_sf(z), n, p, bandwidth, c, estimator)


def null_residuals(
    y: ArrayLike,
    x2: ArrayLike,
    adjust: ArrayLike | None,
    *,
    estimator: Estimator = "nw",
    bandwidth: Bandwidth | float | Sequence[float] | str = "auto",
    kernel: KernelSpec = UNIFORM,
) -> tuple[Array, tuple[float, ...] | None]:
    """Residuals of ``y`` under the null that it does not depend on ``x2``.

    With no adjustment columns the null fit is the sample mean. The NW fit
    uses ``adjust`` only; the marginal-integration fit uses ``(adjust, x2)``
    and averages over ``x2``. ``bandwidth="auto"`` selects by leave-one-out
    CV over the default grid of the design actually smoothed.
    """
    y = np.asarray(y, dtype=float)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if np.ptp(y) == 0:
        return np.zeros_like(y), None
    if adjust is None or np.asarray(adjust).size == 0:
        return y - y.mean(), None
    x1 = np.asarray(adjust, dtype=float)
    if x1.ndim == 1:
        x1 = x1[:, None]
    if estimator == "nw":
        h = loo_cv_bandwidth(x1, y, kernel) if _auto(bandwidth) else bandwidth
        fit = nw_fit(x1, y, h, kernel)
    elif estimator == "mi":
        full = np.column_stack([x1, x2])
        h = (
            loo_cv_bandwidth(full, y, kernel, default_grid(full))
            if _auto(bandwidth)
            else bandwidth
        )
        fit = marginal_integration_fit(x1, x2, y, h, kernel)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return fit.residuals, fit.bandwidth.lambdas


def _auto(bandwidth: object) -> bool:
    return isinstance(bandwidth, str) and bandwidth == "auto"


def covariate_test(
    y: ArrayLike,
    x2: ArrayLike,
    adjust: ArrayLike | None,
    p: int = 9,
    *,
    estimator: Estimator = "nw",
    bandwidth: Bandwidth | float | Sequence[float] | str = "auto",
    kernel: KernelSpec = UNIFORM,
    constant: float | None = None,
) -> TestResult:
    """Test that ``E[y | adjust, x2]`` does not depend on ``x2``."""
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    n = x2.shape[0]
    if n <= p:
        raise DataError(f"need more observations than the cell size (n={n}, p={p})")
    if np.unique(x2).shape[0] < p:
        raise DataError(f"tested covariate has fewer than p={p} distinct values")
    r, bw = null_residuals(
        y, x2, adjust, estimator=estimator, bandwidth=bandwidth, kernel=kernel
    )
    return residual_test(r, x2, p, bandwidth=bw, estimator=estimator, constant=constant)


def anova_test(
    ds: Dataset,
    split: ColumnSplit,
    p: int = 9,
    h: Bandwidth | float | Sequence[float] | str = "auto",
    estimator: Estimator = "nw",
    *,
    kernel: KernelSpec = UNIFORM,
    constant: float | None = None,
) -> TestResult:
    """Test column ``split.tested`` adjusting nonparametrically for ``split.remaining``."""
    adjust = ds.x[:, list(split.remaining)] if split.remaining else None
    return covariate_test(
        ds.y,
        ds.x[:, split.tested],
        adjust,
        p,
        estimator=estimator,
        bandwidth=h,
        kernel=kernel,
        constant=constant,
    )
