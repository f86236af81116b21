"""Marginal pre-screening of covariates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .window_anova import TestResult, covariate_test


@dataclass(frozen=True)
class ScreenReport:
    pvalues: tuple[float, ...]
    kept: tuple[int, ...]
    threshold: float
    forced: bool = False  # nothing passed; the smallest p-value was kept anyway

    def to_dict(self, names: tuple[str, ...] | None = None) -> dict:
        label = (lambda j: names[j]) if names else (lambda j: j)
        return {
            "threshold": self.threshold,
            "pvalues": {str(label(j)): pv for j, pv in enumerate(self.pvalues)},
            "kept": [label(j) for j in self.kept],
            "forced": self.forced,
        }


def marginal_test(ds: Dataset, j: int, p: int = 9) -> TestResult:
    """Window test of column ``j`` against the constant-mean null."""
    return covariate_test(ds.y, ds.x[:, j], None, p)


def screen(ds: Dataset, p: int = 9, threshold: float = 0.5) -> ScreenReport:
    """Keep the columns whose marginal p-value is below ``threshold``.

    A threshold of 1 or more keeps everything. The kept set is never empty:
    if no column passes, the one with the smallest p-value (first on ties)
    is kept and ``forced`` is set.
    """
    pvals = tuple(marginal_test(ds, j, p).p_value for j in range(ds.d))
    if threshold >= 1.0:
        kept = tuple(range(ds.d))
    else:
        kept = tuple(j for j, pv in enumerate(pvals) if pv < threshold)
    forced = not kept
    if forced:
        kept = (int(np.argmin(pvals)),)
    return ScreenReport(pvals, kept, float(threshold), forced)
