"""Backward-elimination variable selection with Benjamini-Yekutieli cutoffs.

Each round tests every surviving covariate with the window ANOVA test,
adjusting for the others through their SIR projection, then applies the
BY step-up rule to the round's p-values. If all survivors pass, selection
stops; otherwise the covariate with the largest p-value is dropped and its
column is deleted from the SIR basis (which is not refitted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .dataset import Dataset
from .errors import NullBasisError
from .kernel_regression import UNIFORM, KernelSpec
from .screening import ScreenReport, marginal_test, screen
from .sir import SirBasis, SirConfig, drop_column, project, sir_fit
from .window_anova import TestResult, covariate_test


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.06
    p: int = 9
    screen: bool = True
    screen_threshold: float = 0.5
    sir: bool = True
    sir_config: SirConfig = field(default_factory=SirConfig)
    estimator: str = "nw"
    bandwidth: str | float | tuple[float, ...] = "auto"
    kernel: KernelSpec = UNIFORM

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.p < 3 or self.p % 2 == 0:
            raise ValueError(f"cell size p must be an odd integer >= 3, got {self.p}")
        if self.estimator not in ("nw", "mi"):
            raise ValueError(f"unknown estimator {self.estimator!r}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "p": self.p,
            "screen": self.screen,
            "screen_threshold": self.screen_threshold,
            "sir": self.sir,
            "num_slices": self.sir_config.num_slices,
            "k_rule": self.sir_config.k,
            "estimator": self.estimator,
            "bandwidth": self.bandwidth if isinstance(self.bandwidth, str) else list(np.atleast_1d(self.bandwidth)),
            "kernel": self.kernel.family,
        }


def by_cutoffs(d: int, alpha: float) -> np.ndarray:
    """Step-up cutoffs ``(j/d) * alpha / sum_{l<=d} 1/l`` for ``j = 1..d``."""
    harmonic = math.fsum(1.0 / l for l in range(1, d + 1))
    return np.arange(1, d + 1) / d * (alpha / harmonic)


def by_threshold(pvalues: ArrayLike, alpha: float) -> int:
    """Largest ``j`` with the ``j``-th smallest p-value at or below its cutoff (0 if none).

    ``alpha = 0`` rejects nothing, even p-values that underflowed to 0.
    """
    pv = np.asarray(pvalues, dtype=float).reshape(-1)
    if pv.size == 0:
        raise ValueError("no p-values")
    if not np.all((pv >= 0) & (pv <= 1)):
        raise ValueError("p-values must lie in [0, 1]")
    if alpha <= 0:
        return 0
    ok = np.flatnonzero(np.sort(pv) <= by_cutoffs(pv.size, alpha))
    return int(ok[-1] + 1) if ok.size else 0


@dataclass(frozen=True)
class RoundRecord:
    survivors: tuple[int, ...]
    pvalues: tuple[float, ...]
    k: int
    cutoffs: tuple[float, ...]
    dropped: int | None
    marginal_fallbacks: tuple[int, ...] = ()


@dataclass(frozen=True)
class SelectionTrace:
    names: tuple[str, ...]
    rounds: tuple[RoundRecord, ...]
    selected: tuple[int, ...]
    screened: tuple[int, ...]
    screen_report: ScreenReport | None
    basis: SirBasis | None

    @property
    def dropped(self) -> tuple[int, ...]:
        return tuple(r.dropped for r in self.rounds if r.dropped is not None)

    @property
    def selected_names(self) -> tuple[str, ...]:
        return tuple(self.names[j] for j in self.selected)

    def to_dict(self) -> dict:
        nm = self.names
        return {
            "screen": self.screen_report.to_dict(nm) if self.screen_report else None,
            "sir": self.basis.to_dict(tuple(nm[j] for j in self.screened)) if self.basis else None,
            "rounds": [
                {
                    "survivors": [nm[j] for j in r.survivors],
                    "pvalues": {nm[j]: pv for j, pv in zip(r.survivors, r.pvalues)},
                    "k": r.k,
                    "cutoffs": list(r.cutoffs),
                    "dropped": nm[r.dropped] if r.dropped is not None else None,
                    "marginal_fallbacks": [nm[j] for j in r.marginal_fallbacks],
                }
                for r in self.rounds
            ],
            "selected": [nm[j] for j in self.selected],
        }


def _test(
    ds: Dataset, basis: SirBasis | None, j: int, cfg: SelectionConfig, marginal_only: bool = False
) -> tuple[TestResult, bool]:
    if ds.d == 1 or marginal_only:
        return marginal_test(ds, j, cfg.p), True
    rest = [c for c in range(ds.d) if c != j]
    if basis is None:
        adjust = ds.x[:, rest]
    else:
        try:
            adjust = project(ds.x[:, rest], drop_column(basis, j))
        except NullBasisError:
            return marginal_test(ds, j, cfg.p), True
    res = covariate_test(
        ds.y,
        ds.x[:, j],
        adjust,
        cfg.p,
        estimator=cfg.estimator,
        bandwidth=cfg.bandwidth,
        kernel=cfg.kernel,
    )
    return res, False


def test_variable(
    ds: Dataset, basis: SirBasis | None, j: int, cfg: SelectionConfig | None = None
) -> TestResult:
    """Test column ``j`` of ``ds`` given the other columns' projection on ``basis``.

    ``basis`` must be over the columns of ``ds``; ``None`` adjusts for the raw
    columns. Falls back to the marginal test when ``ds`` has one column or
    the reduced basis is null.
    """
    return _test(ds, basis, j, cfg or SelectionConfig())[0]


test_variable.__test__ = False  # type: ignore[attr-defined]


def backward_eliminate(ds: Dataset, cfg: SelectionConfig | None = None) -> SelectionTrace:
    """Run screening, SIR and BY backward elimination on ``ds``."""
    cfg = cfg or SelectionConfig()
    report = None
    survivors = list(range(ds.d))
    if cfg.screen and ds.d > 1:
        report = screen(ds, cfg.p, cfg.screen_threshold)
        survivors = list(report.kept)
    screened = tuple(survivors)

    basis = None
    if cfg.sir and len(survivors) > 1:
        basis = sir_fit(ds.select(survivors), cfg.sir_config)
    initial_basis = basis
    marginal_only = False

    rounds: list[RoundRecord] = []
    while survivors:
        sub = ds.select(survivors)
        results = [_test(sub, basis, j, cfg, marginal_only) for j in range(sub.d)]
        pvals = tuple(r.p_value for r, _ in results)
        m = len(survivors)
        k = by_threshold(pvals, cfg.alpha)
        fallbacks = tuple(c for c, (_, fb) in zip(survivors, results) if fb and m > 1)
        cut = tuple(by_cutoffs(m, cfg.alpha).tolist())
        if k == m:
            rounds.append(RoundRecord(tuple(survivors), pvals, k, cut, None, fallbacks))
            break
        worst = max(range(m), key=lambda i: (pvals[i], survivors[i]))
        dropped = survivors[worst]
        rounds.append(RoundRecord(tuple(survivors), pvals, k, cut, dropped, fallbacks))
        del survivors[worst]
        if basis is not None and len(survivors) >= 1 and not marginal_only:
            try:
                basis = drop_column(basis, worst)
            except NullBasisError:
                basis, marginal_only = None, True
    return SelectionTrace(ds.names, tuple(rounds), tuple(survivors), screened, report, initial_basis)


def selection_frequencies(
    ds: Dataset, cfg: SelectionConfig, slices: Sequence[int]
) -> dict:
    """Selection counts per covariate over a sweep of SIR slice counts."""
    counts = np.zeros(ds.d, dtype=int)
    k_gt_1 = 0
    per_setting = []
    for h in slices:
        c = SelectionConfig(**{**cfg.__dict__, "sir_config": SirConfig(h, cfg.sir_config.k, cfg.sir_config.level)})
        trace = backward_eliminate(ds, c)
        counts[list(trace.selected)] += 1
        k = trace.basis.k if trace.basis is not None else None
        k_gt_1 += int(k is not None and k > 1)
        per_setting.append({"slices": int(h), "k": k, "selected": list(trace.selected_names)})
    return {
        "settings": len(slices),
        "counts": {name: int(cnt) for name, cnt in zip(ds.names, counts)},
        "k_greater_than_one": k_gt_1,
        "per_setting": per_setting,
    }
