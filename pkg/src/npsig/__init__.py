"""Nonparametric significance testing and variable selection for regression.

The central routine is a window ANOVA test of whether one covariate affects
the regression function once the others are accounted for by a kernel fit.
Backward elimination with Benjamini-Yekutieli cutoffs turns the resulting
p-values into a variable selector.
"""

__version__ = "0.1.0"

from .dataset import ColumnSplit, Dataset, load_csv, split_columns, standardize, write_csv
from .errors import DataError, NpsigError, NullBasisError, NumericError
from .kernel_regression import (
    Bandwidth,
    KernelSpec,
    NwFit,
    loo_cv_bandwidth,
    marginal_integration_fit,
    nw_fit,
    nw_predict,
)
from .screening import ScreenReport, marginal_test, screen
from .selection import (
    SelectionConfig,
    SelectionTrace,
    backward_eliminate,
    by_threshold,
    test_variable,
)
from .sir import SirBasis, SirConfig, drop_column, project, select_k, sir_fit
from .window_anova import (
    TestResult,
    WindowLayout,
    anova_test,
    augmented_vector,
    build_windows,
    covariate_test,
    mst_mse,
    normal_sf,
    quadratic_form_oracle,
    rice_tau_sq,
)

__all__ = [
    "Bandwidth",
    "ColumnSplit",
    "DataError",
    "Dataset",
    "KernelSpec",
    "NpsigError",
    "NullBasisError",
    "NumericError",
    "NwFit",
    "ScreenReport",
    "SelectionConfig",
    "SelectionTrace",
    "SirBasis",
    "SirConfig",
    "TestResult",
    "WindowLayout",
    "anova_test",
    "augmented_vector",
    "backward_eliminate",
    "build_windows",
    "by_threshold",
    "covariate_test",
    "drop_column",
    "load_csv",
    "loo_cv_bandwidth",
    "marginal_integration_fit",
    "marginal_test",
    "mst_mse",
    "normal_sf",
    "nw_fit",
    "nw_predict",
    "project",
    "quadratic_form_oracle",
    "rice_tau_sq",
    "screen",
    "select_k",
    "sir_fit",
    "split_columns",
    "standardize",
    "test_variable",
    "write_csv",
]
