"""Mirror-based variable selection with false discovery rate control.

Thin wrapper around the C++ core: construct a mirrored copy of each feature,
fit both signs, and select features whose mirror statistics clear a
data-driven threshold that bounds the estimated false discovery proportion.
"""

from ._core import (
    ExperimentRow,
    ExperimentTable,
    FdInterval,
    GmError,
    MethodSummary,
    SelectionReport,
    fd_hat,
    fd_interval,
    mirror_statistic,
    run_experiment,
    select,
    standardize,
)

__all__ = [
    "ExperimentRow",
    "ExperimentTable",
    "FdInterval",
    "GmError",
    "MethodSummary",
    "SelectionReport",
    "fd_hat",
    "fd_interval",
    "mirror_statistic",
    "run_experiment",
    "select",
    "standardize",
]

__version__ = "0.1.0"
