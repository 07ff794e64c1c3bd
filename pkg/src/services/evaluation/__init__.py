"""Evaluation: NRMSE metrics, spectra, rank diagnostics and comparison reports."""

from .diagnostics import (
    RankVerdict,
    SpectrumReport,
    StabilizabilityReport,
    check_controllability,
    check_observability,
    check_stabilizability,
    controllability_matrix,
    observability_matrix,
    spectrum,
)
from .metrics import STATE_GROUPS, grouped_nrmse, multi_step_prediction_errors, nrmse, prediction_window
from .report import (
    EvalReport,
    GroupStat,
    compare_controllers,
    fit_method_summary,
    plot_frame,
    render_table,
)

__all__ = [
    "STATE_GROUPS",
    "EvalReport",
    "GroupStat",
    "RankVerdict",
    "SpectrumReport",
    "StabilizabilityReport",
    "check_controllability",
    "check_observability",
    "check_stabilizability",
    "compare_controllers",
    "controllability_matrix",
    "fit_method_summary",
    "grouped_nrmse",
    "multi_step_prediction_errors",
    "nrmse",
    "observability_matrix",
    "plot_frame",
    "prediction_window",
    "render_table",
    "spectrum",
]
