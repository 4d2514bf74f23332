"""Change point localization in high-dimensional piecewise-stable VAR processes.

The estimation pipeline is: fit an l1-penalized VAR on every candidate
interval, solve the penalized minimal-partition problem exactly by dynamic
programming, then optionally refine each estimated change point by a joint
split-location and two-segment group-Lasso search.
"""

from .bench import BenchResult, Setting, run_setting, setting_i, setting_ii, setting_iii
from .dp import (
    Detection,
    DetectionConfig,
    Partition,
    brute_force_detect,
    default_gamma,
    default_lambda,
    default_min_len,
    detect,
    objective,
    segment_coefficients,
)
from .lasso import (
    GroupLassoFit,
    IntervalGram,
    LassoSolution,
    LossCache,
    SolverConfig,
    fit_lasso_var,
    fit_two_segment_group_lasso,
    group_lasso_kkt,
    interval_gram,
    lasso_kkt,
    segment_loss,
)
from .metrics import abs_k_error, hausdorff_scaled
from .model import (
    CoefficientSet,
    EigenvalueError,
    ModelError,
    ModelSummary,
    PiecewiseVarModel,
    Stability,
    TimeSeries,
    UnstableModelError,
    companion_matrix,
    is_stable,
    jump_size,
    model_summary,
)
from .pgl import RefineReport, WindowReport, default_zeta, refine, refine_report
from .simulate import SimulationConfig, scenario_i, scenario_ii, scenario_iii, simulate

__version__ = "0.1.0"

__all__ = [
    "BenchResult",
    "CoefficientSet",
    "Detection",
    "DetectionConfig",
    "EigenvalueError",
    "GroupLassoFit",
    "IntervalGram",
    "LassoSolution",
    "LossCache",
    "ModelError",
    "ModelSummary",
    "Partition",
    "PiecewiseVarModel",
    "RefineReport",
    "Setting",
    "SimulationConfig",
    "SolverConfig",
    "Stability",
    "TimeSeries",
    "UnstableModelError",
    "WindowReport",
    "abs_k_error",
    "brute_force_detect",
    "companion_matrix",
    "default_gamma",
    "default_lambda",
    "default_min_len",
    "default_zeta",
    "detect",
    "fit_lasso_var",
    "fit_two_segment_group_lasso",
    "group_lasso_kkt",
    "hausdorff_scaled",
    "interval_gram",
    "is_stable",
    "jump_size",
    "lasso_kkt",
    "model_summary",
    "objective",
    "refine",
    "refine_report",
    "run_setting",
    "scenario_i",
    "scenario_ii",
    "scenario_iii",
    "segment_coefficients",
    "segment_loss",
    "setting_i",
    "setting_ii",
    "setting_iii",
    "simulate",
]
