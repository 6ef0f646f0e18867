"""Numerical laboratory for autoresonant capture under combined excitation.

The package analyses the averaged model of a weakly damped nonlinear
oscillator driven simultaneously by an external and a parametric chirped
force: which limiting phases are admissible, how the admissible set
bifurcates in parameter space, the asymptotic form of the captured
solutions, their (weighted) stability, and direct simulation of both the
averaged system and the underlying oscillator.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AutoresonanceError,
    ConstraintViolationError,
    ContractError,
    DomainError,
    NumericalError,
    SeriesExistenceError,
    SingularParameterError,
    UnsupportedOrderError,
)
from .asymptotics import (
    SeriesCase,
    SeriesSolution,
    build_series,
    evaluate_series,
    residual_norm,
)
from .designer import DesignResult, DesignSpec, design_excitation
from .params import ModelParams, PhaseParams
from .partition import (
    BifurcationCurve,
    CurveBranch,
    DomainMask,
    RegionLabel,
    SpecialPoints,
    bifurcation_curves,
    classify_region,
    multiple_root_domain,
    p_functions,
    special_points,
    z_functions,
)
from .phase_equation import PhaseRoot, eval_P, find_roots
from .simulator import (
    BasinResult,
    CaptureReport,
    OscillatorParams,
    OscillatorRun,
    Trajectory,
    basin_sample,
    detect_capture,
    integrate,
    perturbation_trajectory,
    simulate_full_oscillator,
)
from .stability import (
    DecreaseReport,
    LyapunovFrame,
    StabilityStatus,
    StabilityVerdict,
    classify_stability,
    linearization_exponents,
    lyapunov_frame,
    lyapunov_value,
    verify_decrease,
)

__all__ = [
    "__version__",
    "AutoresonanceError",
    "BasinResult",
    "BifurcationCurve",
    "CaptureReport",
    "ConstraintViolationError",
    "ContractError",
    "CurveBranch",
    "DecreaseReport",
    "DesignResult",
    "DesignSpec",
    "DomainError",
    "DomainMask",
    "LyapunovFrame",
    "ModelParams",
    "NumericalError",
    "OscillatorParams",
    "OscillatorRun",
    "PhaseParams",
    "PhaseRoot",
    "RegionLabel",
    "SeriesCase",
    "SeriesExistenceError",
    "SeriesSolution",
    "SingularParameterError",
    "SpecialPoints",
    "StabilityStatus",
    "StabilityVerdict",
    "Trajectory",
    "UnsupportedOrderError",
    "basin_sample",
    "bifurcation_curves",
    "build_series",
    "classify_region",
    "classify_stability",
    "design_excitation",
    "detect_capture",
    "eval_P",
    "evaluate_series",
    "find_roots",
    "integrate",
    "linearization_exponents",
    "lyapunov_frame",
    "lyapunov_value",
    "multiple_root_domain",
    "p_functions",
    "perturbation_trajectory",
    "residual_norm",
    "simulate_full_oscillator",
    "special_points",
    "verify_decrease",
]
