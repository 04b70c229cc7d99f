"""Auxiliary signal design for fault detection in static linear systems."""
from .ccp import CcpConfig, DesignResult, DesignStatus, design, initialize
from .conic import ConicProgram, ConicSolution, ConicStatus, SolverError, solve
from .distance import (
    Phasor,
    PhasorModelSpec,
    build_models,
    complex_to_matrix,
    feasibility_grid,
    case_study_spec,
    sweep_xf,
)
from .dual import (
    bilinear_identity,
    build_ccp_subproblem,
    build_fixed_theta_program,
    check_separability,
    eigen_split,
    linearize_convex_part,
)
from .model import DesignProblem, StaticModel, scale_noise, validate
from .sigma import Classification, SigmaResult, Verdict, classify, evaluate_sigma, min_noise

__version__ = "0.1.0"
