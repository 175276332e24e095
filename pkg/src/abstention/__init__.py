"""Optimal covariant quantum estimation with abstention.

Finite-n optimum via an exact active-set solver on a tridiagonal quadratic
form, plus the large-n closed forms it is compared against.
"""
from .asymptotics import (
    CurvePoint,
    ProfileSample,
    direction_antiparallel_heisenberg,
    direction_antiparallel_shot_curve,
    direction_optimal_fidelity,
    direction_povm_smin,
    frame_degenerate_fidelity,
    frame_rydberg_limited,
    frame_rydberg_optimal,
    phase_equator_heisenberg,
    phase_equator_shot_curve,
    phase_flat_fidelity,
    phase_optimal_fidelity,
    profile_sample,
)
from .model import (
    AbstentionBudget,
    CostMatrix,
    FiducialState,
    InconsistentSolution,
    TaskKind,
    build_cost_matrix,
    filter_coefficients,
    fidelity_conversions,
    make_fiducial,
    quadratic_form,
)
from .oracles import oracle_enumerate, oracle_projected_gradient, project_box_sphere
from .solver import EigenPair, SolveResult, critical_abstention, solve_abstention, top_eigenpair
from .specfun import airy, bessel, erf_pair, find_root

__version__ = "0.1.0"
