"""Semiclassical backreaction on flat FLRW backgrounds via a moment hierarchy."""

from .einstein import (
    BackgroundField,
    PhysicsParams,
    SCEInitialData,
    SCETrajectory,
    ScaleFactorJet,
    SolverMode,
    calibrate_c1,
    conformal_rhs,
    constraint_monitor,
    energy_residual,
    picard_solve,
    shoot_energy_constraint,
    solve_sce,
    tow_in,
    trace_from_components,
    trace_rhs,
    v1_coincidence,
)
from .errors import ConfigError, DomainError, SingularityError, StepFailureError
from .jets import TimeJet
from .kinematics import (
    CouplingParams,
    apply_generator,
    generator_matrices,
    hadamard_coeffs,
    potential,
    purity_residual,
    thermal_moments,
    vacuum_moments,
)
from .mode_oracle import BumpSpec, ModeField, bump_moments, evolve_modes, j_invariant, oracle_compare
from .propagator import (
    BoundReport,
    PotentialTrajectory,
    constant_potential,
    evolve_dyson,
    evolve_rk,
    factorial_bound,
    geometric_bound,
    perturbation_gap,
    sinusoid_potential,
)
from .seqspace import (
    ExplicitWeights,
    FactorialWeights,
    GeometricWeights,
    MomentVector,
    NormSpec,
    left_shift,
    shift_norm_bound,
    weighted_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BackgroundField",
    "BoundReport",
    "BumpSpec",
    "ConfigError",
    "CouplingParams",
    "DomainError",
    "ExplicitWeights",
    "FactorialWeights",
    "GeometricWeights",
    "ModeField",
    "MomentVector",
    "NormSpec",
    "PhysicsParams",
    "PotentialTrajectory",
    "SCEInitialData",
    "SCETrajectory",
    "ScaleFactorJet",
    "SingularityError",
    "SolverMode",
    "StepFailureError",
    "TimeJet",
    "apply_generator",
    "bump_moments",
    "calibrate_c1",
    "conformal_rhs",
    "constant_potential",
    "constraint_monitor",
    "energy_residual",
    "evolve_dyson",
    "evolve_modes",
    "evolve_rk",
    "factorial_bound",
    "generator_matrices",
    "geometric_bound",
    "hadamard_coeffs",
    "j_invariant",
    "left_shift",
    "oracle_compare",
    "perturbation_gap",
    "picard_solve",
    "potential",
    "purity_residual",
    "shift_norm_bound",
    "shoot_energy_constraint",
    "sinusoid_potential",
    "solve_sce",
    "thermal_moments",
    "tow_in",
    "trace_from_components",
    "trace_rhs",
    "v1_coincidence",
    "vacuum_moments",
    "weighted_norm",
]
