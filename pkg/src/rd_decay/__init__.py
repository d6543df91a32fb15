"""Spectral simulator and verification lab for a three-species
reaction-diffusion system with time-dependent coefficients."""

from .analysis import (
    DecayReport,
    VInfinityEstimate,
    build_decay_report,
    fit_decay_rate,
    holder_norm,
    interpolation_audit,
    lp_norm,
    mass_balance_residual,
    v_infinity,
)
from .bihari import (
    BihariProblem,
    HorizonError,
    bihari_bound,
    decay_functional_bound,
    dominance_audit,
    g_eval,
    g_integral,
    g_integral_inverse,
    g_integral_limit,
)
from .coefficients import (
    CoefficientSpec,
    HProfile,
    HypothesisReport,
    SystemParams,
    check_hypotheses,
    conjugate_exponents,
    eval_coefficient,
    growth_condition_audit,
    lqstar_norm,
    smallness_condition,
)
from .solver import (
    CosineMode,
    ManufacturedSolution,
    SolverConfig,
    State,
    Trajectory,
    integrate,
    manufactured_forcing,
    reaction_terms,
    step,
    write_trajectory_csv,
)
from .spectral import (
    DomainSpec,
    GridField,
    OperatorSpec,
    SpectralField,
    apply_fractional,
    apply_operator,
    apply_semigroup,
    laplacian_eigenvalue,
    least_positive_eigenvalue,
    q0,
    q_plus,
    semigroup_estimate_audit,
    to_grid,
    to_spectral,
)

__version__ = "0.1.0"
