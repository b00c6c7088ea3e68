"""Resolvents of composite monotone operators ``C^T M C`` and ``M1 + C^T M2 C``."""
from .composite import (
    KMSchedule,
    ResolventProblem,
    SolveOptions,
    SolveReport,
    SumResolventProblem,
    auto_parameters,
    contraction_estimate,
    map_N,
    map_P,
    map_Q,
    mcx_resolvent,
    solve_algorithm1,
    solve_algorithm2,
    solve_algorithm3,
)
from .exceptions import (
    ConvergenceError,
    DegenerateOperatorError,
    DimensionError,
    UnsupportedOperatorError,
)
from .linop import GramSpectrum, LinearMap, estimate_spectrum, nonexpansive_bound_holds
from .lure import EquilibriumReport, LureSystem, equilibrium_residual, find_equilibrium
from .monotone import (
    BoxIndicatorSubdifferential,
    L1Subdifferential,
    LinearMonotoneOp,
    MonotoneOp,
    ScaledOp,
    ZeroOp,
    diag_scaled_resolvent,
    membership_residual,
    resolvent,
    yosida,
)
from .oracle import admm_quadratic, admm_reference, inclusion_residual, scalar_resolvent_bisection

__version__ = "0.1.0"
