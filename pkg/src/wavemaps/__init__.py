"""Finite-difference evolution of spherically equivariant 2+1 wave maps into S^2."""

from .diagnostics import (
    DiagnosticSeries,
    StaticFit,
    convergence_factor,
    energy_density,
    energy_drift,
    energy_inside,
    fit_static,
    origin_gradient,
    total_energy,
)
from .errors import (
    FitFailure,
    IndeterminateConvergence,
    InvalidArgument,
    NonFiniteValue,
    UndefinedDrift,
    WaveMapError,
)
from .evolve import (
    Boundary,
    EvolutionConfig,
    EvolutionOutcome,
    Status,
    apply_boundary,
    evolve,
    spatial_operator,
    step_crank_nicholson,
)
from .grid import GridFunction, RadialGrid, l2_norm, make_grid, restrict
from .state import FieldState, GaussianFamily, gaussian_ingoing, static_profile, static_state

__version__ = "0.1.0"
