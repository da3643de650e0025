"""Exact persistence exponent, harmonic function and quasi-stationary law
for the AR(1) chain X_{n+1} = a*X_n +- 1 killed below zero, plus an
independent Monte Carlo cross-check."""

from .model import ModelParams, NumericFailure, as_exact
from .dynamics import (
    HOLE,
    APERIODIC,
    EVENTUALLY_PERIODIC,
    FINITE,
    GapError,
    HoleError,
    InsufficientOrbitError,
    IntervalDecomposition,
    Orbit,
    OutOfDomainError,
    ReturnStats,
    backward_step,
    beta_expansion_digits,
    orbit_of,
    orbit_of_zero,
    recover_path,
    recover_path_unconditional,
    return_stats,
    survivor_intervals,
    synthetic_periodic_orbit,
)
from .spectral import (
    BoundsReport,
    BracketFailure,
    CdfPoint,
    CurveRow,
    NotSummable,
    SeriesValue,
    SpectralSolution,
    decay_rate_curve,
    eval_decay_equation,
    eval_harmonic,
    exponent_bounds,
    harmonic_jumps,
    harmonic_residual,
    parry_density,
    qsd_survival,
    qsd_survival_grid,
    solve_lambda,
    truncation_for_tail,
)
from .lumped import (
    InfiniteOrbitError,
    JumpOperator,
    LumpedChain,
    NoConvergenceError,
    build_lumped,
    jump_left_eigenvector,
    jump_right_eigenvector,
    leading_eigen,
    persistence_via_matrix,
    power_convergence_probe,
)
from .montecarlo import (
    ConditionalCdf,
    DegenerateEstimateError,
    MCConfig,
    MCEstimate,
    ReversedCheckReport,
    conditional_cdf,
    estimate_decay_rate,
    estimate_persistence,
    reversed_time_check,
    sample_surviving_paths,
    survival_counts,
)

__version__ = "0.1.0"
