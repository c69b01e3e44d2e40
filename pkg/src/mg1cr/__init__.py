"""Cyclic reduction solvers for M/G/1-type and QBD Markov chains."""

from .blocktoeplitz import (
    MatrixSeries,
    block_dft,
    lt_toeplitz_inverse_head,
    max_norm_series,
    series_mul,
    truncate_series,
)
from .cr import (
    CRDiagnostics,
    CRIterate,
    GminResult,
    cr_iterate,
    cr_solve_gmin,
    error_bound_exp,
    fixed_point_gmin,
    gamma_n,
    initial_iterate,
    residual_gmin,
)
from .exceptions import (
    DegenerateBoundaryError,
    InvalidArgumentError,
    MG1Error,
    NoConvergenceError,
    NumericalBreakdownError,
    ParseError,
    PreconditionError,
    SingularMatrixError,
    SingularSymbolError,
    TruncationWarning,
    ValidationError,
)
from .model import MG1Model
from .shift import ShiftedModel, ShiftResult, cr_solve_shifted, error_bound_lin, shift_model
from .stationary import (
    DriftReport,
    StationaryResult,
    boundary_pi0,
    drift,
    group_inverse,
    queue_metrics,
    star_matrices,
    stationary_levels,
)

__version__ = "0.1.0"
