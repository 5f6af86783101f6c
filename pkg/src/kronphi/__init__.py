"""Exponential integrators for stiff problems whose linear part is a Kronecker sum."""
from .errors import (
    ConfigurationError,
    DivergenceError,
    OracleSizeError,
    SeriesConvergenceError,
    ShapeMismatchError,
)
from .integrators import Backend, IntegrationResult, Method, ProblemSpec, StepperConfig, integrate
from .matfun import GLLRule, PhiTable, expm, gll_rule, phi_square_step, phiquad
from .oracle import assemble_kronsum, phi_taylor_action, phi_taylor_matrix
from .problems import are_residual, build_adr, build_riccati
from .split import SplitPhi, apply_split_phi, build_split_phi, build_split_phis
from .tensor import KroneckerSum, kronsum_action, mode_product, tucker, unvec, vec

__version__ = "0.1.0"
