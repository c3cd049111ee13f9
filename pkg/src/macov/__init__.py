"""Autocovariance analysis and parameter estimation for moving-average random fields."""
from .estimate import (
    LseProblem,
    MleProblem,
    ed_count_ma11,
    lse_solve,
    ml_degree_count,
    mle_exact_ma1_n2,
    mle_loglik,
    mle_solve_homotopy,
    mle_solve_local,
)
from .fields import FieldGrid, NoiseSpec, empirical_acov, simulate
from .identify import Fiber, fiber_d1, fiber_generic, fiber_ma11, invertible_representative
from .lattice import (
    AcovTable,
    CoefGrid,
    Order,
    gamma_map,
    laurent_residual,
    quartic_value,
    reverse,
    singular_component_membership,
)
from .polysys import MPoly, PolySystem, TrackerOptions, solve_total_degree

__version__ = "0.1.0"
