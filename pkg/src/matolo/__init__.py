"""Adaptive matrix online linear optimization over operator-norm balls.

Smoothed nuclear-norm potentials, the online learners built on them
(FTL, FTRL, FTPL, FAML and the Shampoo baselines) and the matrix
optimizers Muon, Pion and Leon obtained by online-to-nonconvex conversion.
"""

__version__ = "0.1.0"

from .exceptions import (
    DegreesOfFreedom,
    MatoloError,
    NotConverged,
    NotPositiveDefinite,
    NotSymmetric,
    QpNotConverged,
    RankDeficient,
    Singular,
    ZeroMatrix,
)
from .linalg import (
    KernelReport,
    cholesky,
    clip_singular_values,
    inv_sqrt_coupled_ns,
    inv_sqrt_psd,
    nuclear_norm,
    operator_norm,
    polar_augmented_ns,
    polar_exact,
    polar_ns,
    sqrt_psd,
)
from .potentials import (
    AdmissibilityReport,
    PotentialFamily,
    check_admissibility,
    evaluate,
    wishart_inverse_check,
)
from .learners import (
    LearnerConfig,
    LearnerState,
    RegretRecord,
    advance,
    faml_direction,
    ftl_direction,
    ftpl_direction,
    ftrl_direction,
    gbpa_decomposition_check,
    preconditioner,
    regret_of_run,
    shampoo_step,
    trace_potential_check,
)
from .optimizers import (
    OptimizerConfig,
    OptimizerState,
    leon_direction,
    matrix_sensing_objective,
    muon_direction,
    o2nc_run,
    pion_direction,
    run_optimizer,
)
from .adversaries import make_adversary
from .estimators import MatrixOptimizer, OnlineLearner
