"""Exception types raised by the numerical kernels, potentials and learners."""


class MatoloError(Exception):
    """Base class for every error raised by this package."""


class RankDeficient(MatoloError):
    """A polar factor was requested for a matrix without full rank."""

    def __init__(self, sigma_min, sigma_max, rank_tol):
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.rank_tol = rank_tol
        super().__init__(
            f"smallest singular value {sigma_min:.3e} <= rank_tol {rank_tol:.3e} "
            f"(largest {sigma_max:.3e})"
        )


class ZeroMatrix(MatoloError):
    """The input has zero Frobenius norm."""


class NotConverged(MatoloError):
    """An iterative kernel exhausted its iteration budget.

    The partial :class:`~matolo.linalg.KernelReport` is kept on ``report``.
    """

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(
            message
            or f"no convergence after {report.iterations} iterations "
            f"(residual {report.residual:.3e})"
        )


class NotPositiveDefinite(MatoloError):
    pass


class NotSymmetric(MatoloError):
    pass


class Singular(MatoloError):
    """Gradient of the hyperbolic potential requested where SS^T + LL^T is singular."""


class QpNotConverged(MatoloError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"quadratic subproblem not solved after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class DegreesOfFreedom(MatoloError):
    """Wishart inverse moment requested with n < m + 2."""
