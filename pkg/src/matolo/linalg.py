"""Dense spectral kernels.

Exact routines (SVD / symmetric eigendecomposition, via numpy) double as
the reference oracles for the Newton--Schulz iterations implemented here.
All functions are pure.
"""

from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_matrix, check_square, check_symmetric
from .exceptions import (
    NotConverged,
    NotPositiveDefinite,
    RankDeficient,
    ZeroMatrix,
)

__all__ = [
    "KernelReport",
    "nuclear_norm",
    "operator_norm",
    "singular_values",
    "polar_exact",
    "polar_ns",
    "inv_sqrt_coupled_ns",
    "polar_augmented_ns",
    "cholesky",
    "sqrt_psd",
    "inv_sqrt_psd",
    "power_psd",
    "clip_singular_values",
    "polar_ns_flops",
    "inv_sqrt_flops",
    "augmented_polar_flops",
]

DEFAULT_NS_ITERS = 100
DEFAULT_NS_TOL = 1e-10


@dataclass(frozen=True)
class KernelReport:
    iterations: int
    residual: float
    flops_estimate: int
    converged: bool

    def as_dict(self):
        return asdict(self)


def singular_values(A):
    return np.linalg.svd(check_matrix(A), compute_uv=False)


def nuclear_norm(A):
    """Sum of singular values."""
    return float(np.sum(singular_values(A)))


def operator_norm(A):
    """Largest singular value."""
    return float(singular_values(A)[0])


def polar_exact(A, rank_tol=None):
    """Polar factor ``U V^T`` of the thin SVD ``A = U diag(s) V^T``.

    Raises RankDeficient when some singular value is ``<= rank_tol``
    (default ``1e-10 * sigma_max``).
    """
    A = check_matrix(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    tol = 1e-10 * s[0] if rank_tol is None else rank_tol
    if s[-1] <= tol:
        raise RankDeficient(float(s[-1]), float(s[0]), float(tol))
    return U @ Vt


def clip_singular_values(A, radius=1.0):
    """Euclidean projection onto ``{X : ||X||_op <= radius}``."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] <= radius:
        return A
    return (U * np.minimum(s, radius)) @ Vt


def polar_ns_flops(iterations, m, n):
    r, c = min(m, n), max(m, n)
    return 4 * iterations * r * r * c


def inv_sqrt_flops(iterations, m):
    return 6 * iterations * m**3


def augmented_polar_flops(iterations, m, n):
    return 4 * m * m * n + iterations * (2 * m * m * n + 4 * m**3)


def _sigma_max_estimate(X, steps=20):
    # power iteration on X X^T from a deterministic start vector
    v = np.ones(X.shape[0]) / np.sqrt(X.shape[0])
    lam = 0.0
    for _ in range(steps):
        w = X @ (X.T @ v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
    return float(np.sqrt(lam))


def polar_ns(A, max_iters=DEFAULT_NS_ITERS, tol=DEFAULT_NS_TOL, prescale=False):
    """Polar factor by the cubic Newton--Schulz iteration.

    Starts from ``A / ||A||_F`` and iterates ``X <- (3I - X X^T) X / 2``
    until ``||X_new - X||_F <= tol``. Tall inputs are processed in transposed
    (wide) orientation, which leaves the result unchanged.

    With ``prescale=True`` the start is instead ``A / (1.01 * s)`` where ``s``
    estimates the largest singular value by 20 power-iteration steps.

    Returns
    -------
    X : ndarray
    report : KernelReport
    """
    A = check_matrix(A)
    transposed = A.shape[0] > A.shape[1]
    X = A.T if transposed else A
    m, n = X.shape
    fro = np.linalg.norm(X)
    if fro == 0.0:
        raise ZeroMatrix("polar_ns of a zero matrix")
    if prescale:
        X = X / (1.01 * _sigma_max_estimate(X / fro) * fro)
    else:
        X = X / fro
    I = np.eye(m)
    residual = np.inf
    k = 0
    while k < max_iters:
        X_new = 0.5 * (3.0 * I - X @ X.T) @ X
        residual = float(np.linalg.norm(X_new - X))
        X = X_new
        k += 1
        if residual <= tol:
            break
    report = KernelReport(k, residual, polar_ns_flops(k, m, n), residual <= tol)
    if not report.converged:
        raise NotConverged(report)
    return (X.T if transposed else X), report


def _require_pd(A, pd_tol, name):
    try:
        np.linalg.cholesky(A - pd_tol * np.eye(A.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc


def inv_sqrt_coupled_ns(A, max_iters=DEFAULT_NS_ITERS, tol=DEFAULT_NS_TOL, pd_tol=0.0):
    """Inverse square root of an SPD matrix by coupled Newton--Schulz.

    ``Y0 = A / sqrt(||A||_F)``, ``Z0 = I / sqrt(||A||_F)``; each step forms
    ``T = Z Y`` and updates ``Y <- Y (3I - T) / 2``, ``Z <- (3I - T) Z / 2``.
    Since ``T`` tracks ``Z A Z`` the loop stops once ``||T - I||_F <= tol``.
    """
    A = check_symmetric(A)
    _require_pd(A, pd_tol, "A")
    m = A.shape[0]
    c = np.sqrt(np.linalg.norm(A))
    I = np.eye(m)
    Y = A / c
    Z = I / c
    T = Z @ Y
    residual = float(np.linalg.norm(T - I))
    k = 0
    while residual > tol and k < max_iters:
        W = 0.5 * (3.0 * I - T)
        Y = Y @ W
        Z = W @ Z
        T = Z @ Y
        k += 1
        residual = float(np.linalg.norm(T - I))
    Z = 0.5 * (Z + Z.T)
    report = KernelReport(k, residual, inv_sqrt_flops(k, m), residual <= tol)
    if not report.converged:
        raise NotConverged(report)
    return Z, report


def polar_augmented_ns(S, LLT, max_iters=DEFAULT_NS_ITERS, tol=DEFAULT_NS_TOL, pd_tol=0.0):
    """Leading ``m x n`` block of ``polar([S, L])`` given only ``LLT = L L^T``.

    Runs the block-eliminated Newton--Schulz recursion on ``X`` and the
    Gram matrix ``B = X X^T + Y Y^T``; ``L`` itself is never formed. Stops
    when ``||B - I||_F <= tol``.
    """
    S = check_matrix(S)
    LLT = check_symmetric(LLT, "LLT")
    m, n = S.shape
    if LLT.shape != (m, m):
        raise ValueError(f"LLT must be {m}x{m}, got {LLT.shape}")
    _require_pd(LLT, pd_tol, "LLT")
    scale2 = float(np.sum(S * S) + np.trace(LLT))
    X = S / np.sqrt(scale2)
    B = (S @ S.T + LLT) / scale2
    I = np.eye(m)
    residual = float(np.linalg.norm(B - I))
    k = 0
    while residual > tol and k < max_iters:
        T = 0.5 * (3.0 * I - B)
        X = T @ X
        B = T @ B @ T
        B = 0.5 * (B + B.T)
        k += 1
        residual = float(np.linalg.norm(B - I))
    report = KernelReport(k, residual, augmented_polar_flops(k, m, n), residual <= tol)
    if not report.converged:
        raise NotConverged(report)
    return X, report


def cholesky(A):
    """Lower-triangular ``L`` with ``L L^T = A``."""
    A = check_symmetric(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("cholesky: non-positive pivot") from exc


def power_psd(A, p):
    """``A**p`` for symmetric PSD ``A`` through its eigendecomposition.

    Negative eigenvalues from rounding are clipped to zero; negative powers
    require a positive definite input.
    """
    A = check_symmetric(A)
    w, V = np.linalg.eigh(A)
    w = np.clip(w, 0.0, None)
    if p < 0 and w[0] <= 0.0:
        raise NotPositiveDefinite("negative power of a singular matrix")
    out = (V * w**p) @ V.T
    return 0.5 * (out + out.T)


def sqrt_psd(A):
    """Unique PSD square root."""
    return power_psd(A, 0.5)


def inv_sqrt_psd(A):
    return power_psd(A, -0.5)
