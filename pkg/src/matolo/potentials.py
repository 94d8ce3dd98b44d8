"""Smoothed versions of the nuclear norm and an empirical admissibility checker.

Three families ``Psi(S; L)`` parametrised by a PSD matrix ``L``:

* regularized: ``max_{||X||_op<=1} <S, X> - tr(X^T L X)/2 + tr(L)/2``
* stochastic:  ``E ||S + L Z||_*`` with ``Z`` standard Gaussian (Monte Carlo)
* hyperbolic:  ``tr sqrt(S S^T + L L^T)``

Each returns a value and the gradient in ``S``; the gradient always lies
in the unit operator-norm ball.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from ._qp import minimize_over_ball
from ._validation import check_matrix, check_symmetric
from .exceptions import DegreesOfFreedom, RankDeficient, Singular
from .linalg import nuclear_norm, operator_norm, polar_exact

__all__ = [
    "PotentialFamily",
    "PotentialEval",
    "AdmissibilityReport",
    "WishartEstimate",
    "gaussian_samples",
    "hyperbolic_value",
    "eval_hyperbolic",
    "eval_stochastic",
    "eval_regularized",
    "evaluate",
    "check_admissibility",
    "wishart_inverse_check",
    "family_constants",
    "admissibility_violations",
]

KINDS = ("regularized", "stochastic", "hyperbolic")

# samples per independently seeded RNG block
_BLOCK = 1024
# spawn-key offset for the one-shot resampling stream
_RESAMPLE_KEY = 2**31


@dataclass(frozen=True)
class PotentialFamily:
    kind: str
    mc_samples: int = 10_000
    rng_seed: int = 0
    qp_tol: float = 1e-10
    qp_max_iters: int = 10_000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


@dataclass
class PotentialEval:
    value: float
    gradient: np.ndarray
    # Monte Carlo standard error of ``value``; zero for deterministic families
    stderr: float = 0.0
    iterations: int = 0


def _entropy(seed):
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return int(seed)


def _block_normals(seed, block, size, resample=False):
    key = (_RESAMPLE_KEY + block,) if resample else (block,)
    ss = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=key)
    return np.random.default_rng(ss).standard_normal(size)


def gaussian_samples(seed, k, m, n):
    """``k`` standard Gaussian ``m x n`` matrices, shape ``(k, m, n)``.

    Sample ``i`` lives in block ``i // 1024``; each block has its own RNG
    stream derived from ``(seed, block)``, so any block can be regenerated
    independently and the concatenation never depends on evaluation order.
    """
    out = np.empty((k, m, n))
    for b, start in enumerate(range(0, k, _BLOCK)):
        stop = min(k, start + _BLOCK)
        out[start:stop] = _block_normals(seed, b, (stop - start, m, n))
    return out


def _resampled(seed, index, m, n):
    return _block_normals(seed, index, (m, n), resample=True)


def _batched_polar(A, rank_rel=1e-10):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    bad = s[:, -1] <= rank_rel * s[:, 0]
    return U @ Vt, s.sum(axis=1), bad


def hyperbolic_value(S, LLT):
    """``tr sqrt(S S^T + LLT)``; defined for any PSD argument."""
    S = check_matrix(S)
    w = np.linalg.eigvalsh(S @ S.T + LLT)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def eval_hyperbolic(S, LLT, pd_tol=None):
    """Hyperbolic potential and its gradient ``(S S^T + LLT)^{-1/2} S``.

    Raises Singular when the smallest eigenvalue of ``S S^T + LLT`` is
    ``<= pd_tol`` (default ``1e-13 * max(1, largest eigenvalue)``).
    """
    S = check_matrix(S)
    LLT = check_symmetric(LLT, "LLT")
    if LLT.shape != (S.shape[0], S.shape[0]):
        raise ValueError(f"LLT must be {S.shape[0]}x{S.shape[0]}, got {LLT.shape}")
    A = S @ S.T + LLT
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    tol = 1e-13 * max(1.0, w[-1]) if pd_tol is None else pd_tol
    if w[0] <= tol:
        raise Singular(f"S S^T + L L^T has eigenvalue {w[0]:.3e} <= {tol:.3e}")
    root = np.sqrt(w)
    grad = (V / root) @ (V.T @ S)
    return PotentialEval(float(np.sum(root)), grad)


def eval_stochastic(S, Lfactor, family):
    """Monte Carlo estimate of ``E ||S + L Z||_*`` and its gradient.

    The gradient is the average of ``polar(S + L Z_i)``. Samples come from
    :func:`gaussian_samples` with ``family.rng_seed``; a sample whose
    perturbed matrix is numerically rank deficient is redrawn once from a
    separate stream before RankDeficient is raised.
    """
    S = check_matrix(S)
    Lfactor = check_matrix(Lfactor, "Lfactor")
    m, n = S.shape
    if Lfactor.shape != (m, m):
        raise ValueError(f"Lfactor must be {m}x{m}, got {Lfactor.shape}")
    if not np.any(Lfactor):
        return PotentialEval(nuclear_norm(S), polar_exact(S))
    k = family.mc_samples
    Z = gaussian_samples(family.rng_seed, k, m, n)
    A = S + np.matmul(Lfactor, Z)
    P, vals, bad = _batched_polar(A)
    for i in np.flatnonzero(bad):
        Ai = S + Lfactor @ _resampled(family.rng_seed, int(i), m, n)
        U, s, Vt = np.linalg.svd(Ai, full_matrices=False)
        if s[-1] <= 1e-10 * s[0]:
            raise RankDeficient(float(s[-1]), float(s[0]), float(1e-10 * s[0]))
        P[i] = U @ Vt
        vals[i] = s.sum()
    stderr = float(np.std(vals, ddof=1) / np.sqrt(k)) if k > 1 else np.inf
    return PotentialEval(float(np.mean(vals)), P.mean(axis=0), stderr=stderr)


def eval_regularized(S, L, family=None, x0=None):
    """Regularised potential via projected gradient on the inner QP.

    The maximiser of ``<S, X> - tr(X^T L X)/2`` over the unit ball is the
    gradient (Danskin). Step ``1/lambda_max(L)``; stops when the
    projected-gradient residual is ``<= qp_tol * max(1, ||S||_F)``.
    """
    family = family or PotentialFamily("regularized")
    S = check_matrix(S)
    L = check_symmetric(L, "L")
    if L.shape != (S.shape[0], S.shape[0]):
        raise ValueError(f"L must be {S.shape[0]}x{S.shape[0]}, got {L.shape}")
    lam_max = float(np.linalg.eigvalsh(L)[-1])
    if lam_max <= 1e-300:
        return PotentialEval(nuclear_norm(S), polar_exact(S))
    start = S / lam_max if x0 is None else x0
    X, iters, _ = minimize_over_ball(
        lambda X: L @ X - S,
        start,
        1.0 / lam_max,
        radius=1.0,
        tol=family.qp_tol * max(1.0, float(np.linalg.norm(S))),
        max_iters=family.qp_max_iters,
    )
    value = float(np.sum(S * X) - 0.5 * np.sum(X * (L @ X)) + 0.5 * np.trace(L))
    return PotentialEval(value, X, iterations=iters)


def evaluate(family, S, L):
    """Evaluate ``Psi(S; L)`` for a symmetric PSD parameter ``L``."""
    if family.kind == "hyperbolic":
        return eval_hyperbolic(S, L @ L.T)
    if family.kind == "stochastic":
        return eval_stochastic(S, L, family)
    return eval_regularized(S, L, family)


@dataclass
class AdmissibilityReport:
    family: str
    m: int
    n: int
    trials: int
    seed: int
    feasibility_max_opnorm: float
    dominance_min_gap: float
    stability_ratio_max: float
    smoothness_ratio_max: float
    # smallest (gap + 3 * stderr); the stochastic dominance test
    dominance_min_band: float = 0.0
    # largest |Psi(S; 0) - ||S||_*|
    zero_param_gap: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def alphabeta(self):
        return self.stability_ratio_max * self.smoothness_ratio_max

    def csv_row(self):
        return {
            "family": self.family,
            "m": self.m,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "feas_max": self.feasibility_max_opnorm,
            "dom_min": self.dominance_min_gap,
            "alpha_hat": self.stability_ratio_max,
            "beta_hat": self.smoothness_ratio_max,
            "alphabeta_hat": self.alphabeta,
        }

    def as_dict(self):
        return asdict(self)


def _random_pd(rng, m, scale):
    C = rng.standard_normal((m, m)) * scale / np.sqrt(m)
    return C @ C.T


def check_admissibility(family, m, n, trials=200, seed=0):
    """Empirical check of feasibility, dominance, upper stability and smoothness.

    Each trial draws ``S`` at a log-uniform scale, ``L1 = C C^T + 0.1 I`` and
    ``L2 = L1 + P P^T``, and a second point ``Y = S + Delta``. Stability is
    measured as ``(Psi(S; L2) - Psi(S; L1)) / (tr L2 - tr L1)`` and
    smoothness as ``Bregman(Y, S) / (tr(Delta^T L1^{-1} Delta) / 2)``; the
    maxima are the empirical alpha and beta. Stochastic families reuse the
    same Gaussian draws across the evaluations of a trial.
    """
    if m < 1 or n < 1 or trials < 1:
        raise ValueError("m, n and trials must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0,)))
    feas = -np.inf
    dom = np.inf
    band = np.inf
    zero_gap = 0.0
    alpha = -np.inf
    beta = -np.inf
    for trial in range(trials):
        fam = family
        if family.kind == "stochastic":
            fam = PotentialFamily(
                "stochastic", mc_samples=family.mc_samples, rng_seed=(int(seed), trial)
            )
        S = 10.0 ** rng.uniform(-2.0, 1.0) * rng.standard_normal((m, n))
        L1 = _random_pd(rng, m, 10.0 ** rng.uniform(-1.0, 0.5)) + 0.1 * np.eye(m)
        L2 = L1 + _random_pd(rng, m, 10.0 ** rng.uniform(-1.5, 0.5))
        delta = 10.0 ** rng.uniform(-1.5, 0.5) * rng.standard_normal((m, n))

        base = evaluate(fam, S, L1)
        other = evaluate(fam, S, L2)
        shifted = evaluate(fam, S + delta, L1)
        nuc = nuclear_norm(S)
        for ev in (base, other):
            feas = max(feas, operator_norm(ev.gradient))
            gap = ev.value - nuc
            dom = min(dom, gap)
            band = min(band, gap + 3.0 * ev.stderr)
        dtr = np.trace(L2) - np.trace(L1)
        alpha = max(alpha, (other.value - base.value) / dtr)
        bregman = shifted.value - base.value - float(np.sum(base.gradient * delta))
        quad = 0.5 * float(np.sum(delta * np.linalg.solve(L1, delta)))
        beta = max(beta, bregman / quad)
        if trial < 5:
            zero = evaluate(fam, S, np.zeros((m, m)))
            zero_gap = max(zero_gap, abs(zero.value - nuc))
    notes = []
    if family.kind == "stochastic" and n < m + 2:
        notes.append("n < m + 2: no smoothness constant is known for this shape")
    return AdmissibilityReport(
        family=family.kind,
        m=m,
        n=n,
        trials=trials,
        seed=int(seed),
        feasibility_max_opnorm=float(feas),
        dominance_min_gap=float(dom),
        stability_ratio_max=float(alpha),
        smoothness_ratio_max=float(beta),
        dominance_min_band=float(band),
        zero_param_gap=float(zero_gap),
        notes=notes,
    )


@dataclass(frozen=True)
class WishartEstimate:
    top_eigenvalue: float
    stderr: float
    bound: float
    samples: int

    def within_bound(self, sigmas=3.0):
        return self.top_eigenvalue <= self.bound + sigmas * self.stderr


def wishart_inverse_check(m, n, Y=None, samples=100_000, seed=0):
    """Monte Carlo estimate of the top eigenvalue of ``E[((Z+Y)(Z+Y)^T)^{-1}]``.

    ``stderr`` is the standard error of ``v^T A_i^{-1} v`` along the top
    eigenvector ``v`` of the estimate; ``bound`` is ``1/(n - m - 1)``.
    """
    if n < m + 2:
        raise DegreesOfFreedom(f"requires n >= m + 2, got m={m}, n={n}")
    Y = np.zeros((m, n)) if Y is None else check_matrix(Y, "Y")
    if Y.shape != (m, n):
        raise ValueError(f"Y must be {m}x{n}, got {Y.shape}")
    Z = gaussian_samples(seed, samples, m, n) + Y
    inv = np.linalg.inv(np.matmul(Z, np.swapaxes(Z, 1, 2)))
    mean = inv.mean(axis=0)
    w, V = np.linalg.eigh(0.5 * (mean + mean.T))
    v = V[:, -1]
    q = np.einsum("i,kij,j->k", v, inv, v)
    return WishartEstimate(
        top_eigenvalue=float(w[-1]),
        stderr=float(np.std(q, ddof=1) / np.sqrt(samples)),
        bound=1.0 / (n - m - 1),
        samples=samples,
    )


def family_constants(kind, m, n):
    """Theoretical ``(alpha, beta)`` for a family on ``m x n`` inputs (``m <= n``).

    ``beta`` is ``inf`` for the stochastic family when ``n < m + 2``.
    """
    if kind == "hyperbolic":
        return 1.0, 1.0
    if kind == "regularized":
        return 0.5, 1.0
    if kind == "stochastic":
        beta = 1.0 / np.sqrt(n - m - 1) if n >= m + 2 else np.inf
        return float(np.sqrt(m) + np.sqrt(n)), float(beta)
    raise ValueError(f"unknown potential kind {kind!r}")


def admissibility_violations(report, atol=1e-6, mc_rtol=0.05):
    """Names of the admissibility conditions the report fails.

    Deterministic families use absolute slack ``atol``; the stochastic family
    uses a 3-sigma band for dominance and relative slack ``mc_rtol`` on the
    constants.
    """
    m, n = sorted((report.m, report.n))
    alpha, beta = family_constants(report.family, m, n)
    stochastic = report.family == "stochastic"
    failed = []
    if report.feasibility_max_opnorm > 1.0 + atol:
        failed.append("feasibility")
    if (report.dominance_min_band if stochastic else report.dominance_min_gap) < -atol:
        failed.append("dominance")
    a_lim = alpha * (1.0 + mc_rtol) if stochastic else alpha + atol
    b_lim = beta * (1.0 + mc_rtol) if stochastic else beta + atol
    if report.stability_ratio_max > a_lim:
        failed.append("stability")
    if report.smoothness_ratio_max > b_lim:
        failed.append("smoothness")
    return failed
