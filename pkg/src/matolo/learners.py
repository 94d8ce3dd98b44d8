"""Online learners over the operator-norm ball ``{X : ||X||_op <= D}``.

The gradient-based learners (FTL, FTRL, FTPL, FAML) pick
``X_{t+1} = -D grad Psi(S_t; L_t / eta)`` for a smoothing ``Psi`` of the
nuclear norm, with ``L_t = sqrt(G^2 I + M_t)``. Shampoo and one-sided
Shampoo are the projected OGD baselines.

Everything here is functional: :func:`advance` maps ``(config, state,
G_t)`` to ``(action, new_state)``. :class:`matolo.estimators.OnlineLearner`
wraps it in an estimator.
"""

import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._qp import minimize_over_ball
from ._validation import check_gradient_stack, check_matrix, check_positive, check_unit_interval
from .linalg import (
    cholesky,
    inv_sqrt_coupled_ns,
    inv_sqrt_psd,
    nuclear_norm,
    operator_norm,
    polar_augmented_ns,
    power_psd,
    sqrt_psd,
)
from .potentials import (
    PotentialFamily,
    _batched_polar,
    _resampled,
    eval_hyperbolic,
    eval_regularized,
    gaussian_samples,
)
from .exceptions import RankDeficient

__all__ = [
    "KINDS",
    "LearnerConfig",
    "LearnerState",
    "RegretRecord",
    "default_eta",
    "init_state",
    "preconditioner",
    "gram",
    "advance",
    "run",
    "ftl_direction",
    "faml_direction",
    "ftpl_direction",
    "ftrl_direction",
    "shampoo_step",
    "regret_bound",
    "regret_of_run",
    "gbpa_terms",
    "gbpa_decomposition_check",
    "trace_potential_sides",
    "trace_potential_check",
]

KINDS = ("ftl", "ftrl", "ftpl", "faml", "shampoo", "one_sided_shampoo")
GBPA_KINDS = ("ftl", "ftrl", "ftpl", "faml")
FAML_METHODS = ("eigh", "coupled_ns", "augmented_ns")

SHAMPOO_RIDGE = 1e-8
FEAS_RTOL = 1e-8


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "faml"
    D: float = 1.0
    G: float = 1.0
    eta: float = None
    discount: float = 1.0
    mc_samples: int = 256
    seed: int = 0
    qp_tol: float = 1e-10
    qp_max_iters: int = 10_000
    faml_method: str = "eigh"
    ns_max_iters: int = 100
    ns_tol: float = 1e-10
    auto_G: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.faml_method not in FAML_METHODS:
            raise ValueError(f"faml_method must be one of {FAML_METHODS}")
        check_positive(self.D, "D")
        check_positive(self.G, "G", strict=False)
        check_unit_interval(self.discount, "discount")
        if self.eta is not None:
            check_positive(self.eta, "eta")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


def default_eta(kind, m, n, D=1.0):
    """``sqrt(alpha / beta)`` of the learner's smoothing (m <= n orientation).

    The Shampoo baselines use ``diam / sqrt(2) = sqrt(2) D``.
    """
    if kind == "ftrl":
        return 1.0 / math.sqrt(2.0)
    if kind == "ftpl":
        dof = n - m - 1
        if dof < 1:
            warnings.warn(
                f"FTPL smoothness constant needs n >= m + 2 (m={m}, n={n}); using eta = sqrt(sqrt(m)+sqrt(n))",
                RuntimeWarning,
                stacklevel=2,
            )
            dof = 1
        return math.sqrt((math.sqrt(m) + math.sqrt(n)) * math.sqrt(dof))
    if kind in ("shampoo", "one_sided_shampoo"):
        return math.sqrt(2.0) * D
    return 1.0


@dataclass(frozen=True)
class RegretRecord:
    t: int
    inst_loss: float
    cum_loss: float
    nuclear_S: float
    comparator_value: float
    regret: float
    bound: float
    feas_margin: float
    solver_iters: int

    def as_dict(self):
        return asdict(self)


@dataclass
class LearnerState:
    """Running sums in the learner's working orientation (rows <= cols).

    ``S`` and ``M`` are discounted: ``S <- b S + G``, ``M <- b^2 M + G G^T``.
    ``X_next`` is the action to be played in round ``t + 1``.
    """

    t: int
    S: np.ndarray
    M: np.ndarray
    X_next: np.ndarray
    cumulative_loss: float = 0.0
    N: np.ndarray = None
    transposed: bool = False
    G_eff: float = 1.0
    G_max: float = 0.0
    first_nuclear: float = 0.0
    bound_valid: bool = True
    record: RegretRecord = None
    history: list = field(default_factory=list, repr=False)

    @property
    def shape(self):
        m, n = self.S.shape
        return (n, m) if self.transposed else (m, n)

    @property
    def action(self):
        return self.X_next.T if self.transposed else self.X_next


def init_state(m, n, config):
    transposed = config.kind in GBPA_KINDS and m > n
    if transposed:
        m, n = n, m
    return LearnerState(
        t=0,
        S=np.zeros((m, n)),
        M=np.zeros((m, m)),
        X_next=np.zeros((m, n)),
        N=np.zeros((n, n)) if config.kind == "shampoo" else None,
        transposed=transposed,
        G_eff=float(config.G),
    )


def _ridge(M):
    return 1e-8 * (1.0 + np.trace(M) / M.shape[0])


def gram(M, G, discount=1.0):
    """``G^2 b^{-2} I + M``; ridged when ``G == 0``."""
    m = M.shape[0]
    if G == 0:
        return M + _ridge(M) * np.eye(m)
    return M + (G / discount) ** 2 * np.eye(m)


def preconditioner(state, G, discount=1.0):
    """``L_t = sqrt(G^2 b^{-2} I + M_t)``."""
    check_positive(G, "G")
    return sqrt_psd(gram(state.M, G, discount))


def ftl_direction(S, D, polar="svd", ns_max_iters=100, ns_tol=1e-10):
    """``-D`` times a maximiser of ``<S, X>`` over the unit ball.

    ``polar="svd"`` keeps only singular directions above ``1e-12 sigma_max``,
    which is still a valid maximiser when ``S`` is rank deficient;
    ``polar="ns"`` uses Newton--Schulz and falls back to the SVD route on
    failure. A zero ``S`` gives the zero action.
    """
    S = check_matrix(S)
    if not np.any(S):
        return np.zeros_like(S)
    if polar == "ns":
        from .linalg import polar_ns
        from .exceptions import NotConverged

        try:
            P, _ = polar_ns(S, max_iters=ns_max_iters, tol=ns_tol)
            return -D * P
        except NotConverged:
            pass
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    keep = s > 1e-12 * s[0]
    return -D * (U[:, keep] @ Vt[keep])


def faml_direction(S, M, D, G, eta=1.0, discount=1.0, method="eigh", ns_max_iters=100, ns_tol=1e-10):
    """``-eta D (eta^2 S S^T + G^2 b^{-2} I + M)^{-1/2} S``.

    ``method`` selects the inverse square root: ``"eigh"`` (symmetric
    eigendecomposition), ``"coupled_ns"``, or ``"augmented_ns"`` which takes
    the leading block of ``polar([eta S, L])`` from ``L L^T`` alone.

    Returns ``(X, iterations)``.
    """
    S = check_matrix(S)
    if not np.any(S):
        return np.zeros_like(S), 0
    LLT = gram(M, G, discount)
    if method == "augmented_ns":
        X, rep = polar_augmented_ns(eta * S, LLT, max_iters=ns_max_iters, tol=ns_tol)
        return -D * X, rep.iterations
    A = eta * eta * (S @ S.T) + LLT
    if method == "coupled_ns":
        R, rep = inv_sqrt_coupled_ns(A, max_iters=ns_max_iters, tol=ns_tol)
        return -eta * D * (R @ S), rep.iterations
    return -eta * D * (inv_sqrt_psd(A) @ S), 0


def ftpl_direction(S, M, D, G, eta, discount=1.0, k=256, seed=0):
    """``-(D/k) sum_i polar(S + L Z_i / eta)`` with ``L = chol(G^2 b^{-2} I + M)``.

    Deterministic in ``(seed, k)``; the Gaussian draws follow
    :func:`matolo.potentials.gaussian_samples`, so blocks of samples may be
    evaluated independently and reduced in order.
    """
    S = check_matrix(S)
    m, n = S.shape
    Lc = cholesky(gram(M, G, discount))
    Z = gaussian_samples(seed, k, m, n)
    A = S + np.matmul(Lc / eta, Z)
    P, _, bad = _batched_polar(A)
    for i in np.flatnonzero(bad):
        U, s, Vt = np.linalg.svd(S + (Lc / eta) @ _resampled(seed, int(i), m, n), full_matrices=False)
        if s[-1] <= 1e-10 * s[0]:
            raise RankDeficient(float(s[-1]), float(s[0]), float(1e-10 * s[0]))
        P[i] = U @ Vt
    return -(D / k) * P.sum(axis=0)


def ftrl_direction(S, L, D, eta, qp_tol=1e-10, qp_max_iters=10_000, x0=None):
    """``D argmin_{||X||_op <= 1} <S, X> + tr(X^T L X) / (2 eta)``.

    Returns ``(X, iterations)``.
    """
    fam = PotentialFamily("regularized", qp_tol=qp_tol, qp_max_iters=qp_max_iters)
    ev = eval_regularized(S, np.asarray(L) / eta, fam, x0=x0)
    return -D * ev.gradient, ev.iterations


def shampoo_step(variant, X_t, G_t, M, N, D, eta, qp_tol=1e-10, qp_max_iters=10_000):
    """One projected OGD step with Kronecker preconditioner ``R (x) L``.

    ``variant="full"``: ``L = M^{1/4}``, ``R = N^{1/4}``; ``"one_sided"``:
    ``L = M^{1/2}``, ``R = I``. ``M`` and ``N`` already include ``G_t``.
    Singular factors get a ``1e-8 I`` ridge. Returns ``(X_{t+1}, iterations)``.
    """
    X_t = check_matrix(X_t)
    m, n = X_t.shape

    def factor(A, p):
        w = np.linalg.eigvalsh(A)
        if w[0] <= 1e-12 * max(w[-1], 1e-300):
            A = A + SHAMPOO_RIDGE * np.eye(A.shape[0])
        return power_psd(A, p)

    if variant == "full":
        L = factor(M, 0.25)
        R = factor(N, 0.25)
    elif variant == "one_sided":
        L = factor(M, 0.5)
        R = np.eye(n)
    else:
        raise ValueError(f"unknown shampoo variant {variant!r}")
    Linv = np.linalg.inv(L)
    Rinv = np.linalg.inv(R)
    start = X_t - eta * Linv @ G_t @ Rinv
    lip = np.linalg.eigvalsh(L)[-1] * np.linalg.eigvalsh(R)[-1] / eta
    X, iters, _ = minimize_over_ball(
        lambda X: G_t + (L @ (X - X_t) @ R) / eta,
        start,
        1.0 / lip,
        radius=D,
        tol=qp_tol * max(1.0, D),
        max_iters=qp_max_iters,
    )
    return X, iters


def regret_bound(config, state):
    """Theoretical regret bound after ``state.t`` rounds (``inf`` if none applies)."""
    if config.discount != 1.0 or not state.bound_valid or state.t == 0:
        return math.inf
    m, n = state.S.shape
    D, G = config.D, state.G_eff
    kind = config.kind
    if kind in ("faml", "ftrl"):
        r = 1.0 if kind == "faml" else math.sqrt(0.5)
        tr = float(np.trace(sqrt_psd(state.M + G * G * np.eye(m))))
        return 2 * r * D * tr + (1 - r) * D * state.first_nuclear
    if kind == "ftpl":
        if n < m + 2:
            return math.inf
        tr = float(np.trace(sqrt_psd(state.M)))
        return 2 * math.sqrt(2) * D * (n / (n - m - 1)) ** 0.25 * (tr + m * G)
    diam = 2.0 * D
    if kind == "one_sided_shampoo":
        return 2.0 * diam * float(np.trace(sqrt_psd(state.M)))
    if kind == "shampoo":
        wm = np.clip(np.linalg.eigvalsh(state.M), 0, None)
        wn = np.clip(np.linalg.eigvalsh(state.N), 0, None)
        expr = max(
            math.sqrt(np.sum(wm**0.5) * np.sum(wn**0.5)),
            wm[-1] ** 0.25 * np.sum(wn**0.25),
            np.sum(wm**0.25) * wn[-1] ** 0.25,
        )
        return 4.0 * diam * expr
    return math.inf


def advance(config, state, G_t):
    """Play one round: charge ``<G_t, X_t>``, absorb ``G_t``, pick ``X_{t+1}``.

    Returns ``(X_{t+1}, new_state)`` with the round's :class:`RegretRecord`
    on ``new_state.record``. ``X_1 = 0``.
    """
    G_t = check_matrix(G_t, "G_t")
    if G_t.shape != state.shape:
        raise ValueError(f"gradient shape {G_t.shape} does not match learner shape {state.shape}")
    if state.transposed:
        G_t = G_t.T
    b = config.discount
    g_norm = operator_norm(G_t)
    G_eff = state.G_eff
    bound_valid = state.bound_valid
    if g_norm > config.G * (1 + 1e-6):
        if g_norm > state.G_max:
            warnings.warn(
                f"round {state.t + 1}: ||G_t||_op = {g_norm:.4g} exceeds G = {config.G:.4g}",
                RuntimeWarning,
                stacklevel=2,
            )
        bound_valid = False
        if config.auto_G:
            G_eff = max(G_eff, g_norm)

    inst = float(np.sum(G_t * state.X_next))
    cum = b * state.cumulative_loss + inst
    S = b * state.S + G_t
    M = b * b * state.M + G_t @ G_t.T
    M = 0.5 * (M + M.T)
    N = None if state.N is None else b * b * state.N + G_t.T @ G_t
    m, n = S.shape
    eta = config.eta if config.eta is not None else default_eta(config.kind, m, n, config.D)
    t = state.t + 1
    kind = config.kind
    iters = 0
    if kind == "ftl":
        X = ftl_direction(S, config.D)
    elif kind == "faml":
        X, iters = faml_direction(
            S, M, config.D, G_eff, eta, b, config.faml_method, config.ns_max_iters, config.ns_tol
        )
    elif kind == "ftpl":
        X = ftpl_direction(S, M, config.D, G_eff, eta, b, config.mc_samples, seed=(config.seed, t))
    elif kind == "ftrl":
        L = sqrt_psd(gram(M, G_eff, b))
        x0 = -state.X_next / config.D if state.t > 0 else None
        X, iters = ftrl_direction(S, L, config.D, eta, config.qp_tol, config.qp_max_iters, x0=x0)
    else:
        variant = "full" if kind == "shampoo" else "one_sided"
        X, iters = shampoo_step(
            variant, state.X_next, G_t, M, N, config.D, eta, config.qp_tol, config.qp_max_iters
        )

    nuc = nuclear_norm(S)
    new = replace(
        state,
        t=t,
        S=S,
        M=M,
        N=N,
        X_next=X,
        cumulative_loss=cum,
        G_eff=G_eff,
        G_max=max(state.G_max, g_norm),
        first_nuclear=nuclear_norm(G_t) if state.t == 0 else state.first_nuclear,
        bound_valid=bound_valid,
        history=state.history,
    )
    new.record = RegretRecord(
        t=t,
        inst_loss=inst,
        cum_loss=cum,
        nuclear_S=nuc,
        comparator_value=-config.D * nuc,
        regret=cum + config.D * nuc,
        bound=regret_bound(config, new),
        feas_margin=config.D * (1 + FEAS_RTOL) - operator_norm(X),
        solver_iters=int(iters),
    )
    return new.action, new


def run(config, gradients):
    """Run a learner over a fixed ``(T, m, n)`` gradient stack.

    Returns ``(actions, records, final_state)`` where ``actions[t]`` is the
    action played in round ``t + 1`` (so ``actions[0] = 0``).
    """
    gradients = check_gradient_stack(gradients)
    T, m, n = gradients.shape
    state = init_state(m, n, config)
    actions = np.empty_like(gradients)
    records = []
    for i in range(T):
        actions[i] = state.action
        _, state = advance(config, state, gradients[i])
        records.append(state.record)
    return actions, records, state


def regret_of_run(records, D):
    """``sum_t <G_t, X_t> + D ||S_T||_*``; undiscounted runs only."""
    if not records:
        raise ValueError("records must be non-empty")
    return math.fsum(r.inst_loss for r in records) + D * records[-1].nuclear_S


def _potential_family(config):
    if config.kind == "faml":
        return "hyperbolic"
    if config.kind == "ftrl":
        return "regularized"
    raise ValueError("decomposition check needs a deterministic smoothing learner (faml or ftrl)")


def gbpa_terms(gradients, config):
    """Both sides of the regret decomposition for an undiscounted run.

    The run's actions come from :func:`run`; the right-hand side is rebuilt
    from fresh evaluations of ``Phi_t(S) = Psi(S; L_t / eta)``.
    Returns a dict with ``regret``, ``underestimation``, ``bregman``,
    ``stability``, ``initial``, ``rhs``.
    """
    if config.discount != 1.0:
        raise ValueError("decomposition identity holds for undiscounted runs")
    family = _potential_family(config)
    gradients = check_gradient_stack(gradients)
    _, records, _ = run(config, gradients)
    regret = regret_of_run(records, config.D)
    if gradients.shape[1] > gradients.shape[2]:
        gradients = np.swapaxes(gradients, 1, 2)
    T, m, n = gradients.shape
    eta = config.eta if config.eta is not None else default_eta(config.kind, m, n, config.D)
    G2 = config.G**2
    fam = PotentialFamily("regularized", qp_tol=config.qp_tol, qp_max_iters=config.qp_max_iters)

    S_list = np.cumsum(gradients, axis=0)
    M = np.zeros((m, m))
    params = []
    for g in gradients:
        M = M + g @ g.T
        P = M + G2 * np.eye(m)
        params.append(P / eta**2 if family == "hyperbolic" else sqrt_psd(P) / eta)

    def phi(t, S):
        if family == "hyperbolic":
            return eval_hyperbolic(S, params[t])
        return eval_regularized(S, params[t], fam)

    D = config.D
    bregman = []
    stability = []
    for t in range(T - 1):
        at = phi(t, S_list[t])
        ahead = phi(t, S_list[t + 1]).value
        step = S_list[t + 1] - S_list[t]
        bregman.append(ahead - at.value - float(np.sum(at.gradient * step)))
        stability.append(phi(t + 1, S_list[t + 1]).value - ahead)
    under = D * (nuclear_norm(S_list[-1]) - phi(T - 1, S_list[-1]).value)
    initial = D * phi(0, gradients[0]).value
    b_sum = D * math.fsum(bregman)
    s_sum = D * math.fsum(stability)
    return {
        "regret": regret,
        "underestimation": under,
        "bregman": b_sum,
        "stability": s_sum,
        "initial": initial,
        "rhs": under + b_sum + s_sum + initial,
    }


def gbpa_decomposition_check(gradients, config):
    """``|regret - (underestimation + bregman + stability + initial)|``."""
    terms = gbpa_terms(gradients, config)
    return abs(terms["regret"] - terms["rhs"])


def trace_potential_sides(gradients):
    """``(sum_t tr(G_t^T M_t^{-1/2} G_t), 2 tr sqrt(M_T))``.

    When ``M_1`` is singular every ``M_t`` (and ``M_T`` on the right) gets
    the same ridge ``1e-8 (1 + tr(M_T)/m) I``, which keeps the inequality valid.
    """
    gradients = check_gradient_stack(gradients)
    T, m, n = gradients.shape
    M_T = np.einsum("tij,tkj->ik", gradients, gradients)
    g1 = gradients[0]
    w1 = np.linalg.eigvalsh(g1 @ g1.T)
    ridge = 0.0
    if w1[0] <= 1e-12 * max(w1[-1], 1e-300):
        ridge = 1e-8 * (1.0 + np.trace(M_T) / m)
    M = ridge * np.eye(m)
    terms = []
    for g in gradients:
        M = M + g @ g.T
        terms.append(float(np.sum(g * (inv_sqrt_psd(M) @ g))))
    rhs = 2.0 * float(np.trace(sqrt_psd(M_T + ridge * np.eye(m))))
    return math.fsum(terms), rhs


def trace_potential_check(gradients, atol=1e-8):
    lhs, rhs = trace_potential_sides(gradients)
    return lhs <= rhs + atol
