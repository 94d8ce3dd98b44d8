"""Matrix optimizers obtained from online learners by online-to-nonconvex conversion.

Muon, Pion and Leon play FTL, FTPL and FAML on the discounted gradient
stream: the direction is the learner's action evaluated at the EMA state
``(G_ema, M_ema)``. Two modes:

* ``theory``: ``W_{t+1} = W_t + s_{t+1} X_{t+1}`` with ``s ~ Exp(1)``, an
  exponentially weighted average of the iterates, and a random output
  index ``tau``.
* ``practical``: ``W_{t+1} = W_t + X_{t+1}`` where ``X`` is scaled by a
  learning rate ``alpha_t`` instead of ``D``.
"""

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._validation import check_matrix, check_positive
from .learners import faml_direction, ftl_direction, ftpl_direction
from .linalg import nuclear_norm, operator_norm

__all__ = [
    "OPTIMIZERS",
    "OptimizerConfig",
    "OptimizerState",
    "Objective",
    "TraceRow",
    "RunResult",
    "init_state",
    "update_ema",
    "muon_direction",
    "pion_direction",
    "leon_direction",
    "direction",
    "tau_weights",
    "sample_tau",
    "EwaAccumulator",
    "o2nc_run",
    "run_optimizer",
    "matrix_sensing_objective",
    "random_init",
]

OPTIMIZERS = ("muon", "pion", "leon")
MODES = ("theory", "practical")

# child indices of the run SeedSequence
_STEP_STREAM, _TAU_STREAM, _PION_STREAM, _BATCH_STREAM = range(4)


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer hyperparameters.

    In theory mode ``D`` is the per-step radius and ``G``, ``eta`` enter the
    preconditioner ``G^2 beta1^{-2} I + M_ema``. In practical mode ``lr``
    (a constant, or a callable ``t -> alpha_t``) replaces ``D`` and the
    preconditioner is ``M_ema`` plus a small ridge.
    """

    kind: str = "muon"
    beta1: float = 0.9
    beta2: float = 0.9
    mode: str = "practical"
    D: float = 1.0
    lr: object = 0.01
    G: float = 1.0
    eta: float = 1.0
    k: int = 8
    seed: int = 0
    T: int = 1000
    leon_method: str = "augmented_ns"

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.kind!r}; expected one of {OPTIMIZERS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {b}")
        check_positive(self.D, "D")
        check_positive(self.G, "G")
        check_positive(self.eta, "eta")
        if not callable(self.lr):
            check_positive(self.lr, "lr")
        if self.k < 1 or self.T < 1:
            raise ValueError("k and T must be >= 1")

    def scale(self, t):
        """Direction scale at step ``t``: ``D`` (theory) or ``alpha_t``."""
        if self.mode == "theory":
            return self.D
        return float(self.lr(t)) if callable(self.lr) else float(self.lr)

    @property
    def lr_or_D(self):
        if self.mode == "theory":
            return self.D
        return "schedule" if callable(self.lr) else self.lr


@dataclass
class OptimizerState:
    W: np.ndarray
    G_ema: np.ndarray
    M_ema: np.ndarray
    t: int = 0

    @property
    def shape(self):
        return self.W.shape


def init_state(W0):
    W0 = check_matrix(W0, "W0")
    m, n = W0.shape
    return OptimizerState(W=W0.copy(), G_ema=np.zeros((m, n)), M_ema=np.zeros((m, m)))


def update_ema(state, G_t, beta1, beta2):
    """``G_ema <- b1 G_ema + G_t``, ``M_ema <- b2 M_ema + G_t G_t^T``."""
    M = beta2 * state.M_ema + G_t @ G_t.T
    return replace(state, G_ema=beta1 * state.G_ema + G_t, M_ema=0.5 * (M + M.T), t=state.t + 1)


def muon_direction(state, config, scale=None):
    """``-scale * polar(G_ema)``; zero when ``G_ema = 0``."""
    scale = config.scale(state.t) if scale is None else scale
    return ftl_direction(state.G_ema, scale, polar="ns")


def _pre(config):
    # practical mode: Cholesky / inverse root of M_ema alone (ridged in gram())
    if config.mode == "theory":
        return config.G, config.eta, config.beta1
    return 0.0, 1.0, 1.0


def pion_seed(seed, t):
    return (int(seed), _PION_STREAM, int(t))


def pion_direction(state, config, scale=None, seed=None):
    """``-(scale/k) sum_i polar(G_ema + chol(.) Z_i / eta)``."""
    scale = config.scale(state.t) if scale is None else scale
    if not np.any(state.G_ema):
        return np.zeros_like(state.G_ema)
    G, eta, b = _pre(config)
    seed = pion_seed(config.seed, state.t) if seed is None else seed
    return ftpl_direction(state.G_ema, state.M_ema, scale, G, eta, b, config.k, seed)


def leon_direction(state, config, scale=None, method=None):
    """``-scale (G_ema G_ema^T + (G^2 b^-2 I + M_ema) / eta^2)^{-1/2} G_ema``."""
    scale = config.scale(state.t) if scale is None else scale
    G, eta, b = _pre(config)
    X, _ = faml_direction(state.G_ema, state.M_ema, scale, G, eta, b, method or config.leon_method)
    return X


_DIRECTIONS = {"muon": muon_direction, "pion": pion_direction, "leon": leon_direction}


def direction(state, config, scale=None):
    return _DIRECTIONS[config.kind](state, config, scale)


def tau_weights(beta, T):
    """Output-index law: ``(1 - b^t)/T`` for ``t < T``, ``(1 - b^T)/((1 - b) T)`` at ``T``."""
    t = np.arange(1, T + 1, dtype=np.float64)
    w = (1.0 - beta**t) / T
    w[-1] = (1.0 - beta**T) / ((1.0 - beta) * T)
    return w


def sample_tau(beta, T, rng):
    w = tau_weights(beta, T)
    return int(rng.choice(T, p=w / math.fsum(w))) + 1


class EwaAccumulator:
    """``W_bar_t = (1-b)/(1-b^t) sum_s b^{t-s} W_s`` via two recurrences.

    ``num <- b num + W_t`` and ``den <- b den + 1``; ``W_bar = num / den``.
    """

    def __init__(self, beta):
        self.beta = float(beta)
        self.num = None
        self.den = 0.0

    def update(self, W):
        self.num = W.copy() if self.num is None else self.beta * self.num + W
        self.den = self.beta * self.den + 1.0
        return self.value

    @property
    def value(self):
        return self.num / self.den


@dataclass(frozen=True)
class Objective:
    """A matrix objective with full loss and (mini-batch) gradient."""

    shape: tuple
    loss: object
    grad: object
    name: str = "objective"


@dataclass(frozen=True)
class TraceRow:
    step: int
    optimizer: str
    lr_or_D: object
    loss: float
    grad_ema_nuc: float
    direction_opnorm: float
    osc_partial: float
    seed: int

    def as_dict(self):
        return asdict(self)


@dataclass
class RunResult:
    W: np.ndarray
    trace: list
    final_loss: float
    osc_total: float
    proxy_stationarity: float
    tau: int = None
    W_out: np.ndarray = None
    extras: dict = field(default_factory=dict)

    def report_row(self, config):
        return {
            "optimizer": config.kind,
            "seed": config.seed,
            "lr": config.lr_or_D,
            "final_loss": self.final_loss,
            "osc_total": self.osc_total,
            "proxy_stationarity": self.proxy_stationarity,
        }


def _streams(seed):
    children = np.random.SeedSequence(int(seed)).spawn(4)
    return [np.random.default_rng(c) for c in children]


def run_optimizer(objective, config, W0=None):
    """Run ``config.T`` steps of the configured optimizer on ``objective``.

    Row ``t`` of the trace reports ``f(W_t)`` (``W_1 = W0``), the nuclear
    norm of the gradient EMA after absorbing ``G_t``, the size of the step
    taken from ``W_t`` and the running oscillation
    ``sum max(0, f(W_s) - f(W_{s-1}))``.

    In theory mode the result also carries ``tau`` and ``W_out = W_bar_tau``.
    """
    m, n = objective.shape
    W0 = np.zeros((m, n)) if W0 is None else check_matrix(W0, "W0")
    step_rng, tau_rng, _, batch_rng = _streams(config.seed)
    theory = config.mode == "theory"
    tau = sample_tau(config.beta1, config.T, tau_rng) if theory else None
    ewa = EwaAccumulator(config.beta1) if theory else None
    W_out = None

    state = init_state(W0)
    trace = []
    osc = 0.0
    prev = None
    for t in range(1, config.T + 1):
        loss = float(objective.loss(state.W))
        if prev is not None:
            osc += max(0.0, loss - prev)
        prev = loss
        if theory:
            W_bar = ewa.update(state.W)
            if t == tau:
                W_out = W_bar.copy()
        batch_seed = int(batch_rng.integers(2**63))
        G_t = objective.grad(state.W, batch_seed)
        state = update_ema(state, G_t, config.beta1, config.beta2)
        X = direction(state, config, config.scale(t))
        s = float(-math.log1p(-step_rng.random())) if theory else 1.0
        trace.append(
            TraceRow(
                step=t,
                optimizer=config.kind,
                lr_or_D=config.lr_or_D,
                loss=loss,
                grad_ema_nuc=nuclear_norm(state.G_ema),
                direction_opnorm=s * operator_norm(X),
                osc_partial=osc,
                seed=config.seed,
            )
        )
        state = replace(state, W=state.W + s * X)

    final_W = W_out if theory else state.W
    proxy = nuclear_norm(objective.grad(final_W, None))
    return RunResult(
        W=state.W,
        trace=trace,
        final_loss=trace[-1].loss,
        osc_total=osc,
        proxy_stationarity=proxy,
        tau=tau,
        W_out=W_out,
    )


def o2nc_run(objective, config, W0=None):
    """Theory-mode run; see :func:`run_optimizer`."""
    if config.mode != "theory":
        config = replace(config, mode="theory")
    return run_optimizer(objective, config, W0)


def matrix_sensing_objective(d=20, m_meas=100, seed=0, batch_size=None):
    """Robust matrix sensing with ripples on ``d x d`` matrices.

    ``f(X) = mean_k |u_k| (1 - 0.9 cos 3u_k) + 0.5`` with ``u_k = <A_k, X>``
    and i.i.d. standard Gaussian ``A_k``. The subgradient uses
    ``sign(u)(1 - 0.9 cos 3u) + 2.7 |u| sin 3u`` with value 0 at ``u = 0``.
    With ``batch_size`` set, ``grad(W, sample_seed)`` averages over a
    mini-batch drawn from ``sample_seed``; a ``None`` seed gives the full gradient.
    """
    if d < 1 or m_meas < 1:
        raise ValueError("d and m_meas must be >= 1")
    A = np.random.default_rng(seed).standard_normal((m_meas, d, d))
    A_flat = A.reshape(m_meas, -1)

    def loss(W):
        u = A_flat @ np.asarray(W, dtype=np.float64).ravel()
        return float(np.mean(np.abs(u) * (1.0 - 0.9 * np.cos(3.0 * u)) + 0.5))

    def grad(W, sample_seed=None):
        rows = A_flat
        if batch_size is not None and sample_seed is not None:
            idx = np.random.default_rng(sample_seed).choice(m_meas, size=batch_size, replace=False)
            rows = A_flat[idx]
        u = rows @ np.asarray(W, dtype=np.float64).ravel()
        du = np.sign(u) * (1.0 - 0.9 * np.cos(3.0 * u)) + 2.7 * np.abs(u) * np.sin(3.0 * u)
        return (du @ rows / rows.shape[0]).reshape(d, d)

    return Objective(shape=(d, d), loss=loss, grad=grad, name="matrix_sensing")


def random_init(shape, seed=0, scale=None):
    """Gaussian start with entries ``N(0, scale^2)``, default ``scale = 1/sqrt(m)``."""
    m, n = shape
    scale = 1.0 / math.sqrt(m) if scale is None else scale
    return scale * np.random.default_rng(np.random.SeedSequence([int(seed), 7919])).standard_normal(shape)
