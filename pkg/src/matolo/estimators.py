"""Estimator-style wrappers around the functional learner and optimizer cores."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import learners as _lr
from . import optimizers as _opt
from ._validation import check_gradient_stack

__all__ = ["OnlineLearner", "MatrixOptimizer"]


class OnlineLearner(BaseEstimator):
    """Online linear optimizer over ``{X : ||X||_op <= D}``.

    ``partial_fit(G_t)`` plays one or more rounds; ``action_`` is the action
    for the next round and ``records_`` the per-round regret accounting.

    Examples
    --------
    >>> import numpy as np
    >>> est = OnlineLearner(kind="faml").partial_fit(np.array([[1.0]]))
    >>> round(float(est.action_[0, 0]), 5)
    -0.57735
    """

    def __init__(self, kind="faml", D=1.0, G=1.0, eta=None, discount=1.0, mc_samples=256, seed=0,
                 qp_tol=1e-10, qp_max_iters=10_000, faml_method="eigh", auto_G=False):
        self.kind = kind
        self.D = D
        self.G = G
        self.eta = eta
        self.discount = discount
        self.mc_samples = mc_samples
        self.seed = seed
        self.qp_tol = qp_tol
        self.qp_max_iters = qp_max_iters
        self.faml_method = faml_method
        self.auto_G = auto_G

    def _config(self):
        return _lr.LearnerConfig(**self.get_params())

    def partial_fit(self, gradients):
        gradients = check_gradient_stack(gradients)
        if not hasattr(self, "state_"):
            self.config_ = self._config()
            self.state_ = _lr.init_state(*gradients.shape[1:], self.config_)
            self.records_ = []
        for G_t in gradients:
            _, self.state_ = _lr.advance(self.config_, self.state_, G_t)
            self.records_.append(self.state_.record)
        return self

    def fit(self, gradients):
        for attr in ("state_", "config_", "records_"):
            self.__dict__.pop(attr, None)
        return self.partial_fit(gradients)

    @property
    def action_(self):
        check_is_fitted(self, "state_")
        return self.state_.action

    @property
    def regret_(self):
        check_is_fitted(self, "records_")
        return self.records_[-1].regret

    @property
    def bound_(self):
        check_is_fitted(self, "records_")
        return self.records_[-1].bound


class MatrixOptimizer(BaseEstimator):
    """Muon / Pion / Leon on a matrix :class:`~matolo.optimizers.Objective`.

    After ``fit(objective)``: ``W_`` holds the last iterate (the EWA output
    ``W_bar_tau`` in theory mode), ``trace_`` the per-step rows and
    ``result_`` the full :class:`~matolo.optimizers.RunResult`.
    """

    def __init__(self, kind="muon", beta1=0.9, beta2=0.9, mode="practical", D=1.0, lr=0.01, G=1.0,
                 eta=1.0, k=8, seed=0, T=1000, leon_method="augmented_ns"):
        self.kind = kind
        self.beta1 = beta1
        self.beta2 = beta2
        self.mode = mode
        self.D = D
        self.lr = lr
        self.G = G
        self.eta = eta
        self.k = k
        self.seed = seed
        self.T = T
        self.leon_method = leon_method

    def fit(self, objective, W0=None):
        config = _opt.OptimizerConfig(**self.get_params())
        self.result_ = _opt.run_optimizer(objective, config, W0)
        self.trace_ = self.result_.trace
        self.W_ = self.result_.W_out if config.mode == "theory" else self.result_.W
        return self

    def score(self, objective):
        """Negative objective value at ``W_`` (higher is better)."""
        check_is_fitted(self, "W_")
        return -float(objective.loss(np.asarray(self.W_)))
