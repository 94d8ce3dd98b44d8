"""Projected-gradient solver for quadratics over an operator-norm ball."""

import numpy as np

from .exceptions import QpNotConverged
from .linalg import clip_singular_values


def minimize_over_ball(grad, x0, step, radius=1.0, tol=1e-10, max_iters=10_000, accelerated=True):
    """Minimise a convex quadratic over ``{X : ||X||_op <= radius}``.

    ``grad`` maps X to the gradient, ``step`` is ``1 / Lipschitz``. Projection
    clips singular values at ``radius``. Stops when the gradient-mapping
    residual ``||Y - P(Y - step * grad(Y))||_F`` drops to ``tol``. The
    accelerated variant uses Nesterov momentum with gradient-based restarts.

    Returns ``(X, iterations, residual)``.
    """
    x = clip_singular_values(np.array(x0, dtype=np.float64), radius)
    y = x
    theta = 1.0
    residual = np.inf
    for k in range(1, max_iters + 1):
        x_new = clip_singular_values(y - step * grad(y), radius)
        residual = float(np.linalg.norm(x_new - y))
        if residual <= tol:
            return x_new, k, residual
        if not accelerated:
            x = y = x_new
            continue
        if np.sum((y - x_new) * (x_new - x)) > 0.0:
            # restart: momentum points uphill
            theta = 1.0
            y = x_new
        else:
            theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
            y = x_new + ((theta - 1.0) / theta_new) * (x_new - x)
            theta = theta_new
        x = x_new
    raise QpNotConverged(residual, max_iters)
