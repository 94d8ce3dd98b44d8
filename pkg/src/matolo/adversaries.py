"""Oblivious gradient sequences for regret experiments.

Each generator returns a ``(T, m, n)`` stack with ``||G_t||_op <= G``.
"""

import numpy as np

from ._validation import check_positive

__all__ = ["ADVERSARIES", "make_adversary", "gaussian", "signflip", "lowrank_burst"]


def _clip(stack, G):
    U, s, Vt = np.linalg.svd(stack, full_matrices=False)
    return np.matmul(U * np.minimum(s, G)[:, None, :], Vt)


def gaussian(m, n, T, G=1.0, seed=0):
    """i.i.d. Gaussian matrices scaled by ``G / (sqrt(m) + sqrt(n))``, clipped at ``G``."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((T, m, n)) * (G / (np.sqrt(m) + np.sqrt(n)))
    return _clip(Z, G)


def signflip(m, n, T, G=1.0, seed=0):
    """``c_t G u v^T`` with ``c = (0.5, -1, +1, -1, ...)``.

    The half-size first step makes FTL's leader flip every round, so FTL
    pays ``~G`` per round while the best fixed action pays almost nothing.
    """
    rng = np.random.default_rng(seed)
    if m == 1 and n == 1:
        u = np.ones(1)
        v = np.ones(1)
    else:
        u = rng.standard_normal(m)
        v = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
    c = np.where(np.arange(T) % 2 == 0, 1.0, -1.0)
    c[0] = 0.5
    return c[:, None, None] * (G * np.outer(u, v))[None]


def lowrank_burst(m, n, T, G=1.0, seed=0, rank=1, burst_every=25, burst_len=5):
    """Small Gaussian noise with periodic bursts along one fixed low-rank direction."""
    rng = np.random.default_rng(seed)
    r = min(rank, m, n)
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    base = U @ V.T
    out = 0.05 * G * rng.standard_normal((T, m, n)) / (np.sqrt(m) + np.sqrt(n))
    burst = (np.arange(T) % burst_every) < burst_len
    signs = rng.choice([-1.0, 1.0], size=T)
    out[burst] += (0.9 * G * signs[burst])[:, None, None] * base
    return _clip(out, G)


ADVERSARIES = {"gaussian": gaussian, "signflip": signflip, "lowrank_burst": lowrank_burst}


def make_adversary(name, m, n, T, G=1.0, seed=0):
    if name not in ADVERSARIES:
        raise ValueError(f"unknown adversary {name!r}; expected one of {sorted(ADVERSARIES)}")
    if m < 1 or n < 1 or T < 1:
        raise ValueError("m, n and T must be positive")
    check_positive(G, "G")
    return ADVERSARIES[name](m, n, T, G, seed)
