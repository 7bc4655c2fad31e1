"""Convergence-bound calculator for the noisy-uplink FedAvg loop.

Evaluates, for strongly convex smooth objectives and the decaying step size
eta_t = 2 / (mu * (t + lr_shift)), the bound

    E[f(w_t)] - f*  <=  L / (2 (t + lr_shift)) * [4 G / mu^2
                                                  + (1 + lr_shift) * ||w0 - w*||^2]

with

    G = sum_k Hk^2 / M^2  +  6 L Gamma  +  8 (E - 1)^2 H^2
        + (M - K) / (M - 1) * (4 / K) * eta_t^2 E^2 H^2  +  D(eps)

    D(eps) = 64 / (K^2 eps^2 arctan(B eps / 4C))
             * (B eps / 4C - arctan(B eps / 4C)) * E^2 H^2.

``eps`` is the per-round privacy scale; it maps to the protocol's noise gap
through gap = N - K = 4 C / eps (``gap_to_eps``), under which D(eps) equals
(4 E^2 H^2 / (K^2 C^2)) times the truncated-Cauchy second moment at scale
``gap`` and bound B.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class BoundParams:
    """Every constant entering the bound."""

    mu: float                    # strong convexity
    l_smooth: float              # smoothness
    hetero_gap: float            # f* - sum_k p_k f_k*, the non-IID gap
    grad_bound: float            # H, uniform second-moment bound on stochastic grads
    local_steps: int             # E
    k_clients: int               # K, sampled per round
    m_clients: int               # M, total
    clip_norm: float             # C
    trunc_bound: float           # B
    eps: float                   # per-round privacy scale in D(eps)
    init_dist: float             # ||w0 - w*||^2
    lr_shift: float = 0.0        # shift in eta_t = 2 / (mu (t + shift))
    client_grad_bounds: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.mu <= 0 or self.l_smooth < self.mu:
            raise ValueError("need 0 < mu <= l_smooth")
        if self.client_grad_bounds is None:
            self.client_grad_bounds = np.full(self.m_clients, self.grad_bound)
        self.client_grad_bounds = np.asarray(self.client_grad_bounds, dtype=np.float64)
        if self.client_grad_bounds.size != self.m_clients:
            raise ValueError("client_grad_bounds must have one entry per client")


def gap_to_eps(clip_norm: float, gap: float) -> float:
    """Bridge between the protocol's noise gap N - K and the bound's eps."""
    if gap <= 0:
        raise ValueError("gap must be > 0")
    return 4.0 * clip_norm / gap


def d_epsilon(eps: float, clip_norm: float, trunc_bound: float,
              k_clients: int, local_steps: int, grad_bound: float) -> float:
    """Privacy-noise term D(eps); +inf at eps = 0 (no finite guarantee)."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0.0:
        return math.inf
    x = trunc_bound * eps / (4.0 * clip_norm)
    return (64.0 / (k_clients ** 2 * eps ** 2 * math.atan(x))
            * (x - math.atan(x)) * local_steps ** 2 * grad_bound ** 2)


def sampling_term(m_clients: int, k_clients: int, eta: float,
                  local_steps: int, grad_bound: float) -> float:
    """Partial-participation variance term; zero at full participation."""
    if k_clients > m_clients:
        raise ValueError("k_clients must be <= m_clients")
    if m_clients <= 1 or m_clients == k_clients:
        return 0.0
    return ((m_clients - k_clients) / (m_clients - 1) * 4.0 / k_clients
            * eta ** 2 * local_steps ** 2 * grad_bound ** 2)


def bound_constant(params: BoundParams, eta: float) -> float:
    """The constant G at step size eta."""
    variance = float(np.sum(params.client_grad_bounds ** 2)) / params.m_clients ** 2
    drift = 8.0 * (params.local_steps - 1) ** 2 * params.grad_bound ** 2
    return (variance
            + 6.0 * params.l_smooth * params.hetero_gap
            + drift
            + sampling_term(params.m_clients, params.k_clients, eta,
                            params.local_steps, params.grad_bound)
            + d_epsilon(params.eps, params.clip_norm, params.trunc_bound,
                        params.k_clients, params.local_steps, params.grad_bound))


def convergence_bound(t: int, params: BoundParams) -> float:
    """Optimality-gap bound after t steps of the decaying-step schedule."""
    if t < 1:
        raise ValueError("t must be >= 1")
    eta = 2.0 / (params.mu * (t + params.lr_shift))
    g = bound_constant(params, eta)
    return (params.l_smooth / (2.0 * (t + params.lr_shift))
            * (4.0 * g / params.mu ** 2
               + (1.0 + params.lr_shift) * params.init_dist))
