"""Differential-privacy accountant for the orthogonal-sequence uplink.

The decoded global update carries additive Cauchy noise of scale
``gap = N - K`` (unused minus used sequences).  With clipped differentials
(l2 norm C) and mini-batch subsampling rate q, each round is an
(alpha, eps)-Renyi DP mechanism with

    eps = (alpha / 2) * log(1 + 4 q C^2 / gap^2)^2

at item level, and q = 1 at client level.  Composition over T rounds plus
the standard Renyi-to-(eps, delta) conversion gives the closed form

    eps' = sqrt(2 T log(1/delta)) * c + (T / 2) * c^2,
    c    = log(1 + 4 q C^2 / gap^2),

which is exactly the minimum over alpha > 1 of
``(T/2) alpha c^2 + log(1/delta) / (alpha - 1)``; ``compose_renyi_numeric``
performs that minimization directly as a cross-check.

Two baseline composition rules are implemented for comparison: plain
sequential composition of the per-round pure-DP bound eps0 = c, and
advanced composition

    eps_adv = sqrt(2 T ln(1/delta_slack)) * eps0 + T * eps0 * (e^eps0 - 1)

whose reported failure probability is T * 0 + delta_slack (the per-round
mechanism is pure DP here).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ConfigurationError

_NO_GAP_MSG = "gap = N - K must be > 0: with no unused sequences there is no DP guarantee"


def per_round_log_term(q: float, clip_norm: float, gap: float) -> float:
    """c = log(1 + 4 q C^2 / gap^2), evaluated with log1p for tiny arguments."""
    if gap <= 0:
        raise ConfigurationError(_NO_GAP_MSG)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"subsampling rate q must be in [0, 1], got {q}")
    if clip_norm < 0:
        raise ValueError("clip_norm must be >= 0")
    return math.log1p(4.0 * q * clip_norm ** 2 / gap ** 2)


def rdp_item_per_round(alpha: float, q: float, clip_norm: float, gap: float) -> float:
    """Item-level per-round Renyi DP at order alpha."""
    if alpha <= 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    c = per_round_log_term(q, clip_norm, gap)
    return 0.5 * alpha * c * c


def rdp_client_per_round(alpha: float, clip_norm: float, gap: float) -> float:
    """Client-level per-round Renyi DP: item level with q = 1."""
    return rdp_item_per_round(alpha, 1.0, clip_norm, gap)


def per_round_pure_epsilon(q: float, clip_norm: float, gap: float) -> float:
    """Per-round pure-DP bound eps0 (both one-sided sup-log ratios share it)."""
    return per_round_log_term(q, clip_norm, gap)


def _check_composition_args(rounds: int, delta: float) -> None:
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")


def compose_renyi(rounds: int, delta: float, log_term: float) -> float:
    """Total (eps, delta)-DP from T-fold Renyi composition, closed form."""
    _check_composition_args(rounds, delta)
    if rounds == 0 or log_term == 0.0:
        return 0.0
    return (math.sqrt(2.0 * rounds * math.log(1.0 / delta)) * log_term
            + 0.5 * rounds * log_term ** 2)


def compose_renyi_numeric(rounds: int, delta: float, log_term: float) -> float:
    """Same quantity by numerically minimizing over the Renyi order.

    Minimizes f(alpha) = (T/2) alpha c^2 + log(1/delta) / (alpha - 1) over
    alpha > 1, substituting alpha = 1 + e^u to make the search unconstrained
    and well-scaled.  Kept as an independent check on ``compose_renyi``.
    """
    _check_composition_args(rounds, delta)
    if rounds == 0 or log_term == 0.0:
        return 0.0
    a = 0.5 * rounds * log_term ** 2
    b = math.log(1.0 / delta)

    def objective(u: float) -> float:
        beta = math.exp(u)
        return a * (1.0 + beta) + b / beta

    res = optimize.minimize_scalar(objective, bounds=(-80.0, 80.0),
                                   method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.fun)


def compose_sequential(rounds: int, eps0: float) -> float:
    """Plain sequential composition: T * eps0."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    return rounds * eps0


def compose_advanced(rounds: int, delta_slack: float, eps0: float) -> float:
    """Advanced composition of T pure-DP rounds with slack delta_slack."""
    _check_composition_args(rounds, delta_slack)
    if rounds == 0 or eps0 == 0.0:
        return 0.0
    return (math.sqrt(2.0 * rounds * math.log(1.0 / delta_slack)) * eps0
            + rounds * eps0 * math.expm1(eps0))


def compose_client_level(rounds: int, delta: float, clip_norm: float, gap: float) -> float:
    """Whole-task client-level (eps, delta)-DP."""
    return compose_renyi(rounds, delta, per_round_log_term(1.0, clip_norm, gap))


@dataclass(frozen=True)
class MechanismParams:
    """Everything the accountant needs about one training configuration."""

    clip_norm: float
    gap: float           # unused sequences N - K (the Cauchy noise scale)
    q: float             # per-client mini-batch sampling rate
    rounds: int
    delta: float

    def __post_init__(self):
        if self.gap <= 0:
            raise ConfigurationError(_NO_GAP_MSG)
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {self.q}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class PrivacyLedger:
    """Per-round terms and whole-task guarantees under the three rules."""

    log_term: float       # c = log(1 + 4 q C^2 / gap^2)
    pure_epsilon: float   # per-round pure-DP bound (equals c)
    composed: dict        # rule -> (eps_total, delta)


def build_ledger(params: MechanismParams) -> PrivacyLedger:
    c = per_round_log_term(params.q, params.clip_norm, params.gap)
    renyi = compose_renyi(params.rounds, params.delta, c)
    numeric = compose_renyi_numeric(params.rounds, params.delta, c)
    if renyi > 0 and abs(renyi - numeric) > 1e-9 * renyi:
        raise ArithmeticError(
            f"closed-form composition {renyi!r} disagrees with the "
            f"numeric optimizer {numeric!r}")
    composed = {
        "sequential": (compose_sequential(params.rounds, c), 0.0),
        "advanced": (compose_advanced(params.rounds, params.delta, c),
                     params.delta),
        "renyi": (renyi, params.delta),
    }
    return PrivacyLedger(log_term=c, pure_epsilon=c, composed=composed)


@dataclass(frozen=True)
class SetSizeResult:
    set_size: int
    bandwidth_overhead: float  # rho = N / K - 1 relative to the no-DP case


def solve_set_size(target_eps: float, rounds: int, delta: float, q: float,
                   clip_norm: float, k_clients: int,
                   max_set_size: int = 1 << 16) -> SetSizeResult:
    """Smallest N > K whose composed Renyi epsilon meets ``target_eps``.

    The composed epsilon is strictly decreasing in the gap, so a bisection
    over N in (K, max_set_size] suffices.
    """
    if target_eps <= 0:
        raise ValueError("target_eps must be > 0")
    if k_clients < 1:
        raise ValueError("k_clients must be >= 1")

    def eps_at(n: int) -> float:
        return compose_renyi(rounds, delta,
                             per_round_log_term(q, clip_norm, n - k_clients))

    if eps_at(max_set_size) > target_eps:
        raise ConfigurationError(
            f"target epsilon {target_eps} unreachable with set size <= {max_set_size}")
    lo, hi = k_clients, max_set_size  # eps_at(lo) infeasible (gap 0), eps_at(hi) feasible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if eps_at(mid) <= target_eps:
            hi = mid
        else:
            lo = mid
    return SetSizeResult(set_size=hi,
                         bandwidth_overhead=hi / k_clients - 1.0)


COMPOSITION_RULES = ("sequential", "advanced", "renyi")


def accountant_table(rounds: int, delta: float, q: float, clip_norm: float,
                     gap: float) -> np.ndarray:
    """Rows (t, eps_sequential, eps_advanced, eps_renyi) for t = 1..rounds."""
    eps0 = per_round_pure_epsilon(q, clip_norm, gap)
    out = np.empty((rounds, 4))
    for i, t in enumerate(range(1, rounds + 1)):
        out[i] = (t,
                  compose_sequential(t, eps0),
                  compose_advanced(t, delta, eps0),
                  compose_renyi(t, delta, eps0))
    return out
