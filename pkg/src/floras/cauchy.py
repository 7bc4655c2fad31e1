"""Cauchy and truncated-Cauchy machinery, plus goodness-of-fit helpers.

The uplink decoder's dominant residual is a sum of N - K independent ratios
of zero-mean Gaussians, i.e. Cauchy(0, N - K).  Truncating to [-B, B] gives
the finite-variance law used by the convergence bound.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov


@dataclass(frozen=True)
class CauchyParams:
    """Location/scale Cauchy, optionally truncated to [location +- bound]."""

    scale: float
    location: float = 0.0
    bound: float = math.inf

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if not self.bound > 0:
            raise ValueError("truncation bound must be > 0")

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.bound)


def pdf(x, params: CauchyParams):
    """Density; renormalized and clipped to the truncation window if any."""
    x = np.asarray(x, dtype=np.float64)
    z = x - params.location
    base = params.scale / (np.pi * (z * z + params.scale ** 2))
    if not params.truncated:
        return base
    mass = 2.0 * math.atan(params.bound / params.scale) / math.pi
    out = base / mass
    return np.where(np.abs(z) <= params.bound, out, 0.0)


def cdf(x, params: CauchyParams):
    x = np.asarray(x, dtype=np.float64)
    z = x - params.location
    if not params.truncated:
        return 0.5 + np.arctan(z / params.scale) / np.pi
    half = math.atan(params.bound / params.scale)
    out = (np.arctan(z / params.scale) + half) / (2.0 * half)
    return np.clip(out, 0.0, 1.0)


def sample_truncated(params: CauchyParams, rng: np.random.Generator,
                     size=None) -> np.ndarray:
    """Inverse-CDF sampling: x0 + gamma * tan(U * arctan(B / gamma)), U ~ U(-1, 1)."""
    if not params.truncated:
        raise ValueError("sample_truncated requires a finite bound")
    u = rng.uniform(-1.0, 1.0, size=size)
    half = math.atan(params.bound / params.scale)
    return params.location + params.scale * np.tan(u * half)


def truncated_variance(scale: float, bound: float) -> float:
    """Second moment of Cauchy(0, gamma) truncated to [-B, B].

    E[X^2] = gamma^2 * (B/gamma - arctan(B/gamma)) / arctan(B/gamma)
    """
    if scale <= 0 or bound <= 0:
        raise ValueError("scale and bound must be > 0")
    ratio = bound / scale
    a = math.atan(ratio)
    return scale ** 2 * (ratio - a) / a


def ratio_extrema(theta: float, scale: float):
    """Extrema of r(x) = Cauchy(theta, gamma)(x) / Cauchy(0, gamma)(x) over x.

    r(x) = (x^2 + gamma^2) / ((x - theta)^2 + gamma^2) has stationary points
    at the roots of x^2 - theta*x - gamma^2, i.e. (theta +- sqrt(theta^2 +
    4*gamma^2)) / 2; one is the global max, the other the global min, and
    the two extreme values multiply to exactly 1.

    Returns (x_max, ratio_max, x_min, ratio_min).
    """
    if scale <= 0:
        raise ValueError("scale must be > 0")
    g2 = scale * scale

    def r(x):
        return (x * x + g2) / ((x - theta) ** 2 + g2)

    root = math.sqrt(theta * theta + 4.0 * g2)
    xa = (theta + root) / 2.0
    xb = (theta - root) / 2.0
    ra, rb = r(xa), r(xb)
    if ra >= rb:
        return xa, ra, xb, rb
    return xb, rb, xa, ra


def ks_test(samples: np.ndarray, cdf_fn):
    """One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value uses the limiting Kolmogorov distribution, adequate for the
    sample sizes this package works with (n >= 100 enforced, n >= 1e4 in
    all validation runs).
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < 100:
        raise ValueError(f"ks_test needs at least 100 samples, got {n}")
    f = cdf_fn(np.sort(samples))
    steps = np.arange(n, dtype=np.float64)
    d = max(np.max(f - steps / n), np.max((steps + 1.0) / n - f))
    p = float(kolmogorov(math.sqrt(n) * d))
    return float(d), p
