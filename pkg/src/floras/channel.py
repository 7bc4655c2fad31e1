"""Block-fading multiple-access channel and AWGN generation.

Fading is block-constant: one gain per client per round, shared by all d
data slots of that round, redrawn independently across rounds.

SNR convention (used consistently by every transport in this package):
the reference signal power is the average per-slot symbol power of one
client, ``C^2 / d`` (a normalized differential carries total energy C^2
spread over d slots), against total per-slot noise power ``sigma^2``:

    sigma^2 = (C^2 / d) / 10^(snr_db / 10)

AWGN chip vectors of length L carry variance sigma^2 / L per dimension, so
projecting onto any unit-norm sequence yields variance sigma^2 / L.
"""

from dataclasses import dataclass

import numpy as np

RAYLEIGH_COMPLEX = "rayleigh_complex"
REAL_GAUSSIAN = "real_gaussian"

PHASE_CORRECTED = "phase_corrected"
REAL_PART = "real_part"


@dataclass(frozen=True)
class ChannelRealization:
    """Per-client gains for one round; complex for Rayleigh, real otherwise."""

    gains: np.ndarray
    model: str


@dataclass(frozen=True)
class NoiseConfig:
    """Resolved noise level for one configuration of the uplink."""

    sigma2: float        # total noise power per chip vector
    snr_db: float
    chip_length: int

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")

    @property
    def per_dimension_variance(self) -> float:
        return self.sigma2 / self.chip_length

    @classmethod
    def from_snr(cls, snr_db: float, clip_norm: float, n_slots: int,
                 chip_length: int) -> "NoiseConfig":
        return cls(sigma2=snr_to_sigma2(snr_db, clip_norm, n_slots),
                   snr_db=snr_db, chip_length=chip_length)


def snr_to_sigma2(snr_db: float, clip_norm: float, n_slots: int) -> float:
    """Total per-slot noise power for the documented SNR convention."""
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    if clip_norm <= 0:
        raise ValueError("clip_norm must be > 0")
    return (clip_norm ** 2 / n_slots) / 10.0 ** (snr_db / 10.0)


def sample_fading(n_clients: int, model: str, rng: np.random.Generator) -> ChannelRealization:
    """Draw one block-fading realization; E[|h|^2] = 1 for both models."""
    if model == RAYLEIGH_COMPLEX:
        gains = (rng.standard_normal(n_clients)
                 + 1j * rng.standard_normal(n_clients)) / np.sqrt(2.0)
    elif model == REAL_GAUSSIAN:
        gains = rng.standard_normal(n_clients)
    else:
        raise ValueError(f"unknown channel model {model!r}")
    return ChannelRealization(gains=gains, model=model)


def effective_gains(realization: ChannelRealization, phase_mode: str) -> np.ndarray:
    """Real gains seen by the decoder: |h| under phase correction, Re(h) otherwise."""
    h = realization.gains
    if realization.model == REAL_GAUSSIAN:
        return np.asarray(h, dtype=np.float64)
    if phase_mode == PHASE_CORRECTED:
        return np.abs(h)
    if phase_mode == REAL_PART:
        return np.real(h).copy()
    raise ValueError(f"unknown phase mode {phase_mode!r}")


def sample_noise_vector(chip_length: int, sigma2: float,
                        rng: np.random.Generator) -> np.ndarray:
    """AWGN chip vector with per-dimension variance sigma2 / L."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if sigma2 == 0.0:
        return np.zeros(chip_length)
    return rng.normal(0.0, np.sqrt(sigma2 / chip_length), size=chip_length)


def sample_noise_matrix(chip_length: int, n_slots: int, sigma2: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Independent AWGN chip vectors for n_slots slots, as an L x d matrix."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if sigma2 == 0.0:
        return np.zeros((chip_length, n_slots))
    return rng.normal(0.0, np.sqrt(sigma2 / chip_length),
                      size=(chip_length, n_slots))
