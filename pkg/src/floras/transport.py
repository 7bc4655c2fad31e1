"""Uplink transports: the orthogonal-sequence scheme and its baselines.

The orthogonal-sequence round ("floras") proceeds in four steps:

1. all K participating clients transmit a common unit pilot on their
   assigned sequences; the receiver projects the pilot onto every column of
   the full set to estimate per-sequence gains (used columns yield
   ``h_k + a_k.n_s``, unused ones pure noise ``a_k.n_s``);
2. the receiver builds the projector ``v = sum_k a_k / h_hat_k`` over all N
   columns, because it does not know which K are in use;
3. each of the d differential entries is transmitted in one shared slot,
   ``y_i = sum_k a_k g_k x_k^i + n_i`` with block-constant effective gains
   ``g_k``;
4. the receiver decodes ``x~_i = v . y_i``, which equals the desired sum
   plus a used-sequence error term plus, from the unused sequences, a sum
   of Gaussian ratios that is Cauchy(0, N - K) distributed at any SNR.

Clients never need transmit-side channel state (phase correction at most).
The channel-inversion baseline needs full CSIT and is power-limited by the
worst surviving client; clients below a fade threshold sit the round out.

All differentials are normalized to zero mean and l2 norm C before
transmission; the receiver de-normalizes the decoded sum with the average
inverse scale, which is exact when all clients share one scale.
"""

from dataclasses import dataclass

import numpy as np

from . import channel as ch
from .errors import ConfigurationError, SingularEstimateError
from .sequences import SpreadingSet, derive_round_permutation, generate_orthonormal_set


@dataclass(frozen=True)
class NormParams:
    """Per-client de-normalization data sent on the control channel."""

    mean: float   # sample mean of the raw differential
    scale: float  # ||x - mean * 1||_2 / C; zero flags a constant differential


@dataclass
class RoundTranscript:
    """Everything one uplink round produces."""

    pilot_rx: np.ndarray          # length-L received pilot
    channel_estimates: np.ndarray  # length-N per-sequence estimates
    projector: np.ndarray         # length-L decoding vector v
    decoded_sum: np.ndarray       # length-d estimate of sum_k x_k
    trunc_bound: float | None = None  # clamp applied to decoded_sum, if any


def normalize_differential(x: np.ndarray, clip_norm: float):
    """Center and rescale a differential to zero mean and l2 norm C.

    A constant differential cannot be normalized; the client then transmits
    the zero vector and flags it with scale = 0 so the receiver can still
    recover the mean offset.
    """
    if clip_norm <= 0:
        raise ValueError("clip_norm must be > 0")
    x = np.asarray(x, dtype=np.float64)
    mean = float(x.mean())
    centered = x - mean
    norm = float(np.linalg.norm(centered))
    if norm == 0.0:
        return np.zeros_like(x), NormParams(mean=mean, scale=0.0)
    return clip_norm * centered / norm, NormParams(mean=mean, scale=norm / clip_norm)


def denormalize_sum(decoded: np.ndarray, params, clip_norm: float) -> np.ndarray:
    """Map a decoded sum of normalized differentials back to raw units.

    Uses the mean scale s_bar = mean_k s_k, exact when all scales agree;
    otherwise the per-client scale spread leaks into the estimate (the
    receiver only ever sees the sum, so this is the unbiased choice under
    exchangeable clients).
    """
    if len(params) < 1:
        raise ValueError("need at least one client's normalization params")
    del clip_norm  # scales already carry C; kept for interface symmetry
    s_bar = float(np.mean([p.scale for p in params]))
    mean_sum = float(np.sum([p.mean for p in params]))
    return s_bar * np.asarray(decoded, dtype=np.float64) + mean_sum


def estimate_channels(sset: SpreadingSet, used: np.ndarray, gains: np.ndarray,
                      sigma2: float, rng: np.random.Generator):
    """Step 1: simulate the common pilot and project onto every sequence.

    Returns (estimates, pilot_rx) with one estimate per column of the set.
    """
    used = np.asarray(used)
    if used.size != gains.size:
        raise ValueError("one gain per used sequence required")
    pilot = sset.columns[:, used] @ gains + ch.sample_noise_vector(
        sset.chip_length, sigma2, rng)
    return sset.columns.T @ pilot, pilot


def build_projector(estimates: np.ndarray, sset: SpreadingSet) -> np.ndarray:
    """Step 2: v = sum over all N sequences of a_k / h_hat_k."""
    estimates = np.asarray(estimates, dtype=np.float64)
    if np.any(estimates == 0.0):
        raise SingularEstimateError("zero channel estimate; resample pilot noise")
    return sset.columns @ (1.0 / estimates)


def transmit_and_decode(xhats: np.ndarray, sset: SpreadingSet, used: np.ndarray,
                        gains: np.ndarray, sigma2: float,
                        rng: np.random.Generator,
                        projector: np.ndarray) -> np.ndarray:
    """Steps 3-4: superpose all clients on the channel slot by slot and project.

    ``xhats`` is K x d (one normalized differential per row).  Returns the
    length-d decoded sum estimate.
    """
    xhats = np.atleast_2d(np.asarray(xhats, dtype=np.float64))
    if xhats.shape[0] != np.asarray(used).size:
        raise ValueError("xhats rows must match the number of used sequences")
    n_slots = xhats.shape[1]
    faded = sset.columns[:, used] @ (gains[:, None] * xhats)  # L x d
    received = faded + ch.sample_noise_matrix(sset.chip_length, n_slots, sigma2, rng)
    return projector @ received


def floras_round(xhats: np.ndarray, sset: SpreadingSet, used: np.ndarray,
                 gains: np.ndarray, sigma2: float, rng: np.random.Generator,
                 trunc_bound: float | None = None,
                 max_pilot_retries: int = 100) -> RoundTranscript:
    """One full uplink round, optionally clamping the decode to [-B, B].

    ``gains`` are the real effective gains (see channel.effective_gains).
    Exactly-zero channel estimates occur with probability zero under
    continuous noise; the pilot is resampled if one shows up so the
    decoder's noise law stays exact.  With sigma2 = 0 the unused sequences
    carry no energy at all, so the projector is built from the used columns
    only and the decode is the exact sum.
    """
    xhats = np.atleast_2d(np.asarray(xhats, dtype=np.float64))
    used = np.asarray(used)

    if sigma2 == 0.0:
        if np.any(gains == 0.0):
            raise SingularEstimateError("zero gain with zero noise cannot be inverted")
        estimates = np.zeros(sset.set_size)
        estimates[used] = gains
        pilot = sset.columns[:, used] @ gains
        projector = sset.columns[:, used] @ (1.0 / gains)
    else:
        for _ in range(max_pilot_retries):
            estimates, pilot = estimate_channels(sset, used, gains, sigma2, rng)
            if not np.any(estimates == 0.0):
                break
        else:
            raise SingularEstimateError(
                f"pilot produced a zero estimate {max_pilot_retries} times in a row")
        projector = build_projector(estimates, sset)
    decoded = transmit_and_decode(xhats, sset, used, gains, sigma2, rng, projector)
    if trunc_bound is not None:
        decoded = truncate(decoded, trunc_bound)
    return RoundTranscript(pilot, estimates, projector, decoded, trunc_bound)


def truncate(x: np.ndarray, bound: float) -> np.ndarray:
    """Elementwise clamp to [-bound, bound]."""
    if bound <= 0:
        raise ConfigurationError("truncation bound must be > 0")
    return np.clip(np.asarray(x, dtype=np.float64), -bound, bound)


def channel_inversion_round(xhats: np.ndarray, gains: np.ndarray, sigma2: float,
                            p_max: float, threshold: float,
                            rng: np.random.Generator):
    """Baseline round: clients pre-invert their channel so signals add coherently.

    Clients with |h|^2 below the fade threshold are excluded for the round.
    Survivors share the scale c = sqrt(p_max) * min |h| (the worst survivor
    transmits at the power cap), the receiver divides the superposition by
    c and rescales by K / surviving to stay unbiased for the full-cohort
    sum.  Returns (estimate or None, surviving_count).
    """
    if threshold <= 0:
        raise ConfigurationError("fade threshold must be > 0")
    if p_max <= 0:
        raise ConfigurationError("p_max must be > 0")
    xhats = np.atleast_2d(np.asarray(xhats, dtype=np.float64))
    n_clients, n_slots = xhats.shape
    power = np.abs(np.asarray(gains)) ** 2
    if power.size != n_clients:
        raise ValueError("one gain per client required")
    survivors = power >= threshold
    n_surv = int(survivors.sum())
    if n_surv == 0:
        return None, 0
    scale = np.sqrt(p_max) * np.sqrt(power[survivors].min())
    clean = xhats[survivors].sum(axis=0)
    noise = (np.zeros(n_slots) if sigma2 == 0.0
             else rng.normal(0.0, np.sqrt(sigma2), size=n_slots))
    decoded = (scale * clean + noise) / scale
    return decoded * (n_clients / n_surv), n_surv


def decode_residual_samples(n_rounds: int, set_size: int, k_clients: int,
                            snr_db: float, rng: np.random.Generator,
                            clip_norm: float = 1.0,
                            channel_model: str = ch.RAYLEIGH_COMPLEX,
                            phase_mode: str = ch.PHASE_CORRECTED,
                            chunk: int = 1 << 17) -> np.ndarray:
    """Decode residual (x~ - sum x) of one slot per independent round.

    Every round draws fresh fading, pilot noise, and slot noise, and every
    client transmits the single symbol C, so each returned sample is one
    independent draw of the end-to-end decode error.  The arithmetic is the
    orthonormal-set expansion of the projector decode, vectorized across
    rounds (identical to floras_round slot by slot, since A^T A = I).
    """
    sset = generate_orthonormal_set(set_size)
    a_cols = sset.columns
    chip_len = sset.chip_length
    sigma2 = ch.snr_to_sigma2(snr_db, clip_norm, 1)
    chip_std = np.sqrt(sigma2 / chip_len)

    out = np.empty(n_rounds)
    done = 0
    while done < n_rounds:
        m = min(chunk, n_rounds - done)
        fading = ch.sample_fading(m * k_clients, channel_model, rng)
        gains = ch.effective_gains(
            ch.ChannelRealization(fading.gains.reshape(m, k_clients), fading.model),
            phase_mode)
        pilot_proj = rng.normal(0.0, chip_std, (m, chip_len)) @ a_cols
        slot_proj = rng.normal(0.0, chip_std, (m, chip_len)) @ a_cols
        est_used = gains + pilot_proj[:, :k_clients]
        signal_err = ((gains / est_used - 1.0) * clip_norm).sum(axis=1)
        used_noise = (slot_proj[:, :k_clients] / est_used).sum(axis=1)
        unused_noise = (slot_proj[:, k_clients:] / pilot_proj[:, k_clients:]).sum(axis=1)
        out[done:done + m] = signal_err + used_noise + unused_noise
        done += m
    return out


@dataclass
class RoundSum:
    """What a transport hands back to the training engine."""

    estimate: np.ndarray | None  # decoded sum, or None if the round failed
    n_contributing: int


class NoiselessTransport:
    """Ideal reference: the exact sum of raw differentials."""

    uses_normalization = False
    trunc_bound = None
    clip_norm = None

    def aggregate(self, diffs: np.ndarray, round_id: int,
                  rng: np.random.Generator) -> RoundSum:
        del round_id, rng
        return RoundSum(estimate=diffs.sum(axis=0),
                        n_contributing=diffs.shape[0])


class FlorasTransport:
    """Orthogonal-sequence uplink with keyed per-round signature assignment."""

    uses_normalization = True

    def __init__(self, set_size: int, clip_norm: float, trunc_bound: float,
                 snr_db: float, key: bytes,
                 channel_model: str = ch.RAYLEIGH_COMPLEX,
                 phase_mode: str = ch.PHASE_CORRECTED):
        if trunc_bound <= clip_norm:
            raise ConfigurationError(
                f"truncation bound {trunc_bound} must exceed clip norm {clip_norm}")
        self.sset = generate_orthonormal_set(set_size)
        self.clip_norm = clip_norm
        self.trunc_bound = trunc_bound
        self.snr_db = snr_db
        self.key = key
        self.channel_model = channel_model
        self.phase_mode = phase_mode

    def gap_for(self, n_clients: int) -> int:
        """Unused sequences (= Cauchy noise scale) for a cohort of this size."""
        return self.sset.set_size - n_clients

    def aggregate(self, xhats: np.ndarray, round_id: int,
                  rng: np.random.Generator) -> RoundSum:
        n_clients, n_slots = xhats.shape
        if n_clients > self.sset.set_size:
            raise ConfigurationError(
                f"{n_clients} clients cannot share {self.sset.set_size} sequences")
        perm = derive_round_permutation(self.key, round_id, self.sset.set_size)
        used = perm[:n_clients]
        realization = ch.sample_fading(n_clients, self.channel_model, rng)
        gains = ch.effective_gains(realization, self.phase_mode)
        sigma2 = ch.snr_to_sigma2(self.snr_db, self.clip_norm, n_slots)
        transcript = floras_round(xhats, self.sset, used, gains, sigma2, rng,
                                  trunc_bound=self.trunc_bound)
        return RoundSum(estimate=transcript.decoded_sum, n_contributing=n_clients)


class ChannelInversionTransport:
    """CSIT baseline: truncated channel inversion with a fade threshold."""

    uses_normalization = True

    def __init__(self, clip_norm: float, trunc_bound: float, snr_db: float,
                 p_max: float = 1.0, threshold: float = 0.01,
                 channel_model: str = ch.RAYLEIGH_COMPLEX):
        if trunc_bound <= clip_norm:
            raise ConfigurationError(
                f"truncation bound {trunc_bound} must exceed clip norm {clip_norm}")
        self.clip_norm = clip_norm
        self.trunc_bound = trunc_bound
        self.snr_db = snr_db
        self.p_max = p_max
        self.threshold = threshold
        self.channel_model = channel_model

    def aggregate(self, xhats: np.ndarray, round_id: int,
                  rng: np.random.Generator) -> RoundSum:
        del round_id
        n_clients, n_slots = xhats.shape
        realization = ch.sample_fading(n_clients, self.channel_model, rng)
        sigma2 = ch.snr_to_sigma2(self.snr_db, self.clip_norm, n_slots)
        decoded, n_surv = channel_inversion_round(
            xhats, realization.gains, sigma2, self.p_max, self.threshold, rng)
        return RoundSum(estimate=decoded, n_contributing=n_surv)


TRANSPORT_KINDS = ("floras", "channel_inversion", "noiseless")
