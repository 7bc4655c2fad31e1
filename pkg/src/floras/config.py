"""Experiment specifications: validation, JSON (de)serialization, presets.

A spec fully determines an experiment: every random draw is derived from
``seed`` via labeled streams, so (spec, seed) -> outputs is a pure function.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field

from . import channel as ch
from .fedavg import FLConfig
from .transport import (ChannelInversionTransport, FlorasTransport,
                        NoiselessTransport, TRANSPORT_KINDS)

DEFAULT_KEY_HEX = "f10ca5"  # shared-secret placeholder; override per deployment
DEFAULT_DATA_DIR = os.path.join("data", "mnist")
DATA_DIR_ENV = "FLORAS_DATA_DIR"


@dataclass
class TransportConfig:
    kind: str = "floras"
    snr_db: float = 15.0
    set_size: int = 20            # N, only for kind == "floras"
    clip_norm: float = 1.0        # C
    trunc_bound: float = 10.0     # B
    p_max: float = 1.0            # baseline per-symbol power cap
    threshold: float = 0.01       # baseline fade threshold on |h|^2
    channel_model: str = ch.RAYLEIGH_COMPLEX
    phase_mode: str = ch.PHASE_CORRECTED
    key_hex: str = DEFAULT_KEY_HEX


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    fl: FLConfig = field(default_factory=FLConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    trials: int = 5
    seed: int = 2024
    delta: float = 1e-5
    n_train: int = 4000
    n_test: int = 1000
    data_dir: str | None = None  # fall back to $FLORAS_DATA_DIR, then data/mnist
    output_dir: str = "results"


def resolve_data_dir(spec_dir: str | None = None) -> str:
    return spec_dir or os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR


def validate_spec(spec: ExperimentSpec) -> list[str]:
    """All validation errors at once; an empty list means the spec is runnable."""
    errors = [f"fl.{e}" for e in spec.fl.validate()]
    t = spec.transport
    if t.kind not in TRANSPORT_KINDS:
        errors.append(f"transport.kind must be one of {TRANSPORT_KINDS}, got {t.kind!r}")
    if t.kind == "floras" and t.set_size < spec.fl.k_clients:
        errors.append(
            f"sequence set of size {t.set_size} is smaller than the cohort "
            f"of {spec.fl.k_clients}")
    if t.clip_norm <= 0:
        errors.append("transport.clip_norm must be > 0")
    if t.kind != "noiseless" and t.trunc_bound < 10.0 * t.clip_norm:
        errors.append(
            f"truncation bound {t.trunc_bound} must be >= 10 * clip_norm "
            f"= {10.0 * t.clip_norm} (clipping must not bite the signal)")
    if t.kind == "floras":
        try:
            bytes.fromhex(t.key_hex)
        except ValueError:
            errors.append(f"key_hex {t.key_hex!r} is not valid hex")
        else:
            if not t.key_hex:
                errors.append("key_hex must be non-empty")
    if t.threshold <= 0:
        errors.append("transport.threshold must be > 0")
    if t.p_max <= 0:
        errors.append("transport.p_max must be > 0")
    if not 0.0 < spec.delta < 1.0:
        errors.append(f"delta must be in (0, 1), got {spec.delta}")
    q = spec.fl.batch_size / max(spec.n_train // max(spec.fl.m_clients, 1), 1)
    if q > 1.0:
        errors.append(
            f"batch_size {spec.fl.batch_size} exceeds the shard size "
            f"{spec.n_train // spec.fl.m_clients}")
    if spec.trials < 1:
        errors.append("trials must be >= 1")
    if spec.n_train % spec.fl.m_clients:
        errors.append(
            f"n_train {spec.n_train} must split evenly over {spec.fl.m_clients} clients")
    return errors


def build_transport(cfg: TransportConfig):
    if cfg.kind == "noiseless":
        return NoiselessTransport()
    if cfg.kind == "floras":
        return FlorasTransport(set_size=cfg.set_size, clip_norm=cfg.clip_norm,
                               trunc_bound=cfg.trunc_bound, snr_db=cfg.snr_db,
                               key=bytes.fromhex(cfg.key_hex),
                               channel_model=cfg.channel_model,
                               phase_mode=cfg.phase_mode)
    if cfg.kind == "channel_inversion":
        return ChannelInversionTransport(clip_norm=cfg.clip_norm,
                                         trunc_bound=cfg.trunc_bound,
                                         snr_db=cfg.snr_db, p_max=cfg.p_max,
                                         threshold=cfg.threshold,
                                         channel_model=cfg.channel_model)
    raise ValueError(f"unknown transport kind {cfg.kind!r}")


def spec_to_dict(spec: ExperimentSpec) -> dict:
    return dataclasses.asdict(spec)


def spec_from_dict(raw: dict) -> ExperimentSpec:
    fl = FLConfig(**raw.pop("fl", {}))
    transport = TransportConfig(**raw.pop("transport", {}))
    return ExperimentSpec(fl=fl, transport=transport, **raw)


def load_spec(path: str) -> ExperimentSpec:
    with open(path) as f:
        return spec_from_dict(json.load(f))


def save_spec(spec: ExperimentSpec, path: str) -> None:
    with open(path, "w") as f:
        json.dump(spec_to_dict(spec), f, indent=2, sort_keys=True)
        f.write("\n")


def _training_spec(name, *, partition, lr, batch_size, kind, snr_db, set_size,
                   trials, rounds, seed) -> ExperimentSpec:
    return ExperimentSpec(
        name=name,
        fl=FLConfig(m_clients=20, k_clients=20, rounds=rounds, local_steps=1,
                    batch_size=batch_size, lr=lr, reg=0.01, partition=partition),
        transport=TransportConfig(kind=kind, snr_db=snr_db, set_size=set_size),
        trials=trials, seed=seed)


def preset_specs(preset: str, trials: int = 5, rounds: int = 200,
                 seed: int = 2024) -> list[ExperimentSpec]:
    """Training specs for one of the shipped experiment presets.

    ``fig4_iid`` / ``fig4_noniid``: both transports at 0 and 15 dB with the
    communication-efficiency hyperparameters.  ``fig5_iid`` / ``fig5_noniid``:
    the sequence-surplus sweep N - K in {0, 1, 5, 10} at 20 dB (the privacy
    knob).  ``fig5`` runs both partition variants.
    """
    def fig4(partition, lr):
        tag = "iid" if partition == "iid" else "noniid"
        return [
            _training_spec(f"fig4_{tag}_{kind}_{snr:g}db", partition=partition,
                           lr=lr, batch_size=50, kind=kind, snr_db=snr,
                           set_size=20, trials=trials, rounds=rounds, seed=seed)
            for snr in (0.0, 15.0)
            for kind in ("floras", "channel_inversion")
        ]

    def fig5(partition, lr):
        tag = "iid" if partition == "iid" else "noniid"
        return [
            _training_spec(f"fig5_{tag}_gap{gap}", partition=partition, lr=lr,
                           batch_size=20, kind="floras", snr_db=20.0,
                           set_size=20 + gap, trials=trials, rounds=rounds,
                           seed=seed)
            for gap in (0, 1, 5, 10)
        ]

    if preset == "fig4_iid":
        return fig4("iid", 0.005)
    if preset == "fig4_noniid":
        return fig4("one_label", 0.001)
    if preset == "fig5_iid":
        return fig5("iid", 0.005)
    if preset == "fig5_noniid":
        return fig5("one_label", 0.001)
    if preset == "fig5":
        return fig5("iid", 0.005) + fig5("one_label", 0.001)
    raise ValueError(f"unknown preset {preset!r}")


# accountant-only preset: (label, q, gap) with C = 1, delta = 1e-5
FIG2_CONFIGS = (
    ("fig2_q0.05_gap5", 0.05, 5.0),
    ("fig2_q0.01_gap5", 0.01, 5.0),
    ("fig2_q0.05_gap10", 0.05, 10.0),
)

TRAINING_PRESETS = ("fig4_iid", "fig4_noniid", "fig5", "fig5_iid", "fig5_noniid")
ALL_PRESETS = TRAINING_PRESETS + ("fig2",)
