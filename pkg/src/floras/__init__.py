"""Simulation lab for over-the-air federated learning with orthogonal
spreading sequences: uplink transports, a Cauchy-noise privacy accountant,
a convergence-bound calculator, and a FedAvg experiment runner.
"""

from . import bound, cauchy, channel, config, data, experiment, fedavg, privacy, sequences, transport
from .errors import ConfigurationError, IngestionError, SingularEstimateError

__version__ = "0.1.0"

__all__ = [
    "bound", "cauchy", "channel", "config", "data", "experiment", "fedavg",
    "privacy", "sequences", "transport",
    "ConfigurationError", "IngestionError", "SingularEstimateError",
    "__version__",
]
