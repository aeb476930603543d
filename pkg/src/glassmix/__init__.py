"""glassmix: exact desk-scale laboratory for Glauber dynamics on Gaussian
spin-glass energy landscapes."""

__version__ = "0.1.0"
SCHEMA_VERSION = "v1"

from .constants import BETA_C
from .model import (
    CorrelationProfile,
    DisorderInstance,
    ModelParams,
    Repr,
    SpinConfiguration,
    correlation,
    energy,
    energy_delta,
    energy_table,
    hamming,
    sample_disorder,
)

__all__ = [
    "BETA_C",
    "SCHEMA_VERSION",
    "CorrelationProfile",
    "DisorderInstance",
    "ModelParams",
    "Repr",
    "SpinConfiguration",
    "correlation",
    "energy",
    "energy_delta",
    "energy_table",
    "hamming",
    "sample_disorder",
    "__version__",
]
