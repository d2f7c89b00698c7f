"""Partial-label learning with evidence fusion and calibrated binary confidence."""

from .datagen import AugmentSpec, PartialDataset
from .evidence import BPA, LabelSet
from .metrics import EvalReport
from .oracle import NoiseModel
from .pll import PllConfig, PllModel, Prediction

__version__ = "0.1.0"

__all__ = [
    "AugmentSpec",
    "BPA",
    "EvalReport",
    "LabelSet",
    "NoiseModel",
    "PartialDataset",
    "PllConfig",
    "PllModel",
    "Prediction",
    "__version__",
]
