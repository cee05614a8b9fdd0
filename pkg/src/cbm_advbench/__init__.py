"""Adversarial robustness benchmark for vibration-based bearing fault classifiers."""
from .data import Label, LabeledDataset, SplitSpec, SyntheticConfig, synthesize_bearing_dataset
from .errors import CbmError
from .features import FEATURE_NAMES, Standardizer, extract_features, fit_standardizer

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "CbmError", "Label", "LabeledDataset", "SplitSpec", "Standardizer",
    "SyntheticConfig", "extract_features", "fit_standardizer", "synthesize_bearing_dataset",
]
