"""Frechet Inception Distance and Signed Inception Distance on feature sets."""

from .core import (FeatureSet, FidConfig, GaussianSummary, InputError, MetricError,
                   MetricKind, MetricScore, NumericalError, Role, SidConfig,
                   validate_feature_set)
from .fid import fid_from_features, fid_score, summarize
from .sid import sid_diagnostics, sid_score

__all__ = [
    "FeatureSet", "FidConfig", "GaussianSummary", "InputError", "MetricError",
    "MetricKind", "MetricScore", "NumericalError", "Role", "SidConfig",
    "validate_feature_set", "fid_from_features", "fid_score", "summarize",
    "sid_diagnostics", "sid_score",
]
__version__ = "0.1.0"
