"""Frechet distance between Gaussian summaries of two feature sets."""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from . import linalg
from .core import (DimensionMismatch, FeatureSet, FidConfig, GaussianSummary,
                   MetricKind, MetricScore, NumericalError, Role, RoleMismatch)

NEGATIVE_CLAMP = 1e-8


class InternalNumericalError(NumericalError):
    pass


def summarize(fs: FeatureSet, cfg: Optional[FidConfig] = None) -> GaussianSummary:
    cfg = cfg or FidConfig()
    return GaussianSummary(linalg.sample_mean(fs),
                           linalg.sample_covariance(fs, cfg.ddof), fs.n)


def _rank_deficient(s: GaussianSummary) -> bool:
    # a centered sample of n rows spans at most n - 1 dimensions
    return s.n_samples - 1 < s.d


def fid_score(ref: GaussianSummary, gen: GaussianSummary,
              cfg: Optional[FidConfig] = None) -> MetricScore:
    """``|mu_r - mu_g|^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2))``.

    ``cfg.eps * I`` is added to both covariances before the trace term, on
    every call. Results in ``[-1e-8, 0)`` are clamped to zero; anything more
    negative raises :class:`InternalNumericalError`.
    """
    cfg = cfg or FidConfig()
    if ref.d != gen.d:
        raise DimensionMismatch(f"reference has d={ref.d}, generated has d={gen.d}")
    diff = ref.mean - gen.mean
    mean_term = float(diff @ diff)
    if np.array_equal(ref.cov, gen.cov):
        # Tr(S + S - 2 S) vanishes identically
        cov_term = 0.0
    else:
        ridge = cfg.eps * np.eye(ref.d)
        cov_r = ref.cov + ridge
        cov_g = gen.cov + ridge
        cov_term = (float(np.trace(cov_r)) + float(np.trace(cov_g))
                    - 2.0 * linalg.trace_sqrt_product(cov_r, cov_g))
    value = mean_term + cov_term
    if value < 0:
        if value < -NEGATIVE_CLAMP:
            raise InternalNumericalError(f"FID evaluated to {value:.6e} < 0")
        value = 0.0
    return MetricScore(MetricKind.FID, value, cfg.digest, ref.n_samples,
                       gen.n_samples, _rank_deficient(ref) or _rank_deficient(gen))


def fid_from_features(ref: FeatureSet, gen: FeatureSet,
                      cfg: Optional[FidConfig] = None) -> MetricScore:
    cfg = cfg or FidConfig()
    if ref.d != gen.d:
        raise DimensionMismatch(f"reference has d={ref.d}, generated has d={gen.d}")
    if ref.role is not Role.REFERENCE or gen.role is not Role.GENERATED:
        warnings.warn(f"unexpected roles ({ref.role.value}, {gen.role.value}); "
                      "FID is symmetric so the computation proceeds", RoleMismatch,
                      stacklevel=2)
    return fid_score(summarize(ref, cfg), summarize(gen, cfg), cfg)
