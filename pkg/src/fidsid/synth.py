"""Seeded synthetic Gaussians and independent oracles for the metric code."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (DimensionMismatch, FeatureSet, InputError, NumericalError, Role,
                   validate_feature_set)

# relative size of the imaginary part / negative part tolerated in the product eigenvalues
_BRUTE_TOL = 1e-9


class NonPositiveEigenvalue(NumericalError):
    pass


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Diagonal Gaussian N(mean, diag(sigma^2)) plus a sample count and seed.

    ``sigma`` may be a scalar (isotropic) or a length-d vector.
    """

    mean: np.ndarray
    sigma: Union[float, np.ndarray]
    n: int
    seed: int = 0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        if mean.ndim != 1 or mean.size == 0:
            raise InputError("mean must be a non-empty vector")
        sigma = np.asarray(self.sigma, dtype=np.float64)
        sigma = np.full(mean.size, float(sigma)) if sigma.ndim == 0 else sigma
        if sigma.shape != mean.shape:
            raise DimensionMismatch(f"sigma shape {sigma.shape} vs mean shape {mean.shape}")
        if not np.all(sigma > 0) or not np.all(np.isfinite(sigma)):
            raise InputError("sigma entries must be finite and > 0")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.mean.size

    @classmethod
    def isotropic(cls, d: int, sigma: float = 1.0, n: int = 1000, seed: int = 0,
                  mean=None) -> "GaussianSpec":
        return cls(np.zeros(d) if mean is None else mean, sigma, n, seed)


def sample_gaussian(spec: GaussianSpec, role: Role | str = Role.REFERENCE,
                    label: str = "") -> FeatureSet:
    rng = np.random.default_rng(spec.seed)
    data = spec.mean + spec.sigma * rng.standard_normal((spec.n, spec.d))
    return validate_feature_set(data, role, label)


def closed_form_fid(a: GaussianSpec, b: GaussianSpec) -> float:
    if a.d != b.d:
        raise DimensionMismatch(f"d={a.d} vs d={b.d}")
    dm = a.mean - b.mean
    ds = a.sigma - b.sigma
    return float(dm @ dm + ds @ ds)


def random_spd(d: int, rng: np.random.Generator, log10_range=(-3.0, 3.0)) -> np.ndarray:
    """Q^T D Q with Q orthogonal (QR of a Gaussian matrix), D log-uniform."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    diag = 10.0 ** rng.uniform(*log10_range, size=d)
    a = (q.T * diag) @ q
    return (a + a.T) / 2


def brute_trace_sqrt_product(sigma_r, sigma_g) -> float:
    """Sum of square roots of the eigenvalues of the raw product ``sigma_r @ sigma_g``.

    Uses the general (non-symmetric) eigenvalue solver on the product so it
    shares no code path with the symmetric route in ``linalg``.
    """
    a = np.asarray(sigma_r, dtype=np.float64)
    b = np.asarray(sigma_g, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"need equal square matrices, got {a.shape} and {b.shape}")
    if a.shape[0] > 8:
        raise InputError("brute-force oracle is limited to d <= 8")
    lam = np.linalg.eigvals(a @ b)
    scale = np.max(np.abs(lam))
    if np.any(np.abs(lam.imag) > _BRUTE_TOL * scale) or np.any(lam.real < -_BRUTE_TOL * scale):
        raise NonPositiveEigenvalue(f"product has eigenvalues {lam}; inputs are not both PSD")
    return float(np.sum(np.sqrt(np.clip(lam.real, 0.0, None))))
