"""Dense symmetric linear algebra for the Frechet distance trace term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FeatureSet, InsufficientSamples, NumericalError

CLAMP_TOL = 1e-10
SYMMETRY_TOL = 1e-9

# Test-only fault injection: selftest must notice when this is flipped.
_FLIP_TRACE_SIGN = False


class NotSymmetric(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class IndefiniteMatrix(NumericalError):
    pass


@dataclass(frozen=True, eq=False)
class EigDecomposition:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def sample_mean(fs: FeatureSet) -> np.ndarray:
    return fs.data.mean(axis=0, dtype=np.float64)


def sample_covariance(fs: FeatureSet, ddof: int = 1) -> np.ndarray:
    """Two-pass covariance: center on the mean, then accumulate outer products.

    The result is symmetrized explicitly so it is exactly symmetric.
    """
    n = fs.n
    if n <= ddof:
        raise InsufficientSamples(
            f"covariance with ddof={ddof} needs more than {ddof} rows, got {n}")
    centered = fs.data - sample_mean(fs)
    cov = centered.T @ centered
    cov /= n - ddof
    return (cov + cov.T) / 2


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix contains NaN/Inf")
    asym = np.max(np.abs(a - a.T))
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
        raise NotSymmetric(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return a


def sym_eig(a: np.ndarray) -> EigDecomposition:
    a = _check_symmetric(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigDecomposition(w, v)


def _clamp_eigenvalues(w: np.ndarray, clamp_tol: float) -> np.ndarray:
    scale = np.max(np.abs(w))
    if w[0] < -clamp_tol * scale:
        raise IndefiniteMatrix(
            f"eigenvalue {w[0]:.6e} is below -{clamp_tol:g} * {scale:.6e}")
    return np.clip(w, 0.0, None)


def psd_sqrt(a: np.ndarray, clamp_tol: float = CLAMP_TOL) -> np.ndarray:
    """Symmetric square root of a PSD matrix via its eigendecomposition.

    Eigenvalues slightly below zero (relative to the largest magnitude) are
    treated as round-off and clamped; anything further out raises
    :class:`IndefiniteMatrix`.
    """
    eig = sym_eig(a)
    root = np.sqrt(_clamp_eigenvalues(eig.eigenvalues, clamp_tol))
    v = eig.eigenvectors
    s = (v * root) @ v.T
    return (s + s.T) / 2


def trace_sqrt_product(sigma_r: np.ndarray, sigma_g: np.ndarray,
                       clamp_tol: float = CLAMP_TOL) -> float:
    """Tr((sigma_r @ sigma_g)^(1/2)) for symmetric PSD inputs.

    Equal to Tr((S_g sigma_r S_g)^(1/2)) with S = PSD square root, which is
    the sum of the singular values of ``S_r @ S_g``. Taking singular values of
    the product of roots, instead of eigenvalues of the conjugated matrix,
    avoids squaring the spectrum: near-null directions (sample count below
    the dimension) keep their accuracy.
    """
    sigma_r = _check_symmetric(sigma_r)
    sigma_g = _check_symmetric(sigma_g)
    if sigma_r.shape != sigma_g.shape:
        raise NotSymmetric(f"shape mismatch {sigma_r.shape} vs {sigma_g.shape}")
    product = psd_sqrt(sigma_r, clamp_tol) @ psd_sqrt(sigma_g, clamp_tol)
    try:
        singular = np.linalg.svd(product, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    value = float(np.sum(singular))
    return -value if _FLIP_TRACE_SIGN else value
