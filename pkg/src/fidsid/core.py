"""Shared domain types, validation and configuration digests."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np


class MetricError(Exception):
    """Base class for every error raised by this package."""


class InputError(MetricError, ValueError):
    """Malformed or unusable input. The CLI maps these to exit code 2."""


class NumericalError(MetricError, ArithmeticError):
    """Numerics broke down. The CLI maps these to exit code 3."""


class EmptySet(InputError):
    pass


class NonFinite(InputError):
    def __init__(self, row: int, col: int, source: Optional[str] = None):
        self.row, self.col, self.source = row, col, source
        where = f"{source}: " if source else ""
        super().__init__(f"{where}non-finite value at row {row}, column {col}")


class RaggedRows(InputError):
    def __init__(self, row: int, expected: int, got: int, source: Optional[str] = None):
        self.row, self.expected, self.got, self.source = row, expected, got, source
        where = f"{source}: " if source else ""
        super().__init__(f"{where}row {row} has {got} columns, expected {expected}")


class InsufficientSamples(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class RoleMismatch(UserWarning):
    """Feature sets were passed with swapped or unexpected role tags."""


class Role(str, enum.Enum):
    REFERENCE = "reference"
    GENERATED = "generated"


class MetricKind(str, enum.Enum):
    FID = "fid"
    SID = "sid"


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """An ``n x d`` float64 feature matrix with a role tag.

    Build these through :func:`validate_feature_set`; the stored array is
    read-only.
    """

    data: np.ndarray
    role: Role = Role.REFERENCE
    label: str = ""

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def with_role(self, role: Role, label: Optional[str] = None) -> "FeatureSet":
        return FeatureSet(self.data, Role(role), self.label if label is None else label)


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    mean: np.ndarray
    cov: np.ndarray
    n_samples: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(
                f"mean has shape {mean.shape} but covariance has shape {cov.shape}")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise NumericalError("Gaussian summary contains NaN/Inf")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12:
            raise NumericalError("covariance is not symmetric to 1e-12")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size


def _digest(obj: Any) -> str:
    payload = {"type": type(obj).__name__, **dataclasses.asdict(obj)}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FidConfig:
    eps: float = 1e-6
    ddof: int = 1

    def __post_init__(self):
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise InputError(f"eps must be a finite value >= 0, got {self.eps}")
        if self.ddof not in (0, 1):
            raise InputError(f"ddof must be 0 or 1, got {self.ddof}")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "ddof", int(self.ddof))

    @property
    def digest(self) -> str:
        return _digest(self)


@dataclass(frozen=True)
class SidConfig:
    order_m: int = 2
    side_r: float = 1.0
    batches_n: int = 10
    test_points_mx: int = 128
    seed: int = 0
    kernel_eps: float = 1e-3
    standardize: bool = True

    def __post_init__(self):
        if self.order_m < 1:
            raise InputError(f"order_m must be >= 1, got {self.order_m}")
        if not (self.side_r > 0 and math.isfinite(self.side_r)):
            raise InputError(f"side_r must be > 0, got {self.side_r}")
        if self.batches_n < 1:
            raise InputError(f"batches_n must be >= 1, got {self.batches_n}")
        if self.test_points_mx < 1:
            raise InputError(f"test_points_mx must be >= 1, got {self.test_points_mx}")
        if not (self.kernel_eps > 0 and math.isfinite(self.kernel_eps)):
            raise InputError(f"kernel_eps must be > 0, got {self.kernel_eps}")
        if not 0 <= self.seed < 2**64:
            raise InputError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        object.__setattr__(self, "order_m", int(self.order_m))
        object.__setattr__(self, "side_r", float(self.side_r))
        object.__setattr__(self, "kernel_eps", float(self.kernel_eps))
        object.__setattr__(self, "standardize", bool(self.standardize))

    @property
    def digest(self) -> str:
        return _digest(self)


@dataclass(frozen=True)
class MetricScore:
    kind: MetricKind
    value: float
    config_digest: str
    n_ref: int
    n_gen: int
    rank_deficient: bool = False

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NumericalError(f"{self.kind.value} score is not finite: {self.value}")
        if self.kind is MetricKind.FID and self.value < 0:
            raise NumericalError(f"FID must be >= 0, got {self.value}")

    def formatted(self) -> str:
        return format_score(self.value)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "config_digest": self.config_digest,
            "n_ref": self.n_ref,
            "n_gen": self.n_gen,
            "rank_deficient": self.rank_deficient,
        }


def format_score(value: float) -> str:
    """Fixed four-decimal rendering; negative zero prints as ``0.0000``."""
    text = f"{value:.4f}"
    return "0.0000" if text == "-0.0000" else text


def validate_feature_set(data: Any, role: Role | str = Role.REFERENCE,
                         label: str = "", source: Optional[str] = None) -> FeatureSet:
    """Check ``data`` against the FeatureSet invariants and wrap it.

    Accepts a 2-D array or a sequence of row sequences. ``source`` names the
    origin (usually a file path) in error messages.
    """
    if isinstance(data, np.ndarray):
        arr = data
    else:
        rows: Sequence = list(data)
        if rows and all(isinstance(r, (Sequence, np.ndarray)) and not isinstance(r, str)
                        for r in rows):
            width = len(rows[0])
            for i, row in enumerate(rows):
                if len(row) != width:
                    raise RaggedRows(i, width, len(row), source)
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InputError(f"feature data must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        where = f"{source}: " if source else ""
        raise EmptySet(f"{where}feature set is empty (shape {arr.shape})")
    arr = np.array(arr, dtype=np.float64, order="C", copy=True)
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c), source)
    arr.setflags(write=False)
    return FeatureSet(arr, Role(role), label)
