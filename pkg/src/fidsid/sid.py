"""Signed distance between a reference and a generated feature set.

For every generated sample in a batch, test points are drawn uniformly in an
axis-aligned hypercube centred on it. At each test point the kernel potential
of the generated batch minus that of the reference batch is evaluated; the
result is averaged over test points, centers and batches. Positive values mean
the reference set is the more diverse one.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .core import (DimensionMismatch, FeatureSet, InsufficientSamples,
                   MetricKind, MetricScore, NumericalError, Role, RoleMismatch,
                   SidConfig)

SCALE_FLOOR = 1e-9
# upper bound on kernel-matrix entries per work item (memory, not results)
_CHUNK_ELEMENTS = 1 << 21
# squared distances below this fraction of |x|^2 + |y|^2 are recomputed exactly
_CANCEL_RATIO = 1e-4

# stream tags for SeedSequence spawn keys
_SHUFFLE_STREAM = 0
_POINT_STREAM = 1


@dataclass(frozen=True, eq=False)
class HypercubeSample:
    center: np.ndarray
    side_r: float
    points: np.ndarray


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    shift: np.ndarray
    scale: np.ndarray

    def apply(self, data: np.ndarray) -> np.ndarray:
        return (data - self.shift) / self.scale


@dataclass(frozen=True)
class SidDiagnostics:
    score: MetricScore
    partials: tuple
    std_error: Optional[float]  # None when there is a single batch


def kernel_phi(x, y, order_m: int = 2, kernel_eps: float = 1e-3) -> float:
    """Regularized inverse-power kernel ``(|x - y|^2 + eps^2) ** (-m / 2)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    if kernel_eps <= 0:
        raise ValueError("kernel_eps must be > 0")
    diff = x - y
    return float((diff @ diff + kernel_eps * kernel_eps) ** (-order_m / 2))


def _kernel_row_sums(points: np.ndarray, samples: np.ndarray, sample_sq: np.ndarray,
                     order_m: int, kernel_eps: float) -> np.ndarray:
    """Per test point, the summed kernel against every row of ``samples``."""
    point_sq = np.einsum("ij,ij->i", points, points)
    dist = points @ samples.T
    dist *= -2.0
    dist += point_sq[:, None]
    dist += sample_sq[None, :]
    # the expansion loses digits when |x - y|^2 << |x|^2 + |y|^2; redo those directly
    rows = np.flatnonzero(dist.min(axis=1) < _CANCEL_RATIO * (point_sq + sample_sq.max()))
    if rows.size:
        sub = dist[rows]
        suspect = sub < _CANCEL_RATIO * (point_sq[rows, None] + sample_sq[None, :])
        r, c = np.nonzero(suspect)
        delta = points[rows[r]] - samples[c]
        dist[rows[r], c] = np.einsum("ij,ij->i", delta, delta)
    dist += kernel_eps * kernel_eps
    if order_m == 2:
        np.reciprocal(dist, out=dist)
    else:
        np.power(dist, -order_m / 2, out=dist)
    return dist.sum(axis=1)


def fit_standardization(ref: FeatureSet) -> StandardizationStats:
    if ref.n < 2:
        raise InsufficientSamples(f"standardization needs at least 2 rows, got {ref.n}")
    shift = ref.data.mean(axis=0)
    scale = np.maximum(ref.data.std(axis=0, ddof=1), SCALE_FLOOR)
    return StandardizationStats(shift, scale)


def hypercube_sample(center, side_r: float, count_mx: int,
                     stream_seed: int) -> HypercubeSample:
    """``count_mx`` i.i.d. points uniform in the cube of side ``side_r`` around ``center``."""
    center = np.asarray(center, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(int(stream_seed)))
    offsets = rng.random((count_mx, center.size))
    offsets -= 0.5
    offsets *= side_r
    return HypercubeSample(center, float(side_r), center + offsets)


def _stream_seed(seed: int, *key: int) -> int:
    hi, lo = np.random.SeedSequence(seed, spawn_key=key).generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)


def _shuffle(seed: int, n: int) -> np.ndarray:
    # keyed on (seed, n) only: equal-size sets get the same permutation
    return np.random.default_rng(np.random.SeedSequence(
        seed, spawn_key=(_SHUFFLE_STREAM, n))).permutation(n)


def _check_inputs(ref: FeatureSet, gen: FeatureSet, cfg: SidConfig) -> int:
    if ref.d != gen.d:
        raise DimensionMismatch(f"reference has d={ref.d}, generated has d={gen.d}")
    if ref.role is not Role.REFERENCE or gen.role is not Role.GENERATED:
        warnings.warn(f"unexpected roles ({ref.role.value}, {gen.role.value}); "
                      "the first argument is treated as the reference", RoleMismatch,
                      stacklevel=3)
    batch = min(ref.n, gen.n) // cfg.batches_n
    if batch < 1:
        raise InsufficientSamples(
            f"{cfg.batches_n} batches need at least {cfg.batches_n} rows per set, "
            f"got {ref.n} reference and {gen.n} generated")
    if cfg.standardize and ref.n < 2:
        raise InsufficientSamples("standardization needs at least 2 reference rows")
    return batch


def sid_diagnostics(ref: FeatureSet, gen: FeatureSet, cfg: Optional[SidConfig] = None,
                    threads: Optional[int] = None) -> SidDiagnostics:
    """Score plus the per-batch partial values and their standard error.

    ``threads`` caps the worker pool (default: CPU count). Work items are
    fixed (batch, center-chunk) blocks and are reduced in index order, so the
    result is bitwise identical for any worker count.
    """
    cfg = cfg or SidConfig()
    batch = _check_inputs(ref, gen, cfg)
    if cfg.standardize:
        stats = fit_standardization(ref)
        ref_t, gen_t = stats.apply(ref.data), stats.apply(gen.data)
    else:
        ref_t, gen_t = ref.data, gen.data

    perm_ref = _shuffle(cfg.seed, ref.n)
    perm_gen = _shuffle(cfg.seed, gen.n)
    n_batches, mx = cfg.batches_n, cfg.test_points_mx
    chunk = max(1, _CHUNK_ELEMENTS // (mx * batch))

    ref_batches, gen_batches = [], []
    for b in range(n_batches):
        sl = slice(b * batch, (b + 1) * batch)
        rb = np.ascontiguousarray(ref_t[perm_ref[sl]])
        gb = np.ascontiguousarray(gen_t[perm_gen[sl]])
        ref_batches.append((rb, np.einsum("ij,ij->i", rb, rb)))
        gen_batches.append((gb, np.einsum("ij,ij->i", gb, gb)))

    def work(item):
        b, start = item
        rb, rb_sq = ref_batches[b]
        gb, gb_sq = gen_batches[b]
        stop = min(start + chunk, batch)
        points = np.concatenate([
            hypercube_sample(gb[j], cfg.side_r, mx,
                             _stream_seed(cfg.seed, _POINT_STREAM, b, j)).points
            for j in range(start, stop)])
        diff = (_kernel_row_sums(points, gb, gb_sq, cfg.order_m, cfg.kernel_eps)
                - _kernel_row_sums(points, rb, rb_sq, cfg.order_m, cfg.kernel_eps))
        return diff.reshape(stop - start, mx).sum(axis=1)

    items = [(b, s) for b in range(n_batches) for s in range(0, batch, chunk)]
    workers = max(1, min(threads or _cpu_count(), len(items)))
    with threadpool_limits(limits=1, user_api="blas"):
        if workers == 1:
            results = [work(it) for it in items]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, items))

    per_center = np.empty((n_batches, batch))
    for (b, start), vals in zip(items, results):
        per_center[b, start:start + vals.size] = vals
    partials = per_center.sum(axis=1) / (mx * batch)
    value = float(partials.sum() / n_batches)
    if not math.isfinite(value):
        raise NumericalError(f"SID evaluated to {value}")
    std_error = (float(np.std(partials, ddof=1) / math.sqrt(n_batches))
                 if n_batches > 1 else None)
    score = MetricScore(MetricKind.SID, value, cfg.digest, ref.n, gen.n)
    return SidDiagnostics(score, tuple(float(p) for p in partials), std_error)


def sid_score(ref: FeatureSet, gen: FeatureSet, cfg: Optional[SidConfig] = None,
              threads: Optional[int] = None) -> MetricScore:
    return sid_diagnostics(ref, gen, cfg, threads).score


def _cpu_count() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
