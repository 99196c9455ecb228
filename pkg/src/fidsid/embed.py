"""Deterministic toy embedder: 4x4 grid channel means plus channel spreads.

This is a stand-in for a pretrained network so that the images -> features ->
metrics pipeline runs without one. It is NOT a perceptual embedding; scores
computed on these features are not comparable to Inception-based scores.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .core import FeatureSet, InputError, Role, validate_feature_set

GRID = 4
CHANNELS = 3
EMBED_DIM = GRID * GRID * CHANNELS + CHANNELS  # 51
PPM_SUFFIXES = (".ppm",)


class ImageTooSmall(InputError):
    pass


class BadChannelCount(InputError):
    pass


class ImageDecodeError(InputError):
    pass


class NoImages(InputError):
    pass


def _header_tokens(blob: bytes, count: int):
    """Return ``count`` whitespace-separated header tokens and the offset after the last."""
    tokens = []
    pos = 0
    n = len(blob)
    while len(tokens) < count:
        while pos < n and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < n and blob[pos:pos + 1] == b"#":
            while pos < n and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not blob[pos:pos + 1].isspace() and blob[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageDecodeError("unexpected end of header")
        tokens.append(blob[start:pos])
    return tokens, pos


def decode_p6(blob: bytes) -> np.ndarray:
    """Decode a binary PPM (maxval 255) into an ``H x W x 3`` float array in [0, 1]."""
    if blob[:2] != b"P6":
        raise ImageDecodeError(f"not a P6 file (magic {blob[:2]!r})")
    (magic, w, h, maxval), pos = _header_tokens(blob, 4)
    if magic != b"P6":
        raise ImageDecodeError(f"not a P6 file (magic {magic!r})")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageDecodeError("non-integer width/height/maxval") from None
    if width <= 0 or height <= 0:
        raise ImageDecodeError(f"bad image size {width}x{height}")
    if maxval != 255:
        raise ImageDecodeError(f"only maxval 255 is supported, got {maxval}")
    if pos >= len(blob) or not blob[pos:pos + 1].isspace():
        raise ImageDecodeError("missing whitespace after header")
    pos += 1
    need = width * height * 3
    if len(blob) - pos < need:
        raise ImageDecodeError(f"truncated pixel data: {len(blob) - pos} of {need} bytes")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=need, offset=pos)
    return pixels.reshape(height, width, 3).astype(np.float64) / 255.0


def encode_p6(pixels: np.ndarray) -> bytes:
    """Inverse of :func:`decode_p6` for uint8 or [0, 1] float input."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w, c = arr.shape
    if c != 3:
        raise BadChannelCount(f"expected 3 channels, got {c}")
    return b"P6\n%d %d\n255\n" % (w, h) + arr.tobytes()


def embed_image(pixels) -> np.ndarray:
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != CHANNELS:
        raise BadChannelCount(f"expected an H x W x 3 image, got shape {img.shape}")
    h, w, _ = img.shape
    if h < GRID or w < GRID:
        raise ImageTooSmall(f"image is {h}x{w}; need at least {GRID}x{GRID}")
    rows = [i * h // GRID for i in range(GRID + 1)]
    cols = [j * w // GRID for j in range(GRID + 1)]
    sums = np.add.reduceat(np.add.reduceat(img, rows[:-1], axis=0), cols[:-1], axis=1)
    counts = np.outer(np.diff(rows), np.diff(cols))[:, :, None]
    means = (sums / counts).reshape(-1)
    spread = img.reshape(-1, CHANNELS).std(axis=0)
    return np.concatenate([means, spread])


def embed_directory(directory, role: Role | str = Role.REFERENCE) -> FeatureSet:
    """Embed every ``*.ppm`` file in ``directory``; rows follow byte-sorted file names."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"{directory}: not a directory")
    files = sorted((p for p in directory.iterdir()
                    if p.is_file() and p.suffix.lower() in PPM_SUFFIXES),
                   key=lambda p: os.fsencode(p.name))
    if not files:
        raise NoImages(f"{directory}: no .ppm images found")
    rows = []
    for path in files:
        try:
            rows.append(embed_image(decode_p6(path.read_bytes())))
        except OSError as exc:
            raise ImageDecodeError(f"{path}: {exc.strerror or exc}") from exc
        except InputError as exc:
            raise type(exc)(f"{path}: {exc}") from exc
    return validate_feature_set(np.stack(rows), role, directory.name, source=str(directory))
