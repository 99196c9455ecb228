"""FDS1 feature container and CSV import.

FDS1 layout (all little-endian)::

    offset  size  field
    0       4     magic  b"FDS1"
    4       1     dtype  0x01 = float32, 0x02 = float64
    5       3     reserved, zero
    8       8     rows   uint64
    16      8     dims   uint64
    24      ...   rows * dims values, row-major

Concurrent writers on one path are not supported.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .core import (FeatureSet, InputError, RaggedRows, Role, validate_feature_set)

MAGIC = b"FDS1"
HEADER = struct.Struct("<4sB3sQQ")
DTYPES = {0x01: np.dtype("<f4"), 0x02: np.dtype("<f8")}
DTYPE_CODES = {"float32": 0x01, "f4": 0x01, "float64": 0x02, "f8": 0x02}

PathLike = Union[str, os.PathLike]


class IoFailure(InputError):
    pass


class BadHeader(InputError):
    pass


class BadMagic(BadHeader):
    pass


class BadDtype(BadHeader):
    pass


class TruncatedPayload(InputError):
    def __init__(self, path, expected: int, actual: int):
        self.expected, self.actual = expected, actual
        super().__init__(f"{path}: payload holds {actual} bytes, header implies {expected}")


class TrailingData(TruncatedPayload):
    pass


class NonNumericCell(InputError):
    pass


def _dtype_code(dtype) -> int:
    if isinstance(dtype, int) and dtype in DTYPES:
        return dtype
    key = np.dtype(dtype).name if not isinstance(dtype, str) else dtype
    try:
        return DTYPE_CODES[key]
    except KeyError:
        raise BadDtype(f"unsupported dtype {dtype!r}; use float32 or float64") from None


def write_features(fs: FeatureSet, path: PathLike, dtype="float64") -> None:
    code = _dtype_code(dtype)
    if fs.n == 0 or fs.d == 0:
        raise InputError("refusing to write an empty feature set")
    payload = np.ascontiguousarray(fs.data, dtype=DTYPES[code])
    try:
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, code, b"\0\0\0", fs.n, fs.d))
            fh.write(payload.tobytes(order="C"))
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc


def read_features(path: PathLike, role: Role | str = Role.REFERENCE,
                  label: str = "") -> FeatureSet:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
    if len(blob) < HEADER.size:
        if blob[:4] != MAGIC[:len(blob[:4])]:
            raise BadMagic(f"{path}: not an FDS1 file (magic {blob[:4]!r})")
        raise TruncatedPayload(path, HEADER.size, len(blob))
    magic, code, reserved, rows, dims = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagic(f"{path}: not an FDS1 file (magic {magic!r})")
    if code not in DTYPES:
        raise BadDtype(f"{path}: unknown dtype code 0x{code:02x}")
    if reserved != b"\0\0\0":
        raise BadHeader(f"{path}: reserved header bytes are not zero")
    dtype = DTYPES[code]
    expected = rows * dims * dtype.itemsize
    actual = len(blob) - HEADER.size
    if actual < expected:
        raise TruncatedPayload(path, expected, actual)
    if actual > expected:
        raise TrailingData(path, expected, actual)
    data = np.frombuffer(blob, dtype=dtype, offset=HEADER.size).reshape(rows, dims)
    return validate_feature_set(data.astype(np.float64), role,
                                label or Path(path).name, source=str(path))


def _parse_row(cells, line_no, path):
    out = []
    for col, cell in enumerate(cells):
        try:
            out.append(float(cell))
        except ValueError:
            raise NonNumericCell(
                f"{path}: line {line_no}, column {col}: {cell!r} is not a number") from None
    return out


def import_csv(path: PathLike, role: Role | str = Role.REFERENCE,
               label: str = "") -> FeatureSet:
    """Read a rectangular numeric CSV (comma separated, no quoting).

    A first line containing any non-numeric cell is taken as a header.
    Blank lines are skipped. Row indices in errors count data rows from 0.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if lines:
        first = lines[0][1].split(",")
        try:
            [float(c) for c in first]
        except ValueError:
            lines = lines[1:]
    rows = []
    width = None
    for idx, (line_no, line) in enumerate(lines):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRows(idx, width, len(cells), source=f"{path} (line {line_no})")
        rows.append(_parse_row(cells, line_no, path))
    data = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    return validate_feature_set(data, role, label or Path(path).name, source=str(path))


def load_features(path: PathLike, role: Role | str = Role.REFERENCE,
                  label: str = "") -> FeatureSet:
    """Dispatch on extension: ``.fds`` container or ``.csv`` import."""
    suffix = Path(path).suffix.lower()
    if suffix == ".fds":
        return read_features(path, role, label)
    if suffix == ".csv":
        return import_csv(path, role, label)
    raise InputError(f"{path}: unknown feature file type {suffix!r} (expected .fds or .csv)")
