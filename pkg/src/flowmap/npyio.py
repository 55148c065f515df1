"""Minimal NPY v1.0 reader/writer.

Flow-map arrays are persisted as plain NPY files so they can be loaded by
any numpy-compatible tool. Only the subset of the format this project
produces is supported on read: version 1.0, little-endian float64 or
1-byte bool, C order.
"""

from __future__ import annotations

import ast
import struct

import numpy as np

MAGIC = b"\x93NUMPY"

_SUPPORTED_DESCRS = {"<f8": np.float64, "|b1": np.bool_}


class NpyFormatError(ValueError):
    """Raised when a file does not parse as a supported NPY v1.0 array."""


def write_npy(path, array: np.ndarray) -> None:
    """Write `array` as NPY v1.0 (little-endian, C order)."""
    arr = np.ascontiguousarray(array)
    if arr.dtype == np.float64:
        descr = "<f8"
    elif arr.dtype == np.bool_:
        descr = "|b1"
    else:
        raise NpyFormatError(f"unsupported dtype for NPY output: {arr.dtype}")
    shape = "(" + ", ".join(str(s) for s in arr.shape) + ("," if len(arr.shape) == 1 else "") + ")"
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape}, }}"
    # magic(6) + version(2) + headerlen(2) + header + '\n' padded to a
    # multiple of 64 bytes, per the v1.0 format description.
    base = len(MAGIC) + 2 + 2
    total = base + len(header) + 1
    pad = (64 - total % 64) % 64
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(arr.tobytes(order="C"))


def read_npy(path) -> np.ndarray:
    """Read an NPY v1.0 file written by this project (or numpy itself)."""
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != MAGIC:
            raise NpyFormatError(f"{path}: bad magic bytes {magic!r}")
        version = fh.read(2)
        if len(version) < 2:
            raise NpyFormatError(f"{path}: truncated version field")
        if version[0] != 1:
            raise NpyFormatError(f"{path}: unsupported NPY version {version[0]}.{version[1]}")
        raw_len = fh.read(2)
        if len(raw_len) < 2:
            raise NpyFormatError(f"{path}: truncated header length")
        (header_len,) = struct.unpack("<H", raw_len)
        header = fh.read(header_len)
        if len(header) < header_len:
            raise NpyFormatError(f"{path}: truncated header")
        try:
            meta = ast.literal_eval(header.decode("latin1"))
        except (SyntaxError, ValueError) as exc:
            raise NpyFormatError(f"{path}: unparseable header: {exc}") from exc
        descr = meta.get("descr")
        if descr not in _SUPPORTED_DESCRS:
            raise NpyFormatError(f"{path}: unsupported dtype descr {descr!r}")
        if meta.get("fortran_order"):
            raise NpyFormatError(f"{path}: fortran-order arrays are not supported")
        shape = tuple(meta["shape"])
        dtype = np.dtype(_SUPPORTED_DESCRS[descr])
        count = int(np.prod(shape)) if shape else 1
        data = fh.read(count * dtype.itemsize)
        if len(data) < count * dtype.itemsize:
            raise NpyFormatError(f"{path}: payload shorter than header shape {shape}")
        return np.frombuffer(data, dtype=dtype).reshape(shape).copy()
