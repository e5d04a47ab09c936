"""Strict NPY reader/writer for float32 little-endian C-order arrays.

Writes version 1.0 files; reads 1.0 and 2.0. The format is deliberately
narrow: ``descr`` must be ``'<f4'`` and ``fortran_order`` must be false,
so every file produced anywhere in the toolchain is bit-compatible with
every consumer.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, SchemaError

MAGIC = b"\x93NUMPY"
_HEADER_KEYS = {"descr", "fortran_order", "shape"}


def _header_text(shape: tuple[int, ...]) -> bytes:
    if len(shape) == 1:
        shape_repr = "(%d,)" % shape[0]
    else:
        shape_repr = "(%s)" % ", ".join(str(n) for n in shape)
    text = "{'descr': '<f4', 'fortran_order': False, 'shape': %s, }" % shape_repr
    # magic(6) + version(2) + hlen(2) + header must be a multiple of 64
    total = 6 + 2 + 2 + len(text) + 1
    pad = (64 - total % 64) % 64
    return (text + " " * pad + "\n").encode("latin1")


def write_npy(path, array) -> None:
    """Write ``array`` as a v1.0 NPY file, cast to little-endian float32."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = _header_text(arr.shape)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


def read_npy(path) -> np.ndarray:
    """Read an NPY file, enforcing float32 little-endian C-order contents.

    Raises FormatError for a broken container and SchemaError when the
    container is fine but the dtype or memory order is wrong. Rank is not
    restricted here; callers impose their own rank expectations.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 10 or raw[:6] != MAGIC:
        raise FormatError(f"{path}: not an NPY file (bad magic)")
    major, minor = raw[6], raw[7]
    if (major, minor) == (1, 0):
        (hlen,) = struct.unpack_from("<H", raw, 8)
        body = 10 + hlen
    elif (major, minor) == (2, 0):
        if len(raw) < 12:
            raise FormatError(f"{path}: truncated v2.0 header")
        (hlen,) = struct.unpack_from("<I", raw, 8)
        body = 12 + hlen
    else:
        raise FormatError(f"{path}: unsupported NPY version {major}.{minor}")
    if len(raw) < body:
        raise FormatError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(raw[body - hlen:body].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: unparsable header: {exc}") from None
    if not isinstance(header, dict) or set(header) != _HEADER_KEYS:
        raise FormatError(f"{path}: header must be a dict with keys "
                          f"'descr', 'fortran_order', 'shape'")

    descr = header["descr"]
    if descr != "<f4":
        raise SchemaError(f"{path}: descr must be '<f4' (little-endian float32), "
                          f"got {descr!r}")
    if header["fortran_order"] is not False:
        raise SchemaError(f"{path}: fortran_order must be False")
    shape = header["shape"]
    if (not isinstance(shape, tuple)
            or not all(isinstance(n, int) and n >= 0 for n in shape)):
        raise FormatError(f"{path}: shape must be a tuple of nonnegative ints, "
                          f"got {shape!r}")

    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    payload = raw[body:]
    if len(payload) != count * 4:
        raise FormatError(f"{path}: expected {count * 4} data bytes for shape "
                          f"{shape}, found {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape)
    return data.copy()
