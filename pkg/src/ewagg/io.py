"""Matrix and image file formats.

Matrices: CSV (one text row per matrix row, ``%.17g`` so values round-trip
exactly) and the ``EWAM`` binary layout::

    bytes 0-3    b"EWAM"
    bytes 4-7    K  (u32, little endian)
    bytes 8-11   n  (u32, little endian)
    bytes 12-15  reserved, written as 0
    then K*n float64 little endian values, column by column

Images: binary PPM (P6) and PGM (P5) with maxval 255.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .core import as_label_matrix
from .errors import EwaError

MAGIC = b"EWAM"
_HEADER = struct.Struct("<4sIII")


class FormatError(EwaError, ValueError):
    """A file does not follow the expected layout."""


def write_csv(path, m) -> None:
    m = as_label_matrix(m)
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_label_matrix(m)


def write_binary(path, m) -> None:
    m = as_label_matrix(m)
    K, n = m.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, K, n, 0))
        fh.write(np.asfortranarray(m).astype("<f8").tobytes(order="F"))


def read_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("file too short for an EWAM header")
    magic, K, n, _ = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    body = data[_HEADER.size:]
    if len(body) != 8 * K * n:
        raise FormatError(f"expected {8 * K * n} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape((K, n), order="F").astype(np.float64)


def read_matrix(path) -> np.ndarray:
    """Dispatch on content: EWAM magic means binary, anything else is CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_binary(path)
    return read_csv(path)


def write_matrix(path, m) -> None:
    if str(path).lower().endswith(".csv"):
        write_csv(path, m)
    else:
        write_binary(path, m)


# --------------------------------------------------------------------------
# PPM / PGM


def _tokens(buf: io.BytesIO, count: int) -> list[bytes]:
    out: list[bytes] = []
    tok = b""
    while len(out) < count:
        c = buf.read(1)
        if not c:
            raise FormatError("truncated image header")
        if c == b"#" and not tok:
            while c not in (b"\n", b"\r", b""):
                c = buf.read(1)
            continue
        if c.isspace():
            if tok:
                out.append(tok)
                tok = b""
            continue
        tok += c
    return out


def read_ppm(path) -> np.ndarray:
    """Read a P6 (RGB) or P5 (gray) file into an ``(H, W, C)`` float64 array."""
    buf = io.BytesIO(Path(path).read_bytes())
    magic, w, h, maxval = _tokens(buf, 4)
    if magic not in (b"P6", b"P5"):
        raise FormatError(f"unsupported image type {magic!r}; need P6 or P5")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise FormatError("only maxval 255 is supported")
    channels = 3 if magic == b"P6" else 1
    raw = buf.read(w * h * channels)
    if len(raw) != w * h * channels:
        raise FormatError("truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, channels).astype(np.float64)


def to_uint8(image) -> np.ndarray:
    """Clamp to ``[0, 255]`` and round; applied only when writing."""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)


def write_ppm(path, image) -> None:
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    h, w, c = img.shape
    if c not in (1, 3):
        raise FormatError("images must have 1 or 3 channels")
    magic = b"P6" if c == 3 else b"P5"
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(to_uint8(img).tobytes())
