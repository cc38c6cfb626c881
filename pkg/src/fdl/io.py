"""File formats: FTNS raw tensors and binary 8-bit PGM/PPM images."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["FormatError", "write_ftns", "read_ftns", "read_image", "write_image", "fmt_float"]

MAGIC = b"FTNS"


class FormatError(ValueError):
    """Raised for malformed or unsupported files."""


def write_ftns(path, array) -> None:
    arr = np.asarray(array, dtype="<f8", order="C")  # keeps rank 0, unlike ascontiguousarray
    header = MAGIC + struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_ftns(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise FormatError(f"{path}: not an FTNS file")
    (rank,) = struct.unpack_from("<I", raw, 4)
    head = 8 + 8 * rank
    if len(raw) < head:
        raise FormatError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{rank}Q", raw, 8)
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    if len(raw) != head + 8 * count:
        raise FormatError(f"{path}: expected {count} values, file holds {(len(raw) - head) / 8:g}")
    return np.frombuffer(raw, dtype="<f8", offset=head).astype(np.float64).reshape(shape)


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i >= len(data):
            raise FormatError("truncated PNM header")
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1  # exactly one whitespace byte before the raster


def read_image(path) -> np.ndarray:
    """Load a binary P5/P6 image as a C x H x W float array in [0, 1]."""
    data = Path(path).read_bytes()
    try:
        (magic, w, h, maxval), start = _header_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PNM header ({exc})") from None
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise FormatError(f"{path}: only binary PGM (P5) and PPM (P6) are supported")
    if not 0 < maxval <= 255:
        raise FormatError(f"{path}: only 8-bit images are supported (maxval {maxval})")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: empty image")
    n = width * height * channels
    raster = data[start : start + n]
    if len(raster) != n:
        raise FormatError(f"{path}: expected {n} raster bytes, got {len(raster)}")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return np.transpose(img, (2, 0, 1)).astype(np.float64) / maxval


def write_image(path, image) -> None:
    """Write a 1- or 3-channel C x H x W array in [0, 1] as 8-bit PGM/PPM."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[None]
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise FormatError(f"can only write 1 or 3 channel images, got shape {img.shape}")
    c, h, w = img.shape
    q = np.round(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    magic = b"P5" if c == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (w, h)
    Path(path).write_bytes(header + np.transpose(q, (1, 2, 0)).tobytes())


def fmt_float(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(x), ".17g")
