"""Binary PGM (P5) image file reading and writing.

Dependency-free, bit-exact I/O for 8-bit grey images. Grey values are
written back rounded half up and clamped to [0, 255].
"""

from __future__ import annotations

import numpy as np

from .core import Image

__all__ = ["read_pgm", "write_pgm"]


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    # Tokens separated by whitespace; '#' starts a comment to end of line.
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        if start == i:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:i])
    # A single whitespace byte separates the header from the raster.
    return tokens, i + 1


def read_pgm(path) -> Image:
    """Read a binary (P5) PGM file with maxval up to 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, offset = _header_tokens(data, 4)
    if tokens[0] != b"P5":
        raise ValueError(f"unsupported PNM magic {tokens[0]!r} (only binary P5)")
    width, height, maxval = (int(t) for t in tokens[1:])
    if width < 1 or height < 1:
        raise ValueError("PGM dimensions must be positive")
    if not 1 <= maxval <= 255:
        raise ValueError(f"unsupported PGM maxval {maxval} (need 1..255)")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise ValueError("PGM raster is shorter than the header promises")
    values = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return Image(values.astype(np.float64))


def write_pgm(image: Image, path) -> None:
    """Write a binary (P5) PGM file with maxval 255."""
    a = np.clip(np.floor(image.values + 0.5), 0.0, 255.0).astype(np.uint8)
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(a.tobytes())
