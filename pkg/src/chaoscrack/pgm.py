"""Binary PGM (P5) and PPM (P6) reading and writing for 8-bit images."""

from __future__ import annotations

import os

import numpy as np

from .cipher import as_image

__all__ = [
    "PgmError",
    "read_pgm",
    "read_pnm",
    "write_pgm",
    "write_pnm",
]

_WS = b" \t\r\n\v\f"


class PgmError(ValueError):
    """Malformed or unsupported netpbm file; ``field`` names the offending part."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


def _tokens(data: bytes, count: int, start: int) -> tuple[list[bytes], int]:
    """Read ``count`` header tokens, skipping whitespace and ``#`` comments."""
    out = []
    pos = start
    while len(out) < count:
        while pos < len(data) and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl
            pos += 1
        begin = pos
        while pos < len(data) and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        if begin == pos:
            out.append(b"")
            break
        out.append(data[begin:pos])
    return out, pos


def parse_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Parse a P5/P6 file into a ``(width*channels, height)`` byte grid and the channel count."""
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise PgmError("magic", f"expected P5 or P6, got {magic!r}")
    if len(data) < 3 or data[2] not in _WS:
        raise PgmError("magic", "missing whitespace after magic number")
    toks, pos = _tokens(data, 3, 2)
    names = ("width", "height", "maxval")
    values = []
    for name, tok in zip(names, toks + [b""] * (3 - len(toks))):
        if not tok.isdigit():
            raise PgmError(name, f"expected a decimal integer, got {tok!r}")
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise PgmError("width" if width < 1 else "height", "must be positive")
    if maxval != 255:
        raise PgmError("maxval", f"only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or data[pos] not in _WS:
        raise PgmError("raster", "missing single whitespace byte before raster")
    pos += 1
    need = width * height * channels
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise PgmError("raster", f"truncated: {len(raster)} of {need} bytes present")
    grid = np.frombuffer(raster, dtype=np.uint8).reshape(height, width * channels)
    return grid.T.copy(), channels


def read_pnm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        return parse_pnm(fh.read())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a P5 file as an image indexed ``img[i, j]`` (column ``i``, raster row ``j``)."""
    img, channels = read_pnm(path)
    if channels != 1:
        raise PgmError("magic", "expected a grayscale P5 file; pass an RGB file explicitly")
    return img


def encode_pnm(img, channels: int = 1) -> bytes:
    img = as_image(img)
    M, N = img.shape
    if M % channels:
        raise ValueError(f"width {M} is not a multiple of {channels} channels")
    magic = b"P5" if channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, M // channels, N)
    return header + np.ascontiguousarray(img.T).tobytes()


def write_pnm(img, path: str | os.PathLike, channels: int = 1) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img, channels))


def write_pgm(img, path: str | os.PathLike) -> None:
    write_pnm(img, path, 1)
