"""MSF1 raster files: a 29-byte header followed by little-endian float32 samples.

Header layout (little-endian)::

    0   4s   magic "MSF1"
    4   u8   dtype, 1 = real float32, 2 = complex float32 (re, im interleaved)
    5   u32  width
    9   u32  height
    13  f64  pitch
    21  f64  wavelength
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

__all__ = ["Raster", "read_raster", "write_raster", "encode", "decode", "read_intensity"]

MAGIC = b"MSF1"
REAL, COMPLEX = 1, 2
_HEADER = struct.Struct("<4sBIIdd")
HEADER_SIZE = _HEADER.size  # 29
_DTYPES = {REAL: np.dtype("<f4"), COMPLEX: np.dtype("<c8")}


@dataclass(frozen=True, eq=False)
class Raster:
    """A 2-D array with its sampling pitch and wavelength."""

    data: np.ndarray
    pitch: float
    wavelength: float

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)


def encode(data, pitch, wavelength) -> bytes:
    data = np.asarray(data)
    if data.ndim != 2:
        raise FormatError(f"raster must be 2-D, got shape {data.shape}")
    code = COMPLEX if np.iscomplexobj(data) else REAL
    h, w = data.shape
    header = _HEADER.pack(MAGIC, code, w, h, float(pitch), float(wavelength))
    return header + np.ascontiguousarray(data, dtype=_DTYPES[code]).tobytes()


def decode(buf: bytes) -> Raster:
    if len(buf) < HEADER_SIZE:
        raise FormatError(f"truncated header: {len(buf)} of {HEADER_SIZE} bytes", offset=len(buf))
    magic, code, w, h, pitch, wavelength = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if code not in _DTYPES:
        raise FormatError(f"unknown dtype code {code}", offset=4)
    dt = _DTYPES[code]
    need = w * h * dt.itemsize
    have = len(buf) - HEADER_SIZE
    if have != need:
        raise FormatError(
            f"payload is {have} bytes, header promises {w}x{h}x{dt.itemsize} = {need}",
            offset=HEADER_SIZE + min(have, need),
        )
    data = np.frombuffer(buf, dtype=dt, offset=HEADER_SIZE).reshape(h, w)
    return Raster(data.copy(), pitch, wavelength)


def write_raster(path, data, pitch, wavelength):
    Path(path).write_bytes(encode(data, pitch, wavelength))


def read_raster(path) -> Raster:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return decode(buf)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc.reason}", offset=exc.offset) from None


def read_intensity(path, pitch=None, wavelength=None) -> Raster:
    """Load an intensity image from MSF1 or a 16-bit grayscale PNG.

    PNG files carry no sampling information, so ``pitch`` and ``wavelength``
    must then be given.
    """
    path = Path(path)
    if path.suffix.lower() != ".png":
        r = read_raster(path)
        if r.is_complex:
            raise FormatError(f"{path}: intensity must be a real raster")
        return r
    from PIL import Image

    if pitch is None or wavelength is None:
        raise FormatError(f"{path}: PNG input needs pitch and wavelength from the config")
    try:
        with Image.open(path) as im:
            data = np.asarray(im, dtype=np.float32)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if data.ndim != 2:
        raise FormatError(f"{path}: expected a single-channel image")
    return Raster(data, pitch, wavelength)
