"""Grayscale image input/output.

Reads PGM (P2/P5, 8 or 16 bit) and PNG, writes binary 8-bit PGM.  Intensities
are normalized to ``[0, 1]`` by dividing by the format maximum.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

__all__ = ["Image", "ImageFormatError", "load_image", "save_pgm", "save_mask", "save_field"]


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Image:
    """Grayscale raster with intensities in [0, 1].

    ``data`` has shape ``(height, width)``; row ``j`` covers
    ``y in [j*h, (j+1)*h]``, column ``i`` covers ``x in [i*h, (i+1)*h]``.
    """

    data: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("image data must be two-dimensional")
        if data.shape[0] < 2 or data.shape[1] < 2:
            raise ValueError(f"image must be at least 2x2, got {data.shape}")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        if not self.h > 0:
            raise ValueError("grid spacing h must be positive")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _pgm_tokens(raw: bytes, count: int, pos: int = 0):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(raw)
    while len(tokens) < count:
        while pos < n and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < n and raw[pos:pos + 1] == b"#":
            while pos < n and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(raw[start:pos])
    return tokens, pos


def _read_pgm(raw: bytes) -> np.ndarray:
    (magic, w, hgt, maxval), pos = _pgm_tokens(raw, 4)
    try:
        width, height, maxval = int(w), int(hgt), int(maxval)
    except ValueError as exc:
        raise ImageFormatError("malformed PGM header") from exc
    if width <= 0 or height <= 0:
        raise ImageFormatError("zero-sized image")
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"invalid PGM maxval {maxval}")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos:pos + count * dtype.itemsize]
        if len(body) < count * dtype.itemsize:
            raise ImageFormatError("truncated PGM raster")
        samples = np.frombuffer(body, dtype=dtype).astype(float)
    elif magic == b"P2":
        try:
            samples = np.array(raw[pos:].split()[:count], dtype=float)
        except ValueError as exc:
            raise ImageFormatError("malformed ASCII PGM raster") from exc
        if samples.size < count:
            raise ImageFormatError("truncated PGM raster")
    else:
        raise ImageFormatError(f"unsupported PGM magic {magic!r}")
    if samples.max(initial=0) > maxval:
        raise ImageFormatError("sample exceeds PGM maxval")
    return samples.reshape(height, width) / maxval


def _read_png(path: str) -> np.ndarray:
    with PILImage.open(path) as img:
        mode = img.mode
        if mode in ("1", "L", "LA", "P", "PA"):
            if mode in ("P", "PA"):
                img = img.convert("RGB")
                mode = "RGB"
            else:
                arr = np.asarray(img.convert("L"), dtype=float)
                return arr / 255.0
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(img, dtype=float)
            return arr / 65535.0
        if mode in ("RGB", "RGBA"):
            rgb = np.asarray(img.convert("RGB"), dtype=float) / 255.0
            return rgb @ np.array([0.299, 0.587, 0.114])
    raise ImageFormatError(f"unsupported PNG mode {mode}")


def load_image(path, h: float = 1.0) -> Image:
    """Load a grayscale PGM or PNG (RGB converted via Rec. 601 luminance)."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    if raw[:2] in (b"P2", b"P5"):
        data = _read_pgm(raw)
    elif raw[:8] == b"\x89PNG\r\n\x1a\n":
        data = _read_png(path)
    else:
        raise ImageFormatError(f"{path}: not a PGM or PNG file")
    if data.size == 0:
        raise ImageFormatError("zero-sized image")
    return Image(np.clip(data, 0.0, 1.0), h=h)


def save_pgm(pixels: np.ndarray, path) -> None:
    """Write an 8-bit array of shape ``(height, width)`` as binary PGM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM raster must be two-dimensional")
    pixels = pixels.astype(np.uint8)
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii")
    with open(os.fspath(path), "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def save_mask(raster, shape: tuple[int, int], path) -> None:
    """Write the rasterized edge set as a 0/255 PGM on the element grid.

    ``raster`` is a boolean array of ``shape`` or an iterable of flat
    row-major element indices.
    """
    mask = np.zeros(shape, dtype=bool)
    raster = np.asarray(raster) if not isinstance(raster, (set, frozenset)) else np.fromiter(raster, int)
    if raster.dtype == bool:
        mask[...] = raster.reshape(shape)
    elif raster.size:
        mask.ravel()[raster.astype(int)] = True
    save_pgm(np.where(mask, 255, 0), path)


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and round half up to 8 bits."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_field(values: np.ndarray, path) -> None:
    """Write a 2-D field (pixel or nodal samples) as an 8-bit PGM."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("field must be two-dimensional")
    save_pgm(quantize(values), path)
