"""File formats for rasters: PFM for float maps, PNG for images.

PFM ("Pf" grayscale variant): header is ``Pf\\n{width} {height}\\n{scale}\\n``
followed by float32 scanlines ordered bottom-to-top; a negative scale marks
little-endian data.  Everything written here is little-endian float32.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


class FormatError(ValueError):
    """Malformed raster file."""


def write_pfm(path, data: np.ndarray) -> None:
    """Write a 2D float array as a grayscale little-endian PFM."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise FormatError(f"PFM writer expects a 2D array, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(arr[::-1].astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a grayscale PFM into a float32 array (top-down row order)."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] not in (b"Pf", b"PF"):
        raise FormatError(f"{path}: not a PFM file")
    if parts[0] == b"PF":
        raise FormatError(f"{path}: color PFM not supported")
    try:
        w, h = (int(tok) for tok in parts[1].split())
        scale = float(parts[2])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PFM header") from exc
    dtype = "<f4" if scale < 0 else ">f4"
    pixels = np.frombuffer(parts[3][: w * h * 4], dtype=dtype)
    if pixels.size != w * h:
        raise FormatError(f"{path}: truncated PFM payload")
    return pixels.reshape(h, w)[::-1].astype(np.float32)


def write_png(path, image: np.ndarray) -> None:
    """Write a uint8 grayscale (H, W) or RGB (H, W, 3) image."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise FormatError(f"PNG writer expects uint8, got {arr.dtype}")
    Image.fromarray(arr).save(path, format="PNG")


def read_png_gray(path) -> np.ndarray:
    """Read a PNG as a uint8 grayscale array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)
