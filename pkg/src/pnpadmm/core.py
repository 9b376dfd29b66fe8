"""Image tensors, fidelity metrics and file I/O.

Images are float64 arrays of shape (H, W, C) with C in {1, 3}. Restored
images live in [0, 1]; intermediate solver variables and Poisson count
images may leave that range. Two on-disk formats are supported:

* 8-bit PNG, mapped to [0, 1] by division by 255 on load and
  round-half-up on store. Lossy by construction.
* ``.pnpf`` raw float: magic ``PNPF``, three little-endian uint32
  (height, width, channels), then H*W*C little-endian float32 values in
  row-major, channel-interleaved order. Exact at 32-bit precision, used
  wherever byte-level reproducibility matters.
"""

from __future__ import annotations

import math
import os
import struct

import numpy as np
from PIL import Image

from .validation import as_image, check_same_shape

__all__ = [
    "PNPF_MAGIC",
    "mse_between",
    "psnr",
    "load_image",
    "store_image",
]

PNPF_MAGIC = b"PNPF"
_PNPF_HEADER = struct.Struct("<4sIII")


def mse_between(a, b) -> float:
    """Mean squared error between two equally shaped image tensors.

    The mean runs over every entry, so multi-channel images average
    their channels jointly.
    """
    a = as_image(a, name="first image")
    b = as_image(b, name="second image")
    check_same_shape(a, b, names="mse operands")
    diff = a - b
    return float(np.mean(diff * diff))


def psnr(reference, test, *, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    if not peak > 0:
        raise ValueError(f"peak: must be positive, got {peak}")
    err = mse_between(reference, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _load_png(path: str) -> np.ndarray:
    with Image.open(path) as img:
        img.load()
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float64)[:, :, np.newaxis]
        elif img.mode == "RGB":
            arr = np.asarray(img, dtype=np.float64)
        else:
            raise ValueError(
                f"{path}: unsupported PNG mode {img.mode!r}, expected L or RGB"
            )
    return arr / 255.0


def _store_png(image: np.ndarray, path: str) -> None:
    # round half up, unlike numpy's banker's rounding
    q = np.floor(image * 255.0 + 0.5)
    q = np.clip(q, 0, 255).astype(np.uint8)
    if q.shape[2] == 1:
        Image.fromarray(q[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(q, mode="RGB").save(path, format="PNG")


def _load_pnpf(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_PNPF_HEADER.size)
        if len(header) != _PNPF_HEADER.size:
            raise ValueError(f"{path}: truncated raw-float header")
        magic, h, w, c = _PNPF_HEADER.unpack(header)
        if magic != PNPF_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {PNPF_MAGIC!r}")
        count = h * w * c
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise ValueError(f"{path}: truncated raw-float payload")
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after raw-float payload")
    data = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return data.reshape(h, w, c)


def _store_pnpf(image: np.ndarray, path: str) -> None:
    h, w, c = image.shape
    with open(path, "wb") as fh:
        fh.write(_PNPF_HEADER.pack(PNPF_MAGIC, h, w, c))
        fh.write(np.ascontiguousarray(image, dtype="<f4").tobytes())


def load_image(path) -> np.ndarray:
    """Load a PNG or raw-float image as a float64 (H, W, C) tensor."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        return _load_png(path)
    if ext == ".pnpf":
        return _load_pnpf(path)
    raise ValueError(f"{path}: unsupported image extension {ext!r}")


def store_image(image, path) -> None:
    """Store an image tensor as PNG or raw-float, chosen by extension."""
    image = as_image(image)
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        _store_png(image, path)
    elif ext == ".pnpf":
        _store_pnpf(image, path)
    else:
        raise ValueError(f"{path}: unsupported image extension {ext!r}")
