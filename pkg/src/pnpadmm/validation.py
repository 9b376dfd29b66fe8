"""Input validation helpers shared across the package.

All public entry points normalise their array arguments through these
helpers so that shape and value errors surface early with a readable
message instead of deep inside a numpy broadcast.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_image",
    "as_mask",
    "as_noise_map",
    "check_same_shape",
    "check_positive",
]


def as_image(arr, *, name: str = "image") -> np.ndarray:
    """Coerce ``arr`` to a float64 (H, W, C) image tensor.

    2-D inputs are treated as single-channel and get a trailing axis.
    Channel counts other than 1 or 3 are rejected, as are non-finite
    entries. The returned array is always a fresh float64 copy, so
    callers may treat it as private.
    """
    out = np.array(arr, dtype=np.float64)
    if out.ndim == 2:
        out = out[:, :, np.newaxis]
    if out.ndim != 3:
        raise ValueError(f"{name}: expected a 2-D or 3-D array, got ndim={out.ndim}")
    h, w, c = out.shape
    if h < 1 or w < 1:
        raise ValueError(f"{name}: empty spatial extent {out.shape}")
    if c not in (1, 3):
        raise ValueError(f"{name}: expected 1 or 3 channels, got {c}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name}: contains non-finite values")
    return out


def as_mask(arr, *, name: str = "mask") -> np.ndarray:
    """Coerce ``arr`` to a float64 (H, W, C) mask with entries in {0, 1}."""
    out = as_image(arr, name=name)
    if not np.isin(out, (0.0, 1.0)).all():
        raise ValueError(f"{name}: entries must be exactly 0 or 1")
    return out


def as_noise_map(arr, *, name: str = "noise map") -> np.ndarray:
    """Coerce ``arr`` to a float64 (H, W, C) map of non-negative levels."""
    out = as_image(arr, name=name)
    if (out < 0).any():
        raise ValueError(f"{name}: entries must be non-negative")
    return out


def check_same_shape(a: np.ndarray, b: np.ndarray, *, names: str = "arrays") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{names}: shape mismatch {a.shape} vs {b.shape}")


def check_positive(value: float, *, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name}: must be positive, got {value}")
    return value
