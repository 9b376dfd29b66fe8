"""Degradation operators: sampling patterns, CFA masks and noise.

Every random operation takes an explicit integer ``seed`` and an
optional ``stream`` index. Streams with the same seed are independent,
which lets batch drivers derive per-image generators without
coordinating; the generators are counter-based (Philox) so results do
not depend on draw order elsewhere in the process.
"""

from __future__ import annotations

import numpy as np

from .validation import as_image, as_mask, check_same_shape

__all__ = [
    "make_rng",
    "make_random_pattern",
    "make_regular_grid_pattern",
    "cfa_masks",
    "apply_sampling",
    "add_gaussian_noise",
    "sample_poisson",
    "CFA_LAYOUTS",
]

# 2x2 Bayer tiles, row-major, as channel indices (0=R, 1=G, 2=B)
CFA_LAYOUTS = {
    "RGGB": (0, 1, 1, 2),
    "GRBG": (1, 0, 2, 1),
    "GBRG": (1, 2, 0, 1),
    "BGGR": (2, 1, 1, 0),
}


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for the (seed, stream) pair."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def make_random_pattern(
    height: int, width: int, channels: int, rate: float, seed: int
) -> np.ndarray:
    """Random completion mask with exactly round(rate*H*W) known pixels.

    The same spatial positions are known in every channel.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate: must be in [0, 1], got {rate}")
    n = height * width
    n_known = int(np.floor(rate * n + 0.5))
    flat = np.zeros(n)
    order = make_rng(seed).permutation(n)
    flat[order[:n_known]] = 1.0
    plane = flat.reshape(height, width)
    return np.repeat(plane[:, :, np.newaxis], channels, axis=2)


def make_regular_grid_pattern(
    height: int, width: int, channels: int, factor: int
) -> np.ndarray:
    """Mask that keeps every ``factor``-th pixel along both axes."""
    if factor < 1:
        raise ValueError(f"factor: must be >= 1, got {factor}")
    plane = np.zeros((height, width))
    plane[::factor, ::factor] = 1.0
    return np.repeat(plane[:, :, np.newaxis], channels, axis=2)


def cfa_masks(layout: str, height: int, width: int) -> np.ndarray:
    """Per-channel Bayer sampling masks of shape (H, W, 3).

    Exactly one channel is sampled at each pixel, so the three masks
    partition the grid.
    """
    try:
        tile = CFA_LAYOUTS[layout.upper()]
    except KeyError:
        raise ValueError(
            f"layout: unknown CFA {layout!r}, expected one of {sorted(CFA_LAYOUTS)}"
        ) from None
    mask = np.zeros((height, width, 3))
    rows = np.arange(height)[:, np.newaxis] % 2
    cols = np.arange(width)[np.newaxis, :] % 2
    cell = rows * 2 + cols
    for pos, chan in enumerate(tile):
        mask[:, :, chan][cell == pos] = 1.0
    return mask


def apply_sampling(image, mask) -> np.ndarray:
    """Observed image: entry-wise mask * image, zeros where unsampled."""
    image = as_image(image)
    mask = as_mask(mask)
    check_same_shape(image, mask, names="image/mask")
    return mask * image


def add_gaussian_noise(image, sigma: float, seed: int, *, stream: int = 0) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise; the result is not clipped."""
    image = as_image(image)
    if sigma < 0:
        raise ValueError(f"sigma: must be non-negative, got {sigma}")
    noise = make_rng(seed, stream).standard_normal(image.shape)
    return image + sigma * noise


def sample_poisson(image, peak: float, seed: int, *, stream: int = 0) -> np.ndarray:
    """Draw photon counts z ~ Poisson(peak * image), returned as float64.

    ``image`` must be non-negative; the output is in count units
    (roughly [0, peak]), not rescaled back to [0, 1].
    """
    image = as_image(image)
    if not peak > 0:
        raise ValueError(f"peak: must be positive, got {peak}")
    if (image < 0).any():
        raise ValueError("image: Poisson intensities must be non-negative")
    counts = make_rng(seed, stream).poisson(peak * image)
    return counts.astype(np.float64)
