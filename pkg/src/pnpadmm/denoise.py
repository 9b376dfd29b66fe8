"""Locally adjustable denoisers and noise-level-map generators.

A denoiser here is any callable ``d(u, s) -> out`` taking an image
``u`` and a noise-level map ``s`` of the same (H, W, C) shape, where
``s`` gives the noise standard deviation assumed at each pixel. The
contract every implementation must honour:

* deterministic: equal inputs give equal outputs;
* zero map is the identity: ``s == 0`` everywhere implies ``out == u``
  bit-exactly;
* output shape equals input shape.

A constant map recovers an ordinary fixed-strength denoiser.
"""

from __future__ import annotations

import numpy as np

from .degrade import cfa_masks, make_rng
from .precond import MaskPrecondConfig, mask_preconditioner
from .validation import as_image, as_noise_map, check_same_shape

__all__ = [
    "identity_denoise",
    "quadratic_prior_denoise",
    "adaptive_smoothing_denoise",
    "IdentityDenoiser",
    "QuadraticPriorDenoiser",
    "AdaptiveSmoothingDenoiser",
    "make_denoiser",
    "generate_noise_map_constant",
    "generate_noise_map_variable",
    "generate_noise_map_rgb",
    "generate_cfa_noise_map",
]


def _check_pair(u, s):
    u = as_image(u, name="image")
    s = as_noise_map(s)
    check_same_shape(u, s, names="image/noise map")
    return u, s


def identity_denoise(u, s) -> np.ndarray:
    """No-op denoiser; useful as a plumbing baseline."""
    u, _ = _check_pair(u, s)
    return u


def quadratic_prior_denoise(u, s, *, kappa: float = 1.0, mean=0.5) -> np.ndarray:
    """Exact MAP denoiser for the prior (kappa/2)*||x - mean||^2.

    Per entry: (u + kappa*s^2*mean) / (1 + kappa*s^2), which is the
    closed-form minimiser of 0.5*((u - x)/s)^2 + (kappa/2)*(x - mean)^2
    and reduces to the identity wherever s = 0. ``mean`` may be a
    scalar or an image-shaped array.
    """
    u, s = _check_pair(u, s)
    if kappa < 0:
        raise ValueError(f"kappa: must be non-negative, got {kappa}")
    w = kappa * s * s
    return (u + w * np.asarray(mean, dtype=np.float64)) / (1.0 + w)


def _mirror_indices(n: int, offset: int) -> np.ndarray:
    """Whole-sample mirror indexing for an axis of length n."""
    idx = np.arange(n) + offset
    if n == 1:
        return np.zeros(n, dtype=np.intp)
    period = 2 * n - 2
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


def adaptive_smoothing_denoise(
    u, s, *, beta: float = 4.0, h_max: float = 8.0
) -> np.ndarray:
    """Gaussian smoothing with a per-pixel bandwidth set by the map.

    The bandwidth at each pixel is min(beta * s, h_max) in pixels; taps
    beyond ceil(3 * bandwidth) in either axis are dropped and weights
    renormalised. Mirror boundary handling. Zero bandwidth keeps the
    pixel untouched, so the zero-map contract holds exactly.
    """
    u, s = _check_pair(u, s)
    if not beta > 0:
        raise ValueError(f"beta: must be positive, got {beta}")
    if not h_max > 0:
        raise ValueError(f"h_max: must be positive, got {h_max}")
    h = np.minimum(beta * s, h_max)
    radius = int(np.ceil(3.0 * h.max()))
    if radius == 0:
        return u.copy()
    height, width, _ = u.shape
    per_pixel_radius = np.ceil(3.0 * h)
    positive = h > 0
    inv_two_h2 = np.zeros_like(h)
    inv_two_h2[positive] = 1.0 / (2.0 * h[positive] ** 2)
    num = u.copy()  # centre tap has weight exactly 1
    den = np.ones_like(u)
    for dy in range(-radius, radius + 1):
        rows = _mirror_indices(height, dy)
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            cols = _mirror_indices(width, dx)
            reach = max(abs(dy), abs(dx))
            w = np.where(
                positive & (reach <= per_pixel_radius),
                np.exp(-(dy * dy + dx * dx) * inv_two_h2),
                0.0,
            )
            num += w * u[rows[:, np.newaxis], cols[np.newaxis, :], :]
            den += w
    return num / den


class IdentityDenoiser:
    def __call__(self, u, s) -> np.ndarray:
        return identity_denoise(u, s)


class QuadraticPriorDenoiser:
    def __init__(self, *, kappa: float = 1.0, mean=0.5):
        self.kappa = kappa
        self.mean = mean

    def __call__(self, u, s) -> np.ndarray:
        return quadratic_prior_denoise(u, s, kappa=self.kappa, mean=self.mean)


class AdaptiveSmoothingDenoiser:
    def __init__(self, *, beta: float = 4.0, h_max: float = 8.0):
        self.beta = beta
        self.h_max = h_max

    def __call__(self, u, s) -> np.ndarray:
        return adaptive_smoothing_denoise(u, s, beta=self.beta, h_max=self.h_max)


def make_denoiser(name: str, params: dict | None = None):
    """Instantiate a built-in denoiser by registry name."""
    params = dict(params or {})
    if name == "identity":
        return IdentityDenoiser(**params)
    if name == "quadratic":
        return QuadraticPriorDenoiser(**params)
    if name == "adaptive_smoothing":
        return AdaptiveSmoothingDenoiser(**params)
    raise ValueError(f"unknown denoiser {name!r}")


def generate_noise_map_constant(
    height: int, width: int, channels: int, mu: float, seed: int, *, stream: int = 0
) -> np.ndarray:
    """Constant map 2*mu*X with a single uniform X; mean mu over seeds."""
    if mu < 0:
        raise ValueError(f"mu: must be non-negative, got {mu}")
    level = 2.0 * mu * make_rng(seed, stream).uniform()
    return np.full((height, width, channels), level)


def generate_noise_map_variable(
    height: int, width: int, channels: int, mu: float, seed: int, *, stream: int = 0
) -> np.ndarray:
    """Spatially varying map 2*mu*(X_i*(1 - W) + O*W).

    W and O are drawn once per map, X_i independently per entry; every
    entry lies in [0, 2*mu] and has expectation mu.
    """
    if mu < 0:
        raise ValueError(f"mu: must be non-negative, got {mu}")
    rng = make_rng(seed, stream)
    w = rng.uniform()
    o = rng.uniform()
    x = rng.uniform(size=(height, width, channels))
    return 2.0 * mu * (x * (1.0 - w) + o * w)


def generate_noise_map_rgb(height: int, width: int, mu: float, seed: int) -> np.ndarray:
    """Three independent variable maps, one per colour channel."""
    planes = [
        generate_noise_map_variable(height, width, 1, mu, seed, stream=c)
        for c in range(3)
    ]
    return np.concatenate(planes, axis=2)


def generate_cfa_noise_map(
    layout: str,
    height: int,
    width: int,
    sigma_den: float,
    cfg: MaskPrecondConfig,
    k: int,
) -> np.ndarray:
    """Noise map seen by the denoiser inside a demosaicing run.

    Equals sigma_den times the mask preconditioner of the per-channel
    CFA masks at iteration k, so sampled positions get exactly
    sigma_den and unsampled ones up to sigma_den * p_max.
    """
    if sigma_den < 0:
        raise ValueError(f"sigma_den: must be non-negative, got {sigma_den}")
    masks = cfa_masks(layout, height, width)
    return sigma_den * mask_preconditioner(masks, k, cfg)
