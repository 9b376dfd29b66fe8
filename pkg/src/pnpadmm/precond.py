"""Diagonal preconditioners for the reformulated ADMM iteration.

The preconditioner is a positive diagonal map P, stored image-shaped.
The solver estimates the rescaled variable x = P^{-1} x_hat, so large
entries of P boost the denoising strength at the corresponding pixels.

Three constructions are provided:

* identity: plain PnP-ADMM.
* mask: for sampling problems. P is built from the sampling mask,
  progressively blurred over iterations so the strength boost relaxes
  outward from the known pixels.
* poisson: P estimates the square root of the photon count, i.e. the
  local noise standard deviation, optionally re-estimated from the
  denoised iterate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .validation import as_image, as_mask

__all__ = [
    "MaskPrecondConfig",
    "gaussian_blur_mask",
    "mask_preconditioner",
    "poisson_precond_init",
    "poisson_precond_update",
    "identity_preconditioner",
    "IdentityPrecond",
    "MaskPrecond",
    "PoissonPrecond",
]


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur_mask(mask, sigma_blur: float) -> np.ndarray:
    """Separable Gaussian blur of an image-shaped map, per channel.

    The kernel is truncated at radius ceil(3*sigma_blur), renormalised
    after truncation, and applied with mirror boundary handling.
    ``sigma_blur = 0`` is the identity.
    """
    mask = as_image(mask, name="mask")
    if sigma_blur < 0:
        raise ValueError(f"sigma_blur: must be non-negative, got {sigma_blur}")
    if sigma_blur == 0.0:
        return mask.copy()
    kernel = _gaussian_kernel(sigma_blur)
    out = correlate1d(mask, kernel, axis=0, mode="mirror")
    return correlate1d(out, kernel, axis=1, mode="mirror")


@dataclass(frozen=True)
class MaskPrecondConfig:
    """Parameters of the mask preconditioner.

    ``sigma_f_last`` is the blur width reached at the final iteration;
    the per-step width is ``sigma_f_last / sqrt(n_iter)`` so the last
    iteration's preconditioner does not depend on ``n_iter``.
    """

    n_iter: int
    epsilon: float = 1.0 / 9.0
    sigma_f_last: float = 0.0

    def __post_init__(self) -> None:
        if self.n_iter < 1:
            raise ValueError(f"n_iter: must be >= 1, got {self.n_iter}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon: must be positive, got {self.epsilon}")
        if self.sigma_f_last < 0:
            raise ValueError(
                f"sigma_f_last: must be non-negative, got {self.sigma_f_last}"
            )

    @property
    def sigma_f(self) -> float:
        return self.sigma_f_last / np.sqrt(self.n_iter)

    @property
    def p_max(self) -> float:
        return (1.0 + self.epsilon) / self.epsilon


def mask_preconditioner(mask0, k: int, cfg: MaskPrecondConfig) -> np.ndarray:
    """Preconditioner P^k derived from the initial sampling mask.

    The mask is blurred with width sigma_f*sqrt(k), then mapped to
    (max(m) + eps) / (m + eps) per channel. Known pixels of an unblurred
    binary mask get exactly 1; fully unknown regions get p_max.
    """
    mask0 = as_mask(mask0, name="mask0")
    if k < 0:
        raise ValueError(f"k: must be non-negative, got {k}")
    if not mask0.any(axis=(0, 1)).all():
        raise ValueError("mask0: every channel needs at least one known pixel")
    m = gaussian_blur_mask(mask0, cfg.sigma_f * np.sqrt(k))
    peak = m.max(axis=(0, 1), keepdims=True)
    return (peak + cfg.epsilon) / (m + cfg.epsilon)


def poisson_precond_init(counts, floor: float) -> np.ndarray:
    """Initial Poisson preconditioner sqrt(max(counts, floor))."""
    counts = as_image(counts, name="counts")
    if not floor > 0:
        raise ValueError(f"floor: must be positive, got {floor}")
    return np.sqrt(np.maximum(counts, floor))


def poisson_precond_update(denoised, floor: float) -> np.ndarray:
    """Re-estimated preconditioner from a denoised count image P*y."""
    denoised = np.asarray(denoised, dtype=np.float64)
    if not floor > 0:
        raise ValueError(f"floor: must be positive, got {floor}")
    return np.sqrt(np.maximum(denoised, floor))


def identity_preconditioner(shape) -> np.ndarray:
    return np.ones(shape, dtype=np.float64)


class IdentityPrecond:
    """Constant P = 1; reduces the solver to plain PnP-ADMM."""

    def initial(self, shape) -> np.ndarray:
        return identity_preconditioner(shape)

    def for_iteration(self, k: int, current: np.ndarray) -> np.ndarray:
        return current

    def after_iteration(self, denoised: np.ndarray, current: np.ndarray) -> np.ndarray:
        return current


class MaskPrecond:
    """Iteration-indexed mask preconditioner.

    Iteration k (1-based) uses the mask blurred with sigma_f*sqrt(k);
    the initial state is scaled with the first iteration's map so the
    variables stay consistent.
    """

    def __init__(self, mask0, cfg: MaskPrecondConfig):
        self.mask0 = as_mask(mask0, name="mask0")
        self.cfg = cfg
        self._static = None
        if cfg.sigma_f_last == 0.0:
            self._static = mask_preconditioner(self.mask0, 0, cfg)

    def initial(self, shape) -> np.ndarray:
        return self.for_iteration(1, None)

    def for_iteration(self, k: int, current) -> np.ndarray:
        if self._static is not None:
            return self._static
        return mask_preconditioner(self.mask0, k, self.cfg)

    def after_iteration(self, denoised: np.ndarray, current: np.ndarray) -> np.ndarray:
        return current


class PoissonPrecond:
    """Count-estimate preconditioner, optionally updated per iteration."""

    def __init__(self, *, floor: float, update_enabled: bool = True, initial_counts=None):
        if not floor > 0:
            raise ValueError(f"floor: must be positive, got {floor}")
        self.floor = floor
        self.update_enabled = update_enabled
        self.initial_counts = initial_counts

    def initial(self, shape) -> np.ndarray:
        if self.initial_counts is None:
            raise ValueError("PoissonPrecond: initial_counts not set")
        p = poisson_precond_init(self.initial_counts, self.floor)
        if p.shape != tuple(shape):
            raise ValueError(
                f"PoissonPrecond: counts shape {p.shape} does not match {tuple(shape)}"
            )
        return p

    def for_iteration(self, k: int, current: np.ndarray) -> np.ndarray:
        return current

    def after_iteration(self, denoised: np.ndarray, current: np.ndarray) -> np.ndarray:
        if not self.update_enabled:
            return current
        return poisson_precond_update(denoised, self.floor)
