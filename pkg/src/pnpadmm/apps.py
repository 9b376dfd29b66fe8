"""Restoration pipelines: completion, interpolation, demosaicing, Poisson.

Each task wires a degradation model, an initial estimate, a
preconditioner and a penalty schedule into the generic solver. The
defaults follow the parameter summary that works across images:

================  ==========  ==========  ============  ===========
task              sigma0_den  sigmaN_den  sigma_f_last  passthrough
================  ==========  ==========  ============  ===========
completion        1           1/255       0             yes
interpolation     50/255      1/255       0.4           yes
demosaic (clean)  50/255      1/255       0.3           yes
demosaic (noisy)  50/255      sigma       0.3           no
================  ==========  ==========  ============  ===========

with p_max = 10 (epsilon = 1/9) everywhere. Poisson denoising uses
rho0 = 1, alpha = 1 and the count-estimate preconditioner (or
rho0 = 1/peak, alpha = 4^(1/N) for the identity-P baseline).

The bundled smoothing denoiser keeps its own defaults for completion
and Poisson denoising; interpolation and demosaicing ship with tuned
bandwidths (beta, h_max) = (0.5, 0.5) and (1.0, 2.0).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import correlate

from .degrade import CFA_LAYOUTS, cfa_masks, make_regular_grid_pattern
from .denoise import make_denoiser
from .precond import IdentityPrecond, MaskPrecond, MaskPrecondConfig, PoissonPrecond
from .solver import (
    LinearProblem,
    PoissonProblem,
    RestorationResult,
    Schedule,
    compute_schedule,
    run_admm,
)
from .validation import as_image, as_mask, check_same_shape

__all__ = [
    "TaskConfig",
    "completion_config",
    "interpolation_config",
    "demosaic_config",
    "poisson_config",
    "bicubic_init",
    "malvar_init",
    "anscombe_forward",
    "anscombe_inverse",
    "build_init",
    "run_task",
    "run_batch",
    "TASK_KINDS",
]

TASK_KINDS = ("completion", "interpolation", "demosaic", "poisson")

_SIGMA_MIN = 1.0 / 255.0


@dataclass(frozen=True)
class TaskConfig:
    """Fully resolved parameters of one restoration run."""

    kind: str
    n_iter: int
    sigma: float
    sigma0_den: float
    sigmaN_den: float
    preconditioner: str = "mask"
    epsilon: float = 1.0 / 9.0
    sigma_f_last: float = 0.0
    passthrough: bool = True
    denoiser_name: str = "adaptive_smoothing"
    denoiser_params: dict = field(default_factory=dict)
    seed: int = 0
    rate: float | None = None
    factor: int | None = None
    cfa: str | None = None
    noise_sigma: float = 0.0
    peak: float | None = None
    poisson_floor: float | None = None
    anscombe_init: bool = False
    update_precond: bool = True

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind: unknown task {self.kind!r}")
        if self.n_iter < 0:
            raise ValueError(f"n_iter: must be non-negative, got {self.n_iter}")
        if self.preconditioner not in ("mask", "identity", "poisson"):
            raise ValueError(f"preconditioner: unknown kind {self.preconditioner!r}")

    def with_overrides(self, **kwargs) -> "TaskConfig":
        """Copy with fields replaced.

        Swapping ``denoiser_name`` without supplying ``denoiser_params``
        resets the params: tuning kwargs belong to the denoiser they
        were chosen for.
        """
        if "denoiser_name" in kwargs and "denoiser_params" not in kwargs:
            kwargs["denoiser_params"] = {}
        return replace(self, **kwargs)


def completion_config(rate: float, *, n_iter: int = 20, **overrides) -> TaskConfig:
    overrides.setdefault("sigma_f_last", 0.0)
    return TaskConfig(
        kind="completion",
        n_iter=n_iter,
        sigma=_SIGMA_MIN,
        sigma0_den=1.0,
        sigmaN_den=_SIGMA_MIN,
        rate=rate,
        **overrides,
    )


def interpolation_config(factor: int, *, n_iter: int | None = None, **overrides) -> TaskConfig:
    if n_iter is None:
        n_iter = 6 if factor <= 2 else 10
    if overrides.get("denoiser_name", "adaptive_smoothing") == "adaptive_smoothing":
        overrides.setdefault("denoiser_params", {"beta": 0.5, "h_max": 0.5})
    overrides.setdefault("sigma_f_last", 0.4)
    return TaskConfig(
        kind="interpolation",
        n_iter=n_iter,
        sigma=_SIGMA_MIN,
        sigma0_den=50.0 / 255.0,
        sigmaN_den=_SIGMA_MIN,
        factor=factor,
        **overrides,
    )


def demosaic_config(
    cfa: str = "RGGB", *, noise_sigma: float = 0.0, n_iter: int = 10, **overrides
) -> TaskConfig:
    sigma = max(noise_sigma, _SIGMA_MIN)
    overrides.setdefault("passthrough", noise_sigma == 0.0)
    if overrides.get("denoiser_name", "adaptive_smoothing") == "adaptive_smoothing":
        overrides.setdefault("denoiser_params", {"beta": 1.0, "h_max": 2.0})
    overrides.setdefault("sigma_f_last", 0.3)
    return TaskConfig(
        kind="demosaic",
        n_iter=n_iter,
        sigma=sigma,
        sigma0_den=50.0 / 255.0,
        sigmaN_den=sigma,
        cfa=cfa,
        noise_sigma=noise_sigma,
        **overrides,
    )


def poisson_config(
    peak: float,
    *,
    n_iter: int = 20,
    preconditioner: str = "poisson",
    anscombe_init: bool = False,
    **overrides,
) -> TaskConfig:
    overrides.setdefault("passthrough", False)
    return TaskConfig(
        kind="poisson",
        n_iter=n_iter,
        sigma=0.0,
        sigma0_den=1.0,
        sigmaN_den=1.0,
        preconditioner=preconditioner,
        peak=peak,
        anscombe_init=anscombe_init,
        **overrides,
    )


def _bicubic_kernel(t: np.ndarray) -> np.ndarray:
    a = -0.5
    t = np.abs(t)
    near = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    far = a * (t**3 - 5.0 * t**2 + 8.0 * t - 4.0)
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _bicubic_matrix(n_out: int, n_low: int, factor: int) -> np.ndarray:
    weights = np.zeros((n_out, n_low))
    grid = np.arange(n_out, dtype=np.float64) / factor
    base = np.floor(grid).astype(int)
    t = grid - base
    for m in range(-1, 3):
        w = _bicubic_kernel(t - m)
        taps = np.clip(base + m, 0, n_low - 1)
        np.add.at(weights, (np.arange(n_out), taps), w)
    return weights


def bicubic_init(observation, factor: int) -> np.ndarray:
    """Separable cubic-convolution (a = -0.5) upsampling of the grid
    samples; exact at the sampled positions, edge rows replicated."""
    observation = as_image(observation, name="observation")
    if factor < 1:
        raise ValueError(f"factor: must be >= 1, got {factor}")
    low = observation[::factor, ::factor, :]
    height, width, _ = observation.shape
    rows = _bicubic_matrix(height, low.shape[0], factor)
    cols = _bicubic_matrix(width, low.shape[1], factor)
    tmp = np.tensordot(rows, low, axes=(1, 0))
    return np.einsum("jl,ilc->ijc", cols, tmp)


# 5x5 linear demosaicing kernels (eighths); one per position class
_KERNEL_G_AT_RB = np.array(
    [
        [0, 0, -1, 0, 0],
        [0, 0, 2, 0, 0],
        [-1, 2, 4, 2, -1],
        [0, 0, 2, 0, 0],
        [0, 0, -1, 0, 0],
    ],
    dtype=np.float64,
) / 8.0

_KERNEL_RB_ROW = np.array(
    [
        [0, 0, 0.5, 0, 0],
        [0, -1, 0, -1, 0],
        [-1, 4, 5, 4, -1],
        [0, -1, 0, -1, 0],
        [0, 0, 0.5, 0, 0],
    ],
    dtype=np.float64,
) / 8.0

_KERNEL_RB_COL = _KERNEL_RB_ROW.T

_KERNEL_RB_DIAG = np.array(
    [
        [0, 0, -1.5, 0, 0],
        [0, 2, 0, 2, 0],
        [-1.5, 0, 6, 0, -1.5],
        [0, 2, 0, 2, 0],
        [0, 0, -1.5, 0, 0],
    ],
    dtype=np.float64,
) / 8.0


def malvar_init(observation, layout: str) -> np.ndarray:
    """Gradient-corrected linear demosaicing of a CFA observation.

    ``observation`` holds the mosaic embedded per channel (zeros at
    unsampled entries). Correlations use mirror boundary handling. The
    estimate may overshoot [0, 1]; it is not clipped here.
    """
    observation = as_image(observation, name="observation")
    if observation.shape[2] != 3:
        raise ValueError("observation: CFA observations need 3 channels")
    height, width, _ = observation.shape
    masks = cfa_masks(layout, height, width)
    mosaic = observation.sum(axis=2)
    planes = {
        "g": correlate(mosaic, _KERNEL_G_AT_RB, mode="mirror"),
        "row": correlate(mosaic, _KERNEL_RB_ROW, mode="mirror"),
        "col": correlate(mosaic, _KERNEL_RB_COL, mode="mirror"),
        "diag": correlate(mosaic, _KERNEL_RB_DIAG, mode="mirror"),
    }
    tile = CFA_LAYOUTS[layout.upper()]
    rows = np.arange(height)[:, np.newaxis] % 2
    cols = np.arange(width)[np.newaxis, :] % 2
    cell = rows * 2 + cols
    out = np.empty_like(observation)
    for chan in range(3):
        plane = np.where(masks[:, :, chan] == 1.0, mosaic, 0.0)
        for pos in range(4):
            src = tile[pos]
            if src == chan:
                continue
            here = cell == pos
            if chan == 1:
                est = planes["g"]
            elif src == 1:
                # same tile row means the wanted channel sits beside it
                q = tile.index(chan)
                if q // 2 == pos // 2:
                    est = planes["row"]
                else:
                    est = planes["col"]
            else:
                est = planes["diag"]
            plane = np.where(here, est, plane)
        out[:, :, chan] = plane
    return out


def anscombe_forward(counts) -> np.ndarray:
    """Variance-stabilising transform 2*sqrt(z + 3/8)."""
    counts = as_image(counts, name="counts")
    if (counts < 0).any():
        raise ValueError("counts: must be non-negative")
    return 2.0 * np.sqrt(counts + 3.0 / 8.0)


def anscombe_inverse(z) -> np.ndarray:
    """Algebraic inverse (z/2)^2 - 3/8, floored at zero."""
    z = as_image(z, name="transformed image")
    return np.maximum((z / 2.0) ** 2 - 3.0 / 8.0, 0.0)


def _poisson_floor(cfg: TaskConfig) -> float:
    if cfg.poisson_floor is not None:
        return cfg.poisson_floor
    return cfg.peak / 255.0


def build_init(cfg: TaskConfig, observation, *, mask=None, denoiser=None) -> np.ndarray:
    """Initial estimate x_hat0 in natural units for the given task."""
    observation = as_image(observation, name="observation")
    if cfg.kind == "completion":
        return np.zeros_like(observation)
    if cfg.kind == "interpolation":
        return bicubic_init(observation, cfg.factor)
    if cfg.kind == "demosaic":
        return malvar_init(observation, cfg.cfa)
    if cfg.anscombe_init:
        if denoiser is None:
            denoiser = make_denoiser(cfg.denoiser_name, cfg.denoiser_params)
        z = anscombe_forward(observation)
        den = denoiser(z, np.ones_like(z))
        return anscombe_inverse(den)
    return observation.copy()


def _build_mask(cfg: TaskConfig, observation: np.ndarray, mask) -> np.ndarray | None:
    height, width, channels = observation.shape
    if cfg.kind == "completion":
        if mask is None:
            raise ValueError("mask: required for completion tasks")
        mask = as_mask(mask)
        check_same_shape(observation, mask, names="observation/mask")
        return mask
    if cfg.kind == "interpolation":
        return make_regular_grid_pattern(height, width, channels, cfg.factor)
    if cfg.kind == "demosaic":
        if channels != 3:
            raise ValueError("observation: demosaicing needs 3 channels")
        return cfa_masks(cfg.cfa, height, width)
    return None


def _build_schedule(cfg: TaskConfig) -> Schedule:
    if cfg.kind != "poisson":
        return compute_schedule(cfg.sigma0_den, cfg.sigmaN_den, cfg.n_iter, cfg.sigma)
    if cfg.preconditioner == "poisson":
        return Schedule(n_iter=cfg.n_iter, rho0=1.0, alpha=1.0)
    n = max(cfg.n_iter, 1)
    return Schedule(n_iter=cfg.n_iter, rho0=1.0 / cfg.peak, alpha=4.0 ** (1.0 / n))


def run_task(
    cfg: TaskConfig,
    observation,
    *,
    mask=None,
    reference=None,
    denoiser=None,
) -> RestorationResult:
    """Restore a degraded observation according to ``cfg``.

    ``mask`` is required for completion (the other tasks derive their
    sampling structure from the config). ``denoiser`` overrides the
    configured built-in, e.g. to plug in an external adapter session.
    """
    observation = as_image(observation, name="observation")
    if denoiser is None:
        denoiser = make_denoiser(cfg.denoiser_name, cfg.denoiser_params)
    mask = _build_mask(cfg, observation, mask)
    if mask is not None and np.any(observation * mask != observation):
        raise ValueError("observation: nonzero values at unsampled positions")

    x_hat0 = build_init(cfg, observation, mask=mask, denoiser=denoiser)
    schedule = _build_schedule(cfg)

    if cfg.kind == "poisson":
        problem = PoissonProblem(counts=observation, peak=cfg.peak)
        if cfg.preconditioner == "identity":
            precond = IdentityPrecond()
        else:
            precond = PoissonPrecond(
                floor=_poisson_floor(cfg),
                update_enabled=cfg.update_precond and not cfg.anscombe_init,
                initial_counts=x_hat0 if cfg.anscombe_init else observation,
            )
        passthrough = False
    else:
        problem = LinearProblem(observation=observation, mask=mask)
        if cfg.preconditioner == "identity":
            precond = IdentityPrecond()
        else:
            precond = MaskPrecond(
                mask,
                MaskPrecondConfig(
                    n_iter=max(cfg.n_iter, 1),
                    epsilon=cfg.epsilon,
                    sigma_f_last=cfg.sigma_f_last,
                ),
            )
        passthrough = cfg.passthrough

    return run_admm(
        problem,
        denoiser,
        schedule,
        x_hat0=x_hat0,
        precond=precond,
        passthrough=passthrough,
        reference=reference,
    )


def run_batch(
    cfg: TaskConfig,
    items,
    *,
    denoiser_factory=None,
    max_workers: int = 4,
) -> list[RestorationResult]:
    """Restore several observations concurrently.

    ``items`` is a sequence of dicts with keys ``observation`` and
    optionally ``mask`` and ``reference``. Each worker gets its own
    denoiser instance from ``denoiser_factory`` since denoiser sessions
    are not shared between threads.
    """
    if denoiser_factory is None:
        def denoiser_factory():
            return make_denoiser(cfg.denoiser_name, cfg.denoiser_params)

    def work(item):
        return run_task(
            cfg,
            item["observation"],
            mask=item.get("mask"),
            reference=item.get("reference"),
            denoiser=denoiser_factory(),
        )

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(work, items))
