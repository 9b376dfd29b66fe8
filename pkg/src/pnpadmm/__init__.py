"""Preconditioned plug-and-play ADMM image restoration.

The package restores images from partial or noisy observations by
running ADMM on a preconditioned reformulation of the usual inverse
problem, which turns the proximal step into a call to a denoiser that
accepts a per-pixel noise-level map. Built-in classical denoisers are
provided, and external denoisers (e.g. neural networks) can be plugged
in through a small binary protocol over a child process's stdin/stdout.
"""

from .apps import (
    TaskConfig,
    anscombe_forward,
    anscombe_inverse,
    bicubic_init,
    build_init,
    completion_config,
    demosaic_config,
    interpolation_config,
    malvar_init,
    poisson_config,
    run_batch,
    run_task,
)
from .core import load_image, mse_between, psnr, store_image
from .degrade import (
    add_gaussian_noise,
    apply_sampling,
    cfa_masks,
    make_random_pattern,
    make_regular_grid_pattern,
    make_rng,
    sample_poisson,
)
from .denoise import (
    AdaptiveSmoothingDenoiser,
    IdentityDenoiser,
    QuadraticPriorDenoiser,
    adaptive_smoothing_denoise,
    generate_cfa_noise_map,
    generate_noise_map_constant,
    generate_noise_map_rgb,
    generate_noise_map_variable,
    identity_denoise,
    make_denoiser,
    quadratic_prior_denoise,
)
from .estimators import (
    CompletionRestorer,
    DemosaicRestorer,
    InterpolationRestorer,
    PoissonRestorer,
)
from .external import (
    AdapterError,
    AdapterHandshakeError,
    AdapterProtocolError,
    AdapterStatusError,
    AdapterTimeoutError,
    ExternalDenoiser,
)
from .precond import (
    IdentityPrecond,
    MaskPrecond,
    MaskPrecondConfig,
    PoissonPrecond,
    gaussian_blur_mask,
    identity_preconditioner,
    mask_preconditioner,
    poisson_precond_init,
    poisson_precond_update,
)
from .solver import (
    LinearProblem,
    PoissonProblem,
    RestorationResult,
    Schedule,
    SolverError,
    TraceRow,
    compute_schedule,
    dual_update,
    init_state,
    run_admm,
    x_update_linear,
    x_update_poisson,
    y_update,
)

__version__ = "0.1.0"
