"""Scikit-learn style estimators wrapping the restoration pipelines.

Each estimator stores its hyperparameters verbatim in ``__init__`` so
``get_params``/``set_params``/``clone`` work as usual; ``fit`` binds
the problem structure (nothing is learned) and ``transform`` maps a
degraded observation to a restored image. The underlying functional
API lives in :mod:`pnpadmm.apps`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .apps import (
    completion_config,
    demosaic_config,
    interpolation_config,
    poisson_config,
    run_task,
)
from .validation import as_image, as_mask

__all__ = [
    "CompletionRestorer",
    "InterpolationRestorer",
    "DemosaicRestorer",
    "PoissonRestorer",
]


class _RestorerBase(BaseEstimator, TransformerMixin):
    def fit(self, X=None, y=None):
        self._validate_params_()
        self.fitted_ = True
        return self

    def _validate_params_(self) -> None:
        self._config_()  # raises on inconsistent parameters

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "fitted_"):
            self.fit()
        X = as_image(X, name="observation")
        result = run_task(
            self._config_(), X, **self._run_kwargs_(), denoiser=self.denoiser
        )
        return result.image

    def restore(self, X) -> np.ndarray:
        """Alias of ``transform`` with a domain-specific name."""
        return self.transform(X)

    def _run_kwargs_(self) -> dict:
        return {}

    def _denoiser_overrides_(self) -> dict:
        # None means "whatever the task factory tunes for this denoiser";
        # an explicit dict takes full control of the kwargs.
        out = {"denoiser_name": self.denoiser_name}
        if self.denoiser_params is not None:
            out["denoiser_params"] = dict(self.denoiser_params)
        return out


class CompletionRestorer(_RestorerBase):
    """Restore an image observed through a random pixel mask."""

    def __init__(
        self,
        *,
        n_iter: int = 20,
        denoiser_name: str = "adaptive_smoothing",
        denoiser_params: dict | None = None,
        denoiser=None,
        preconditioner: str = "mask",
        epsilon: float = 1.0 / 9.0,
        passthrough: bool = True,
    ):
        self.n_iter = n_iter
        self.denoiser_name = denoiser_name
        self.denoiser_params = denoiser_params
        self.denoiser = denoiser
        self.preconditioner = preconditioner
        self.epsilon = epsilon
        self.passthrough = passthrough

    def fit(self, X=None, y=None, *, mask=None):
        if mask is None:
            raise ValueError("mask: completion needs the sampling mask at fit time")
        self.mask_ = as_mask(mask)
        return super().fit(X, y)

    def _config_(self):
        return completion_config(
            rate=0.0,  # structure comes from the bound mask, not the rate
            n_iter=self.n_iter,
            preconditioner=self.preconditioner,
            epsilon=self.epsilon,
            passthrough=self.passthrough,
            **self._denoiser_overrides_(),
        )

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "mask_"):
            raise ValueError("CompletionRestorer: call fit(mask=...) first")
        return super().transform(X)

    def _run_kwargs_(self) -> dict:
        return {"mask": self.mask_}


class InterpolationRestorer(_RestorerBase):
    """Upsample an image observed on a regular subsampling grid."""

    def __init__(
        self,
        *,
        factor: int = 2,
        n_iter: int | None = None,
        denoiser_name: str = "adaptive_smoothing",
        denoiser_params: dict | None = None,
        denoiser=None,
        preconditioner: str = "mask",
        epsilon: float = 1.0 / 9.0,
        sigma_f_last: float = 0.4,
        passthrough: bool = True,
    ):
        self.factor = factor
        self.n_iter = n_iter
        self.denoiser_name = denoiser_name
        self.denoiser_params = denoiser_params
        self.denoiser = denoiser
        self.preconditioner = preconditioner
        self.epsilon = epsilon
        self.sigma_f_last = sigma_f_last
        self.passthrough = passthrough

    def _config_(self):
        return interpolation_config(
            factor=self.factor,
            n_iter=self.n_iter,
            preconditioner=self.preconditioner,
            epsilon=self.epsilon,
            sigma_f_last=self.sigma_f_last,
            passthrough=self.passthrough,
            **self._denoiser_overrides_(),
        )


class DemosaicRestorer(_RestorerBase):
    """Reconstruct full colour from a Bayer CFA observation."""

    def __init__(
        self,
        *,
        cfa: str = "RGGB",
        noise_sigma: float = 0.0,
        n_iter: int = 10,
        denoiser_name: str = "adaptive_smoothing",
        denoiser_params: dict | None = None,
        denoiser=None,
        preconditioner: str = "mask",
        epsilon: float = 1.0 / 9.0,
        sigma_f_last: float = 0.3,
    ):
        self.cfa = cfa
        self.noise_sigma = noise_sigma
        self.n_iter = n_iter
        self.denoiser_name = denoiser_name
        self.denoiser_params = denoiser_params
        self.denoiser = denoiser
        self.preconditioner = preconditioner
        self.epsilon = epsilon
        self.sigma_f_last = sigma_f_last

    def _config_(self):
        return demosaic_config(
            cfa=self.cfa,
            noise_sigma=self.noise_sigma,
            n_iter=self.n_iter,
            preconditioner=self.preconditioner,
            epsilon=self.epsilon,
            sigma_f_last=self.sigma_f_last,
            **self._denoiser_overrides_(),
        )


class PoissonRestorer(_RestorerBase):
    """Denoise photon-count observations with a known peak value."""

    def __init__(
        self,
        *,
        peak: float = 255.0,
        n_iter: int = 20,
        denoiser_name: str = "adaptive_smoothing",
        denoiser_params: dict | None = None,
        denoiser=None,
        preconditioner: str = "poisson",
        poisson_floor: float | None = None,
        anscombe_init: bool = False,
        update_precond: bool = True,
    ):
        self.peak = peak
        self.n_iter = n_iter
        self.denoiser_name = denoiser_name
        self.denoiser_params = denoiser_params
        self.denoiser = denoiser
        self.preconditioner = preconditioner
        self.poisson_floor = poisson_floor
        self.anscombe_init = anscombe_init
        self.update_precond = update_precond

    def _config_(self):
        return poisson_config(
            peak=self.peak,
            n_iter=self.n_iter,
            preconditioner=self.preconditioner,
            anscombe_init=self.anscombe_init,
            poisson_floor=self.poisson_floor,
            update_precond=self.update_precond,
            **self._denoiser_overrides_(),
        )
