"""Estimator wrappers: sklearn conventions plus equivalence with the
functional pipelines."""

import numpy as np
import pytest
from sklearn.base import clone

from pnpadmm.apps import (
    completion_config,
    demosaic_config,
    interpolation_config,
    poisson_config,
    run_task,
)
from pnpadmm.degrade import (
    apply_sampling,
    cfa_masks,
    make_random_pattern,
    make_regular_grid_pattern,
    sample_poisson,
)
from pnpadmm.estimators import (
    CompletionRestorer,
    DemosaicRestorer,
    InterpolationRestorer,
    PoissonRestorer,
)

from conftest import synthetic_image


# ------------------------------------------------------- sklearn protocol


def test_get_params_round_trip():
    est = InterpolationRestorer(factor=4, n_iter=3, epsilon=0.25)
    params = est.get_params()
    assert params["factor"] == 4
    assert params["n_iter"] == 3
    assert params["epsilon"] == 0.25
    rebuilt = InterpolationRestorer(**params)
    assert rebuilt.get_params() == params


def test_set_params_returns_self_and_updates():
    est = PoissonRestorer()
    out = est.set_params(peak=31.875, n_iter=5)
    assert out is est
    assert est.peak == 31.875
    assert est.n_iter == 5


def test_clone_preserves_params_and_drops_state():
    mask = make_random_pattern(8, 8, 1, 0.5, seed=3)
    est = CompletionRestorer(n_iter=4).fit(mask=mask)
    assert hasattr(est, "mask_")
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert not hasattr(twin, "mask_")


def test_invalid_preconditioner_raises_at_fit():
    with pytest.raises(ValueError, match="preconditioner"):
        InterpolationRestorer(preconditioner="bogus").fit()


# ---------------------------------------------------------- completion


def test_completion_requires_mask_at_fit():
    with pytest.raises(ValueError, match="mask"):
        CompletionRestorer().fit()


def test_completion_transform_before_fit_raises():
    with pytest.raises(ValueError, match="fit"):
        CompletionRestorer().transform(np.zeros((4, 4, 1)))


def test_completion_matches_run_task():
    truth = synthetic_image(16, 16)
    mask = make_random_pattern(16, 16, 1, 0.4, seed=9)
    obs = apply_sampling(truth, mask)
    est = CompletionRestorer(n_iter=8).fit(mask=mask)
    got = est.transform(obs)
    want = run_task(completion_config(0.4, n_iter=8), obs, mask=mask).image
    np.testing.assert_array_equal(got, want)


# ------------------------------------------------------- interpolation


def test_interpolation_matches_run_task():
    truth = synthetic_image(16, 16)
    obs = apply_sampling(truth, make_regular_grid_pattern(16, 16, 1, 2))
    got = InterpolationRestorer(factor=2).transform(obs)
    want = run_task(interpolation_config(2), obs).image
    np.testing.assert_array_equal(got, want)


def test_interpolation_explicit_params_match_override():
    # denoiser_params=None keeps the task tuning; an explicit dict is
    # forwarded verbatim and reaches a different fixed bandwidth.
    truth = synthetic_image(16, 16)
    obs = apply_sampling(truth, make_regular_grid_pattern(16, 16, 1, 2))
    params = {"beta": 2.0, "h_max": 1.0}
    got = InterpolationRestorer(factor=2, denoiser_params=params).transform(obs)
    cfg = interpolation_config(2, denoiser_params=params)
    np.testing.assert_array_equal(got, run_task(cfg, obs).image)
    assert not np.array_equal(got, run_task(interpolation_config(2), obs).image)


def test_custom_denoiser_callable_is_forwarded():
    truth = synthetic_image(16, 16)
    obs = apply_sampling(truth, make_regular_grid_pattern(16, 16, 1, 2))

    def keep(image, noise_map):
        return image

    got = InterpolationRestorer(factor=2, denoiser=keep).transform(obs)
    want = run_task(interpolation_config(2), obs, denoiser=keep).image
    np.testing.assert_array_equal(got, want)


def test_restore_is_transform_alias():
    truth = synthetic_image(16, 16)
    obs = apply_sampling(truth, make_regular_grid_pattern(16, 16, 1, 2))
    est = InterpolationRestorer(factor=2)
    np.testing.assert_array_equal(est.restore(obs), est.transform(obs))


def test_clone_transforms_identically():
    truth = synthetic_image(16, 16)
    obs = apply_sampling(truth, make_regular_grid_pattern(16, 16, 1, 2))
    est = InterpolationRestorer(factor=2, n_iter=4)
    np.testing.assert_array_equal(clone(est).transform(obs), est.transform(obs))


# ------------------------------------------------------------ demosaic


def test_demosaic_matches_run_task():
    truth = synthetic_image(16, 16, 3)
    obs = apply_sampling(truth, cfa_masks("GBRG", 16, 16))
    got = DemosaicRestorer(cfa="GBRG", n_iter=4).transform(obs)
    want = run_task(demosaic_config("GBRG", n_iter=4), obs).image
    np.testing.assert_array_equal(got, want)


def test_demosaic_noisy_matches_run_task():
    truth = synthetic_image(16, 16, 3)
    masks = cfa_masks("RGGB", 16, 16)
    rng = np.random.default_rng(4)
    obs = np.clip(truth * masks + 0.02 * rng.standard_normal(truth.shape) * masks, 0, 1) * masks
    got = DemosaicRestorer(noise_sigma=0.02, n_iter=4).transform(obs)
    want = run_task(demosaic_config("RGGB", noise_sigma=0.02, n_iter=4), obs).image
    np.testing.assert_array_equal(got, want)


# ------------------------------------------------------------- poisson


def test_poisson_matches_run_task():
    counts = sample_poisson(synthetic_image(16, 16), 31.875, seed=2)
    got = PoissonRestorer(peak=31.875, n_iter=6).transform(counts)
    want = run_task(poisson_config(31.875, n_iter=6), counts).image
    np.testing.assert_array_equal(got, want)


def test_poisson_identity_baseline_matches_run_task():
    counts = sample_poisson(synthetic_image(16, 16), 31.875, seed=2)
    got = PoissonRestorer(peak=31.875, n_iter=6, preconditioner="identity").transform(counts)
    cfg = poisson_config(31.875, n_iter=6, preconditioner="identity")
    np.testing.assert_array_equal(got, run_task(cfg, counts).image)
