import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnpadmm.degrade import (
    CFA_LAYOUTS,
    add_gaussian_noise,
    apply_sampling,
    cfa_masks,
    make_random_pattern,
    make_regular_grid_pattern,
    make_rng,
    sample_poisson,
)


class TestRandomPattern:
    def test_exact_known_count(self):
        mask = make_random_pattern(10, 10, 1, 0.2, seed=0)
        assert mask.sum() == 20

    def test_channels_share_positions(self):
        mask = make_random_pattern(8, 9, 3, 0.3, seed=1)
        np.testing.assert_array_equal(mask[:, :, 0], mask[:, :, 1])
        np.testing.assert_array_equal(mask[:, :, 0], mask[:, :, 2])

    def test_seed_determinism(self):
        a = make_random_pattern(12, 12, 1, 0.5, seed=7)
        b = make_random_pattern(12, 12, 1, 0.5, seed=7)
        c = make_random_pattern(12, 12, 1, 0.5, seed=8)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_rate_bounds(self):
        assert make_random_pattern(4, 4, 1, 0.0, seed=0).sum() == 0
        assert make_random_pattern(4, 4, 1, 1.0, seed=0).sum() == 16
        with pytest.raises(ValueError, match="rate"):
            make_random_pattern(4, 4, 1, 1.2, seed=0)

    @settings(max_examples=30, deadline=None)
    @given(
        rate=st.floats(0.0, 1.0, allow_nan=False),
        seed=st.integers(0, 2**16),
    )
    def test_count_matches_rounded_rate(self, rate, seed):
        mask = make_random_pattern(9, 7, 1, rate, seed=seed)
        assert mask.sum() == int(np.floor(rate * 63 + 0.5))


class TestGridPattern:
    def test_positions_are_multiples_of_factor(self):
        mask = make_regular_grid_pattern(9, 10, 1, 3)
        known = np.argwhere(mask[:, :, 0] == 1.0)
        assert all(i % 3 == 0 and j % 3 == 0 for i, j in known)
        assert len(known) == 3 * 4

    def test_factor_one_keeps_everything(self):
        assert make_regular_grid_pattern(4, 4, 2, 1).all()


class TestCfaMasks:
    def test_channels_partition_the_grid(self):
        for layout in CFA_LAYOUTS:
            mask = cfa_masks(layout, 6, 7)
            np.testing.assert_array_equal(mask.sum(axis=2), np.ones((6, 7)))

    def test_rggb_tile(self):
        mask = cfa_masks("RGGB", 2, 2)
        assert mask[0, 0, 0] == 1.0  # R
        assert mask[0, 1, 1] == 1.0 and mask[1, 0, 1] == 1.0  # G
        assert mask[1, 1, 2] == 1.0  # B

    def test_green_has_double_density(self):
        mask = cfa_masks("GRBG", 8, 8)
        counts = mask.sum(axis=(0, 1))
        assert counts[1] == 2 * counts[0] == 2 * counts[2]

    def test_unknown_layout_rejected(self):
        with pytest.raises(ValueError, match="CFA"):
            cfa_masks("XYZW", 4, 4)


class TestApplySampling:
    def test_values_kept_at_sampled_positions(self, rng):
        img = rng.uniform(size=(5, 5, 1))
        mask = make_random_pattern(5, 5, 1, 0.4, seed=2)
        obs = apply_sampling(img, mask)
        np.testing.assert_array_equal(obs[mask == 1.0], img[mask == 1.0])
        assert (obs[mask == 0.0] == 0.0).all()

    def test_idempotent(self, rng):
        img = rng.uniform(size=(5, 5, 3))
        mask = make_random_pattern(5, 5, 3, 0.5, seed=3)
        once = apply_sampling(img, mask)
        np.testing.assert_array_equal(apply_sampling(once, mask), once)

    def test_non_binary_mask_rejected(self):
        with pytest.raises(ValueError, match="0 or 1"):
            apply_sampling(np.zeros((2, 2, 1)), np.full((2, 2, 1), 0.5))


class TestGaussianNoise:
    def test_seeded_determinism_and_stream_split(self):
        img = np.full((16, 16, 1), 0.5)
        a = add_gaussian_noise(img, 0.1, seed=5)
        b = add_gaussian_noise(img, 0.1, seed=5)
        c = add_gaussian_noise(img, 0.1, seed=5, stream=1)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_moments(self):
        img = np.zeros((500, 500, 1))
        noisy = add_gaussian_noise(img, 0.2, seed=11)
        assert abs(noisy.mean()) < 3 * 0.2 / 500
        assert noisy.std() == pytest.approx(0.2, rel=0.01)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError, match="sigma"):
            add_gaussian_noise(np.zeros((2, 2, 1)), -0.1, seed=0)


class TestPoissonSampling:
    def test_counts_are_integers(self):
        img = np.full((32, 32, 1), 0.7)
        counts = sample_poisson(img, 255.0, seed=4)
        np.testing.assert_array_equal(counts, np.round(counts))
        assert (counts >= 0).all()

    def test_moments_match_poisson_law(self):
        """Monte-Carlo oracle: mean and variance of P(10) within 3 SE."""
        n = 1_000_000
        img = np.full((1000, 1000, 1), 10.0 / 255.0)
        counts = sample_poisson(img, 255.0, seed=12)
        mean = counts.mean()
        var = counts.var()
        se_mean = np.sqrt(10.0 / n)
        # Var of the sample variance of Poisson(lam): (mu4 - sigma^4)/n
        mu4 = 10.0 * (1.0 + 3.0 * 10.0)
        se_var = np.sqrt((mu4 - 100.0) / n)
        assert abs(mean - 10.0) < 3 * se_mean
        assert abs(var - 10.0) < 3 * se_var

    def test_zero_intensity_gives_zero_counts(self):
        counts = sample_poisson(np.zeros((8, 8, 1)), 100.0, seed=1)
        assert (counts == 0).all()

    def test_negative_intensity_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            sample_poisson(np.full((2, 2, 1), -0.1), 10.0, seed=0)


class TestRngStreams:
    def test_streams_are_independent_of_draw_order(self):
        a = make_rng(99, 0).uniform(size=4)
        make_rng(99, 1).uniform(size=100)  # unrelated draws elsewhere
        b = make_rng(99, 0).uniform(size=4)
        np.testing.assert_array_equal(a, b)
