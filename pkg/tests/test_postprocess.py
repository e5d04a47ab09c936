"""PCA, channel normalization, power normalization, sign quantization."""

import itertools

import numpy as np
import pytest

from xlpool import (ArgumentError, Descriptor, FitError, PipelineConfig,
                    ShapeError, cross_layer_pool, load_pca, normalize_channels,
                    pca_apply, pca_fit, pca_transform_tensor, power_normalize,
                    save_pca, sign_quantize, standard_pipeline)

from conftest import make_pair


class TestPcaFit:
    def test_rank_one_data_concentrates_variance(self, rng):
        direction = np.array([3.0, 4.0, 0.0]) / 5.0
        coords = rng.standard_normal(200)
        samples = np.array([1.0, -2.0, 0.5]) + coords[:, None] * direction
        model = pca_fit(samples, output_dim=2)
        line_variance = coords.var(ddof=1)
        assert model.eigenvalues[0] == pytest.approx(line_variance, rel=1e-10)
        assert model.eigenvalues[1] == pytest.approx(0.0, abs=1e-10)

    def test_projected_covariance_is_diagonal(self, rng):
        # oracle: eigendecompose the covariance directly and check the
        # model diagonalizes it
        samples = rng.standard_normal((300, 6)) @ rng.standard_normal((6, 6))
        model = pca_fit(samples, output_dim=6)
        projected = pca_apply(model, samples)
        cov = np.cov(projected, rowvar=False)
        off_diag = cov - np.diag(np.diag(cov))
        assert np.abs(off_diag).max() < 1e-4
        want = np.sort(np.linalg.eigvalsh(np.cov(samples, rowvar=False)))[::-1]
        np.testing.assert_allclose(model.eigenvalues, want, atol=1e-8)

    def test_fit_is_deterministic(self, rng):
        samples = rng.standard_normal((50, 5))
        a = pca_fit(samples, 3)
        b = pca_fit(samples, 3)
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.projection, b.projection)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)

    def test_sign_convention_largest_entry_positive(self, rng):
        samples = rng.standard_normal((100, 4))
        model = pca_fit(samples, 4)
        for row in model.projection:
            assert row[np.argmax(np.abs(row))] > 0

    def test_projection_rows_orthonormal(self, rng):
        samples = rng.standard_normal((80, 7))
        model = pca_fit(samples, 5)
        np.testing.assert_allclose(model.projection @ model.projection.T,
                                   np.eye(5), atol=1e-4)

    def test_eigenvalues_descending_nonnegative(self, rng):
        model = pca_fit(rng.standard_normal((40, 6)), 6)
        assert (np.diff(model.eigenvalues) <= 1e-12).all()
        assert (model.eigenvalues >= 0).all()

    def test_too_few_samples(self, rng):
        with pytest.raises(FitError, match="2 samples"):
            pca_fit(rng.standard_normal((1, 4)), 1)

    def test_output_dim_too_large(self, rng):
        with pytest.raises(ArgumentError, match="output_dim"):
            pca_fit(rng.standard_normal((10, 4)), 5)
        with pytest.raises(ArgumentError, match="output_dim"):
            pca_fit(rng.standard_normal((4, 10)), 4)  # limited by n-1


class TestPcaApply:
    def test_mean_maps_to_zero(self, rng):
        samples = rng.standard_normal((30, 5))
        model = pca_fit(samples, 3)
        np.testing.assert_allclose(pca_apply(model, model.mean),
                                   np.zeros(3), atol=1e-12)

    def test_full_dim_projection_reconstructs(self, rng):
        samples = rng.standard_normal((60, 4))
        model = pca_fit(samples, 4)
        x = rng.standard_normal(4)
        projected = pca_apply(model, x)
        recovered = projected @ model.projection + model.mean
        np.testing.assert_allclose(recovered, x, atol=1e-10)

    def test_full_dim_preserves_pairwise_distances(self, rng):
        samples = rng.standard_normal((40, 5))
        model = pca_fit(samples, 5)
        projected = pca_apply(model, samples)
        for i in range(0, 40, 7):
            for j in range(0, 40, 5):
                before = np.linalg.norm(samples[i] - samples[j])
                after = np.linalg.norm(projected[i] - projected[j])
                assert after == pytest.approx(before, abs=1e-4)

    def test_dim_mismatch(self, rng):
        model = pca_fit(rng.standard_normal((30, 5)), 3)
        with pytest.raises(ShapeError, match="dim"):
            pca_apply(model, np.zeros(4))

    def test_bundle_round_trip(self, rng, tmp_path):
        model = pca_fit(rng.standard_normal((30, 5)), 3)
        save_pca(model, tmp_path / "pca")
        back = load_pca(tmp_path / "pca")
        assert (back.input_dim, back.output_dim) == (5, 3)
        np.testing.assert_allclose(back.projection, model.projection, atol=1e-6)
        np.testing.assert_allclose(back.mean, model.mean, atol=1e-6)


class TestNormalizeChannels:
    def test_channels_become_unit_norm(self, rng):
        desc = Descriptor(rng.standard_normal(12).astype(np.float32), 3, 4)
        out = normalize_channels(desc)
        np.testing.assert_allclose(np.linalg.norm(out.as_matrix(), axis=1),
                                   1.0, atol=1e-6)

    def test_all_zero_descriptor_unchanged(self):
        desc = Descriptor(np.zeros(6, dtype=np.float32), 2, 3)
        out = normalize_channels(desc)
        np.testing.assert_array_equal(out.values, desc.values)

    def test_zero_channel_stays_zero_others_normalize(self, rng):
        mat = np.zeros((2, 3), dtype=np.float32)
        mat[1] = rng.standard_normal(3)
        out = normalize_channels(Descriptor(mat.reshape(-1), 2, 3))
        assert not out.channel(0).any()
        assert np.linalg.norm(out.channel(1)) == pytest.approx(1.0, abs=1e-6)

    def test_idempotent(self, rng):
        desc = Descriptor(rng.standard_normal(20).astype(np.float32), 4, 5)
        once = normalize_channels(desc)
        twice = normalize_channels(once)
        assert np.abs(once.values - twice.values).max() <= 1e-6


class TestPowerNormalize:
    def test_known_values(self):
        desc = Descriptor(np.array([4.0, -9.0, 0.0], dtype=np.float32), 1, 3)
        np.testing.assert_array_equal(power_normalize(desc).values,
                                      [2.0, -3.0, 0.0])

    def test_signs_fixed_points(self):
        desc = Descriptor(np.array([-1.0, 0.0, 1.0], dtype=np.float32), 1, 3)
        np.testing.assert_array_equal(power_normalize(desc).values,
                                      desc.values)

    def test_twice_is_fourth_root(self, rng):
        values = rng.standard_normal(30).astype(np.float32)
        desc = Descriptor(values, 3, 10)
        twice = power_normalize(power_normalize(desc))
        want = np.sign(values) * np.abs(values.astype(np.float64)) ** 0.25
        np.testing.assert_allclose(twice.values, want, atol=1e-6)

    def test_preserves_sign_and_zero_set_exactly(self, rng):
        values = rng.standard_normal(50).astype(np.float32)
        values[::7] = 0.0
        out = power_normalize(Descriptor(values, 5, 10))
        np.testing.assert_array_equal(np.sign(out.values), np.sign(values))
        np.testing.assert_array_equal(out.values == 0, values == 0)


class TestSignQuantize:
    def test_definition(self):
        desc = Descriptor(np.array([-0.3, 0.0, 7.1], dtype=np.float32), 1, 3)
        np.testing.assert_array_equal(sign_quantize(desc).unpack(), [-1, 0, 1])

    def test_commutes_with_power_normalize(self, rng):
        for _ in range(50):
            values = rng.standard_normal(24).astype(np.float32)
            values[rng.random(24) < 0.25] = 0.0
            desc = Descriptor(values, 4, 6)
            np.testing.assert_array_equal(
                sign_quantize(power_normalize(desc)).unpack(),
                sign_quantize(desc).unpack())

    def test_zero_count_matches_input_zeros(self, rng):
        values = rng.standard_normal(40).astype(np.float32)
        values[rng.random(40) < 0.3] = 0.0
        sv = sign_quantize(Descriptor(values, 4, 10))
        assert int((sv.unpack() == 0).sum()) == int((values == 0).sum())

    def test_alphabet(self, rng):
        sv = sign_quantize(Descriptor(rng.standard_normal(16).astype(np.float32), 2, 8))
        assert set(np.unique(sv.unpack())) <= {-1, 0, 1}

    def test_invariant_under_both_normalizations(self, rng):
        # binarizing after the full pipeline equals binarizing the raw
        # pooled descriptor: l2 scales channels positively, power norm
        # preserves signs
        pair = make_pair(rng, 4, 4, 5, 3)
        raw = standard_pipeline(pair, PipelineConfig(l2=False, power=False))
        for l2 in (False, True):
            for power in (False, True):
                desc = standard_pipeline(pair, PipelineConfig(l2=l2, power=power))
                np.testing.assert_array_equal(sign_quantize(desc).unpack(),
                                              sign_quantize(raw).unpack())


class TestStandardPipeline:
    def test_all_toggles_off_is_raw_pooling(self, rng):
        pair = make_pair(rng, 3, 3, 4, 3)
        desc = standard_pipeline(pair, PipelineConfig(l2=False, power=False))
        np.testing.assert_array_equal(desc.values,
                                      cross_layer_pool(pair).values)

    def test_all_eight_toggle_combinations_run(self, rng):
        pair = make_pair(rng, 4, 4, 6, 3)
        pca = pca_fit(pair.local.units(), output_dim=6)
        outputs = []
        for use_pca, l2, power in itertools.product((False, True), repeat=3):
            config = PipelineConfig(pca=pca if use_pca else None,
                                    l2=l2, power=power)
            desc = standard_pipeline(pair, config)
            assert np.isfinite(desc.values).all()
            outputs.append(desc.values)
        assert len({o.size for o in outputs}) == 1

    def test_l2_only_gives_unit_channels(self, rng):
        pair = make_pair(rng, 3, 3, 4, 3)
        desc = standard_pipeline(pair, PipelineConfig(l2=True, power=False))
        np.testing.assert_allclose(np.linalg.norm(desc.as_matrix(), axis=1),
                                   1.0, atol=1e-6)

    def test_stage_order_is_l2_then_power(self, rng):
        pair = make_pair(rng, 3, 3, 4, 3)
        got = standard_pipeline(pair, PipelineConfig(l2=True, power=True))
        composed = power_normalize(normalize_channels(cross_layer_pool(pair)))
        np.testing.assert_array_equal(got.values, composed.values)
        swapped = normalize_channels(power_normalize(cross_layer_pool(pair)))
        assert np.abs(swapped.values - got.values).max() > 1e-6

    def test_pca_stage_projects_local_features(self, rng):
        pair = make_pair(rng, 3, 3, 6, 2)
        pca = pca_fit(pair.local.units(), output_dim=4)
        desc = standard_pipeline(pair, PipelineConfig(pca=pca, l2=False,
                                                      power=False))
        assert (desc.channels, desc.channel_dim) == (2, 4)
        transformed = pca_transform_tensor(pca, pair.local)
        want = cross_layer_pool(type(pair)(local=transformed, guide=pair.guide))
        np.testing.assert_array_equal(desc.values, want.values)

    def test_pca_dim_mismatch_raises(self, rng):
        pair = make_pair(rng, 3, 3, 6, 2)
        pca = pca_fit(rng.standard_normal((30, 5)), 3)
        with pytest.raises(ShapeError, match="input_dim"):
            standard_pipeline(pair, PipelineConfig(pca=pca))
