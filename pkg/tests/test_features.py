import numpy as np
import pytest

from fingervein import (
    ConvolutionalFeatureExtractor,
    FeatureBank,
    PCAWhitening,
    build_feature_bank,
    convolve_features,
    forward,
    init_params,
    mean_pool,
    represent,
)


def loop_convolve(image, bank):
    """Quadruple-loop oracle for convolve_features."""
    side = bank.patch_side
    h, w = image.shape
    out = np.empty((bank.kernel_count, h - side + 1, w - side + 1))
    for k in range(bank.kernel_count):
        for r in range(h - side + 1):
            for c in range(w - side + 1):
                acc = bank.biases[k]
                for i in range(side):
                    for j in range(side):
                        acc += image[r + i, c + j] * bank.kernels[k, i, j]
                out[k, r, c] = 1.0 / (1.0 + np.exp(-acc))
    return out


def loop_pool(responses, pool_rows, pool_cols):
    """Partition-and-average oracle for mean_pool."""
    n, h, w = responses.shape
    rb = [h * i // pool_rows for i in range(pool_rows + 1)]
    cb = [w * j // pool_cols for j in range(pool_cols + 1)]
    out = []
    for k in range(n):
        for i in range(pool_rows):
            for j in range(pool_cols):
                cell = responses[k, rb[i]:rb[i + 1], cb[j]:cb[j + 1]]
                out.append(cell.mean())
    return np.array(out)


@pytest.fixture
def fitted_whitening(rng):
    return PCAWhitening(n_components=10, epsilon=0.05).fit(rng.random((400, 16)))


class TestBuildFeatureBank:
    def test_identity_whitening_reshapes_weights(self, identity_whitening):
        params = init_params(9, 4, seed=0)
        bank = build_feature_bank(params, identity_whitening(9), patch_side=3)
        np.testing.assert_array_equal(bank.kernels, params.W1.reshape(4, 3, 3))
        np.testing.assert_array_equal(bank.biases, params.b1)

    def test_two_path_equivalence(self, fitted_whitening, rng):
        params = init_params(10, 6, seed=3)
        bank = build_feature_bank(params, fitted_whitening, patch_side=4)
        patches = rng.random((20, 16))
        hidden, _ = forward(params, fitted_whitening.transform(patches))
        flat = bank.kernels.reshape(6, 16)
        direct = 1.0 / (1.0 + np.exp(-(patches @ flat.T + bank.biases)))
        np.testing.assert_allclose(direct, hidden, atol=1e-10)

    def test_wide_hidden_layer_kernel_count(self, identity_whitening):
        params = init_params(64, 4000, seed=1)
        bank = build_feature_bank(params, identity_whitening(64), patch_side=8)
        assert bank.kernel_count == 4000
        assert bank.kernels.shape == (4000, 8, 8)

    def test_dimension_mismatch_rejected(self, fitted_whitening):
        params = init_params(7, 3, seed=0)
        with pytest.raises(ValueError):
            build_feature_bank(params, fitted_whitening, patch_side=4)
        params = init_params(10, 3, seed=0)
        with pytest.raises(ValueError):
            build_feature_bank(params, fitted_whitening, patch_side=5)


class TestConvolveFeatures:
    def test_single_window_equals_hidden_activation(self, fitted_whitening, rng):
        params = init_params(10, 5, seed=2)
        bank = build_feature_bank(params, fitted_whitening, patch_side=4)
        patch = rng.random((4, 4))
        responses = convolve_features(patch, bank)
        assert responses.shape == (5, 1, 1)
        hidden, _ = forward(
            params, fitted_whitening.transform(patch.reshape(1, 16))
        )
        np.testing.assert_allclose(responses[:, 0, 0], hidden[0], atol=1e-10)

    def test_zero_bank_gives_half(self, rng):
        bank = FeatureBank(kernels=np.zeros((3, 2, 2)), biases=np.zeros(3))
        responses = convolve_features(rng.random((5, 6)), bank)
        np.testing.assert_array_equal(responses, np.full((3, 4, 5), 0.5))

    def test_matches_quadruple_loop_oracle(self, rng):
        kernels = rng.normal(size=(3, 8, 8))
        bank = FeatureBank(kernels=kernels, biases=rng.normal(size=3))
        image = rng.random((16, 16))
        np.testing.assert_allclose(
            convolve_features(image, bank), loop_convolve(image, bank),
            atol=1e-10,
        )

    def test_image_smaller_than_kernel_rejected(self, rng):
        bank = FeatureBank(kernels=np.zeros((1, 4, 4)), biases=np.zeros(1))
        with pytest.raises(ValueError):
            convolve_features(rng.random((3, 10)), bank)

    def test_translation_covariance(self, rng):
        bank = FeatureBank(kernels=rng.normal(size=(2, 3, 3)), biases=np.zeros(2))
        image = rng.random((12, 12))
        shifted = np.roll(image, 1, axis=1)
        r_base = convolve_features(image, bank)
        r_shift = convolve_features(shifted, bank)
        # interior columns of the shifted response reproduce the original
        np.testing.assert_allclose(
            r_shift[:, :, 1:], r_base[:, :, :-1], atol=1e-12
        )


class TestMeanPool:
    def test_constant_map_pools_to_constant(self):
        responses = np.full((2, 6, 6), 0.37)
        np.testing.assert_allclose(mean_pool(responses, 2, 3), 0.37, atol=1e-15)

    def test_degenerate_grid_is_global_mean(self, rng):
        responses = rng.random((4, 5, 7))
        pooled = mean_pool(responses, 1, 1)
        np.testing.assert_allclose(
            pooled, responses.mean(axis=(1, 2)), atol=1e-12
        )

    def test_matches_partition_oracle(self, rng):
        responses = rng.random((3, 5, 7))
        np.testing.assert_array_equal(
            mean_pool(responses, 2, 2), loop_pool(responses, 2, 2)
        )

    def test_grid_larger_than_map_rejected(self, rng):
        with pytest.raises(ValueError):
            mean_pool(rng.random((1, 3, 3)), 4, 2)

    def test_mean_preserved_when_cells_tile_exactly(self, rng):
        responses = rng.random((2, 8, 12))
        pooled = mean_pool(responses, 4, 6).reshape(2, 4, 6)
        for k in range(2):
            assert abs(pooled[k].mean() - responses[k].mean()) < 1e-9

    def test_layout_is_kernel_major(self, rng):
        responses = rng.random((2, 4, 4))
        pooled = mean_pool(responses, 2, 2)
        first_kernel = loop_pool(responses[:1], 2, 2)
        np.testing.assert_array_equal(pooled[:4], first_kernel)


class TestRepresent:
    def test_zero_bank_gives_half_vector(self, rng):
        bank = FeatureBank(kernels=np.zeros((2, 3, 3)), biases=np.zeros(2))
        vector = represent(rng.random((9, 9)), bank, 2, 2)
        np.testing.assert_array_equal(vector, np.full(8, 0.5))

    def test_deterministic(self, rng):
        bank = FeatureBank(kernels=rng.normal(size=(3, 4, 4)), biases=rng.normal(size=3))
        image = rng.random((10, 11))
        a = represent(image, bank, 3, 3)
        b = represent(image.copy(), bank, 3, 3)
        np.testing.assert_array_equal(a, b)

    def test_equals_two_step_composition(self, rng):
        bank = FeatureBank(kernels=rng.normal(size=(2, 4, 4)), biases=rng.normal(size=2))
        image = rng.random((9, 13))
        composed = mean_pool(convolve_features(image, bank), 2, 3)
        np.testing.assert_array_equal(represent(image, bank, 2, 3), composed)

    def test_components_strictly_inside_unit_interval(self, rng):
        bank = FeatureBank(
            kernels=rng.normal(size=(3, 4, 4)), biases=rng.normal(size=3)
        )
        vector = represent(rng.random((12, 12)), bank, 4, 4)
        assert vector.min() > 0.0 and vector.max() < 1.0


class TestExtractor:
    def test_transform_stacks_feature_vectors(self, fitted_whitening, rng):
        params = init_params(10, 4, seed=5)
        extractor = ConvolutionalFeatureExtractor.from_autoencoder(
            params, fitted_whitening, patch_side=4, pool_rows=2, pool_cols=2
        )
        images = [rng.random((8, 8)) for _ in range(3)]
        out = extractor.fit(images).transform(images)
        assert out.shape == (3, extractor.n_output_features_)
        np.testing.assert_array_equal(
            out[1], represent(images[1], extractor.bank, 2, 2)
        )
