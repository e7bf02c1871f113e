import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from fingervein import OneClassGaussian, ThresholdStrategy, select_threshold


def isotropic_model(mean):
    """Hand-built model with identity covariance and zero log-determinant."""
    model = OneClassGaussian()
    model.mean_ = np.asarray(mean, dtype=float)
    model.variance_ = np.ones_like(model.mean_)
    model.log_det_ = 0.0
    model.threshold_ = None
    model.n_features_in_ = model.mean_.size
    return model


def empirical_rates(genuine, impostor, threshold):
    far = np.mean(np.asarray(impostor) >= threshold)
    frr = np.mean(np.asarray(genuine) < threshold)
    return far, frr


class TestFit:
    def test_degenerate_sample_gives_ridge_covariance(self):
        v = np.array([0.3, 0.7, 0.1])
        model = OneClassGaussian(regularizer=1e-3).fit(np.tile(v, (3, 1)))
        np.testing.assert_allclose(model.mean_, v, atol=1e-15)
        np.testing.assert_allclose(model.variance_, 1e-3, atol=1e-18)
        scores = model.score_samples(np.vstack([v, v + 0.01]))
        assert scores[0] > scores[1]

    def test_hand_computed_two_dimensional_example(self):
        X = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
        model = OneClassGaussian(shrinkage=0.5, regularizer=1e-3).fit(X)
        np.testing.assert_array_equal(model.mean_, [1.0, 1.0])
        # per-dimension unbiased variances are 4/3; shrinkage blends them
        # with their mean (also 4/3) and adds the ridge
        expected = 0.5 * (4.0 / 3.0) + 0.5 * (4.0 / 3.0) + 1e-3
        np.testing.assert_allclose(model.variance_, expected, atol=1e-12)
        np.testing.assert_allclose(
            model.log_det_, 2 * np.log(expected), atol=1e-12
        )

    def test_recovers_mean_of_known_gaussian(self, rng):
        true_mean = np.array([1.0, -2.0, 0.5])
        X = rng.multivariate_normal(true_mean, np.diag([1.0, 0.5, 2.0]), size=1000)
        model = OneClassGaussian().fit(X)
        assert np.abs(model.mean_ - true_mean).max() < 0.1

    def test_single_sample_rejected(self):
        with pytest.raises(ValueError):
            OneClassGaussian().fit(np.ones((1, 4)))

    def test_identical_fits_are_value_equal(self, rng):
        X = rng.random((5, 6))
        a = OneClassGaussian().fit(X)
        b = OneClassGaussian().fit(X.copy())
        np.testing.assert_array_equal(a.mean_, b.mean_)
        np.testing.assert_array_equal(a.variance_, b.variance_)
        assert a.log_det_ == b.log_det_


class TestScore:
    def test_mean_scores_minus_half_log_det(self, rng):
        X = rng.random((4, 3))
        model = OneClassGaussian().fit(X)
        score = model.score_samples(model.mean_.reshape(1, -1))[0]
        assert abs(score - (-0.5 * model.log_det_)) < 1e-12

    def test_isotropic_closed_form(self):
        model = isotropic_model([0.0, 0.0])
        v = np.array([[3.0, 4.0]])  # distance 5 from the mean
        assert abs(model.score_samples(v)[0] - (-12.5)) < 1e-12

    def test_matches_solve_oracle(self, rng):
        X = rng.random((6, 4))
        model = OneClassGaussian().fit(X)
        v = rng.random(4)
        cov = np.diag(model.variance_)
        diff = v - model.mean_
        expected = -0.5 * diff @ np.linalg.solve(cov, diff) - 0.5 * model.log_det_
        assert abs(model.score_samples(v.reshape(1, -1))[0] - expected) < 1e-9

    def test_mean_is_the_mode(self, rng):
        X = rng.random((5, 8))
        model = OneClassGaussian().fit(X)
        best = model.score_samples(model.mean_.reshape(1, -1))[0]
        for _ in range(50):
            delta = rng.normal(scale=0.1, size=8)
            perturbed = model.score_samples((model.mean_ + delta).reshape(1, -1))[0]
            assert perturbed < best

    def test_dimension_mismatch_rejected(self, rng):
        model = OneClassGaussian().fit(rng.random((4, 3)))
        with pytest.raises(ValueError):
            model.score_samples(rng.random((2, 5)))

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            OneClassGaussian().score_samples(np.zeros((1, 2)))


class TestSelectThreshold:
    def test_separable_scores_return_gap_midpoint(self):
        threshold = select_threshold(
            [0.9, 0.8], [0.1, 0.2], ThresholdStrategy(target="eer_point")
        )
        assert threshold == 0.5
        far, frr = empirical_rates([0.9, 0.8], [0.1, 0.2], threshold)
        assert far == 0.0 and frr == 0.0

    def test_identical_sets_balance_rates(self):
        scores = [0.1, 0.2, 0.5, 0.9]
        threshold = select_threshold(
            scores, list(scores), ThresholdStrategy(target="eer_point")
        )
        far, frr = empirical_rates(scores, scores, threshold)
        assert far == 0.5 and frr == 0.5

    def test_beats_or_ties_every_candidate_threshold(self, rng):
        for trial in range(20):
            genuine = rng.normal(1.0, 1.0, size=50)
            impostor = rng.normal(0.0, 1.0, size=50)
            threshold = select_threshold(
                genuine, impostor, ThresholdStrategy(target="eer_point")
            )
            far, frr = empirical_rates(genuine, impostor, threshold)
            gap = abs(far - frr)
            eps = 1e-9
            candidates = np.concatenate([
                np.unique(np.concatenate([genuine, impostor])) - eps,
                np.unique(np.concatenate([genuine, impostor])) + eps,
            ])
            best = min(
                abs(np.subtract(*empirical_rates(genuine, impostor, c)))
                for c in candidates
            )
            assert gap <= best + 1e-12

    def test_fixed_far_picks_smallest_qualifying(self, rng):
        genuine = rng.normal(2.0, 0.5, size=100)
        impostor = rng.normal(0.0, 1.0, size=200)
        strategy = ThresholdStrategy(target="fixed_far", fixed_far_value=0.05)
        threshold = select_threshold(genuine, impostor, strategy)
        far, _ = empirical_rates(genuine, impostor, threshold)
        assert far <= 0.05
        # any smaller observed-score threshold must violate the FAR budget
        values = np.unique(np.concatenate([genuine, impostor]))
        for v in values[values < threshold]:
            assert np.mean(impostor >= v) > 0.05

    def test_monotone_rate_property(self, rng):
        genuine = rng.normal(1.0, 1.0, 60)
        impostor = rng.normal(0.0, 1.0, 60)
        thresholds = np.sort(rng.normal(0.5, 1.5, 30))
        fars, frrs = [], []
        for t in thresholds:
            far, frr = empirical_rates(genuine, impostor, t)
            fars.append(far)
            frrs.append(frr)
        assert np.all(np.diff(fars) <= 0)
        assert np.all(np.diff(frrs) >= 0)

    def test_affine_shift_moves_threshold_by_constant(self, rng):
        genuine = rng.normal(1.0, 1.0, 40)
        impostor = rng.normal(0.0, 1.0, 40)
        strategy = ThresholdStrategy(target="eer_point")
        base = select_threshold(genuine, impostor, strategy)
        shift = 3.7
        moved = select_threshold(genuine + shift, impostor + shift, strategy)
        assert abs(moved - (base + shift)) < 1e-9
        far0, frr0 = empirical_rates(genuine, impostor, base)
        far1, frr1 = empirical_rates(genuine + shift, impostor + shift, moved)
        assert far0 == far1 and frr0 == frr1

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            select_threshold([], [0.1], ThresholdStrategy())

    def test_strategy_validation(self):
        with pytest.raises(ValueError):
            ThresholdStrategy(kind="both")
        with pytest.raises(ValueError):
            ThresholdStrategy(target="fixed_far")


class TestVerify:
    def test_mean_accepted_below_max_score(self, rng):
        model = OneClassGaussian().fit(rng.random((4, 3)))
        model.set_threshold(-0.5 * model.log_det_ - 1.0)
        accepted, score = model.verify(model.mean_)
        assert accepted
        assert abs(score - (-0.5 * model.log_det_)) < 1e-12

    def test_infinite_threshold_rejects_everything(self, rng):
        model = OneClassGaussian().fit(rng.random((4, 3)))
        model.set_threshold(np.inf)
        for _ in range(10):
            accepted, _ = model.verify(rng.random(3))
            assert not accepted

    def test_decisions_match_external_thresholding(self, rng):
        model = OneClassGaussian().fit(rng.random((5, 4)))
        model.set_threshold(-2.0)
        batch = rng.random((20, 4))
        decisions = model.predict(batch)
        np.testing.assert_array_equal(
            decisions, model.score_samples(batch) >= -2.0
        )

    def test_unset_threshold_is_a_state_error(self, rng):
        model = OneClassGaussian().fit(rng.random((3, 2)))
        with pytest.raises(RuntimeError):
            model.predict(np.zeros((1, 2)))
