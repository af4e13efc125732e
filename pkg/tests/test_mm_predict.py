import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from annotriage import mm
from annotriage.errors import (
    ArityMismatchError,
    DimensionMismatchError,
    EmptyValidationError,
)
from annotriage.metrics import calibration_report
from annotriage.mm import (
    ClassMixture,
    EnsembleFrame,
    GibbsConfig,
    calibrate_single_model,
    fit_mm,
    mm_predict,
    mm_predict_batch,
    select_regularization,
)

from conftest import frame_from_positive_probs, gaussian_params


class TestPredict:
    def test_mirror_symmetry(self):
        params = gaussian_params(mu0=-1.0, mu1=1.0)
        probs = mm_predict([0.0], params)
        assert probs.values == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_count_ratio_with_equal_densities(self):
        params = gaussian_params(mu0=0.0, mu1=0.0, counts=(100.0, 300.0))
        probs = mm_predict([0.7], params)
        assert probs.values == pytest.approx((0.25, 0.75), abs=1e-12)

    def test_two_scalar_densities_hand_case(self):
        # log N(0.5; 1, 1) - log N(0.5; -1, 1) = 1.0, so class 1 gets sigma(1)
        params = gaussian_params(mu0=-1.0, mu1=1.0)
        probs = mm_predict([0.5], params)
        expected = 1.0 / (1.0 + math.exp(-1.0))
        assert probs.values[1] == pytest.approx(expected, abs=1e-12)

    def test_gamma_scaling_invariance(self):
        # the common factor cancels algebraically in the normalization; in
        # floats the log leaves at most an ulp, so assert at roundoff level
        params = gaussian_params(mu0=-1.0, mu1=0.5, counts=(80.0, 120.0))
        scaled = replace(params, gamma=params.gamma * 37.5)
        u = np.array([[0.3], [-2.0], [5.0]])
        diff = np.abs(mm_predict_batch(u, params) - mm_predict_batch(u, scaled))
        assert diff.max() <= 1e-14

    def test_density_monotonicity(self):
        # moving class 0's mean onto u strictly raises its density there
        base = gaussian_params(mu0=-2.0, mu1=1.0)
        closer = gaussian_params(mu0=0.0, mu1=1.0)
        u = [0.0]
        assert mm_predict(u, closer).values[0] > mm_predict(u, base).values[0]

    def test_class_swap_permutes_output(self):
        params = gaussian_params(mu0=-1.2, mu1=0.7, counts=(90.0, 210.0))
        # swapping the two classes flips the log-odds reference: u -> -u
        swapped = replace(
            params,
            classes=(params.classes[1], params.classes[0]),
            class_counts=params.class_counts[::-1].copy(),
            gamma=params.gamma[::-1].copy(),
            summary=tuple(
                ClassMixture(
                    weights=mix.weights.copy(),
                    means=-mix.means.copy(),
                    covariances=mix.covariances.copy(),
                )
                for mix in params.summary[::-1]
            ),
        )
        for u in (0.0, 0.8, -1.7):
            direct = mm_predict([u], params).values
            mirrored = mm_predict([-u], swapped).values
            assert mirrored == pytest.approx(direct[::-1], abs=1e-12)

    def test_output_is_simplex(self):
        params = gaussian_params(mu0=-1.0, mu1=1.0, counts=(5.0, 500.0))
        for u in (-8.0, 0.0, 8.0):
            probs = mm_predict([u], params)
            assert abs(sum(probs.values) - 1.0) <= 1e-9
            assert all(0.0 < v < 1.0 for v in probs.values)

    def test_dimension_mismatch(self):
        params = gaussian_params(mu0=-1.0, mu1=1.0)
        with pytest.raises(DimensionMismatchError):
            mm_predict([0.0, 1.0], params)

    def test_draw_averaging_matches_hand_mean(self):
        params = gaussian_params(mu0=-1.0, mu1=1.0)
        draw_a = params.summary
        draw_b = tuple(
            ClassMixture(mix.weights, mix.means + 0.5, mix.covariances)
            for mix in params.summary
        )
        with_draws = replace(
            params, draws=((draw_a[0], draw_b[0]), (draw_a[1], draw_b[1]))
        )
        u = np.array([[0.4]])
        by_hand = 0.5 * (
            mm_predict_batch(u, replace(params, summary=draw_a), use_draws=False)
            + mm_predict_batch(u, replace(params, summary=draw_b), use_draws=False)
        )
        assert mm_predict_batch(u, with_draws) == pytest.approx(by_hand, abs=1e-12)


def two_dim_frame(n, seed, noise_dim_informative=False):
    """r=2 binary frame: dim 0 carries the signal, dim 1 is pure noise."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    signal = rng.normal(np.where(labels == 0, 1.0, -1.0), 1.0)
    if noise_dim_informative:
        other = rng.normal(np.where(labels == 0, 1.0, -1.0), 1.0)
    else:
        other = rng.normal(0.0, 1.0, size=n)
    u = np.stack([signal, other], axis=1)
    predictions = mm.inverse_logodds(u.reshape(n, 2, 1), 2)
    return EnsembleFrame(
        model_ids=("sig", "noise"),
        instance_ids=tuple(f"i{seed}_{k}" for k in range(n)),
        predictions=predictions,
        labels=labels,
    )


class TestRegularization:
    def test_trivial_grid_is_identity(self):
        train = two_dim_frame(400, seed=1)
        params, _ = fit_mm(train, GibbsConfig(iterations=200, burn_in=100, seed=0))
        chosen = select_regularization(params, two_dim_frame(400, seed=2), grid=[1.0])
        assert np.array_equal(chosen.inflation, np.ones(2))

    def test_empty_validation(self):
        train = two_dim_frame(400, seed=1)
        params, _ = fit_mm(train, GibbsConfig(iterations=200, burn_in=100, seed=0))
        empty = EnsembleFrame(
            ("sig", "noise"), (), np.empty((0, 2, 2)), labels=np.empty(0, dtype=int)
        )
        with pytest.raises(EmptyValidationError):
            select_regularization(params, empty)

    def test_grid_must_contain_one(self):
        train = two_dim_frame(400, seed=1)
        params, _ = fit_mm(train, GibbsConfig(iterations=200, burn_in=100, seed=0))
        with pytest.raises(ValueError):
            select_regularization(params, two_dim_frame(100, seed=2), grid=[2.0, 5.0])

    def test_noise_dimension_gets_inflated(self):
        train = two_dim_frame(140, seed=3)
        validation = two_dim_frame(3000, seed=4)
        params, _ = fit_mm(train, GibbsConfig(iterations=400, burn_in=200, seed=0))
        grid = [1.0, 2.0, 5.0, 10.0]
        chosen = select_regularization(params, validation, grid)
        assert chosen.inflation[1] > 1.0

        # oracle: exhaustive grid evaluation of held-out log-likelihood using
        # an independent density implementation (scipy multivariate normal)
        u_val = mm.frame_to_latent(validation, params.delta)
        labels = validation.labels

        def held_out_ll(rho):
            logits = np.empty((len(u_val), 2))
            for t in range(2):
                mix = params.summary[t]
                cov = mix.covariances[0].copy()
                cov[np.arange(2), np.arange(2)] *= rho
                logits[:, t] = stats.multivariate_normal.logpdf(
                    u_val, mean=mix.means[0], cov=cov
                ) + np.log(params.gamma[t] * params.class_counts[t])
            log_norm = np.log(np.exp(logits).sum(axis=1))
            return float((logits[np.arange(len(labels)), labels] - log_norm).sum())

        rho = np.ones(2)
        for j in range(2):
            scores = []
            for g in grid:
                candidate = rho.copy()
                candidate[j] = g
                scores.append(held_out_ll(candidate))
            rho[j] = grid[int(np.argmax(scores))]
        assert np.array_equal(chosen.inflation, rho)


class TestCalibrateSingleModel:
    def test_rejects_multi_model_frame(self):
        frame = two_dim_frame(60, seed=0)
        with pytest.raises(ArityMismatchError):
            calibrate_single_model(frame, GibbsConfig(iterations=10, burn_in=0))

    @staticmethod
    def overconfident_frames(n, scale):
        def build(seed):
            rng = np.random.default_rng(seed)
            labels = rng.integers(0, 2, size=n)
            score = rng.normal(np.where(labels == 1, 1.0, -1.0), 1.0)
            pos = 1.0 / (1.0 + np.exp(-scale * score))
            return frame_from_positive_probs(pos, labels)

        return build(10), build(20)

    def test_overconfidence_reduced(self):
        train, held = self.overconfident_frames(2500, scale=4.0)
        params = calibrate_single_model(
            train, GibbsConfig(iterations=500, burn_in=200, thinning=2, seed=9)
        )
        calibrated = mm.predict_frame(held, params)
        raw_pos = held.predictions[:, 0, 1]
        ece_raw = calibration_report(raw_pos, held.labels, 10).ece
        ece_cal = calibration_report(calibrated[:, 1], held.labels, 10).ece
        assert ece_cal < ece_raw

    def test_calibrated_model_keeps_predictions(self):
        # scale 2 equals the Bayes posterior for unit-variance +-1 classes
        train, held = self.overconfident_frames(2500, scale=2.0)
        params = calibrate_single_model(
            train, GibbsConfig(iterations=500, burn_in=200, thinning=2, seed=9)
        )
        calibrated = mm.predict_frame(held, params)
        raw_class = (held.predictions[:, 0, 1] > 0.5).astype(int)
        new_class = calibrated.argmax(axis=1)
        assert float(np.mean(raw_class != new_class)) <= 0.01
