"""OLS, MAP, TLS and robust-IRLS baselines."""

import math

import numpy as np
import pytest

from glsreg import (Dataset, ModelSpec, Observation, fit_map, fit_ols,
                    fit_rob, fit_tls)
from glsreg.models import AFFINE, LOGLIN, POWER, SIMPLE


def linear_rows(beta0, slopes, X, noise=None, ey=0.1, ex=0.0, group="all"):
    X = np.atleast_2d(X)
    y = beta0 + X @ np.asarray(slopes)
    if noise is not None:
        y = y + noise
    return [Observation(float(yv), tuple(xv), ey, tuple(ex for _ in xv), group)
            for yv, xv in zip(y, X)]


class TestOls:
    def test_exact_interpolation_simple(self):
        d = Dataset([Observation(3.0, (1.0,), 0.1, (0.0,)),
                     Observation(6.0, (2.0,), 0.1, (0.0,))])
        res = fit_ols(ModelSpec(SIMPLE, 1), d)
        assert res.beta[0] == pytest.approx(3.0, abs=1e-12)
        assert res.converged

    def test_affine_noise_free_recovery(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(1, 10, (30, 2))
        d = Dataset(linear_rows(1.5, (2.0, -0.7), X))
        res = fit_ols(ModelSpec(AFFINE, 2), d)
        assert np.allclose(res.beta, (1.5, 2.0, -0.7), atol=1e-8)

    def test_loglinear_reports_multiplicative_constant(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(1, 50, 25)
        rows = [Observation(0.8 * v**1.4, (v,), 0.2, (0.2,)) for v in x]
        res = fit_ols(ModelSpec(LOGLIN, 1), Dataset(rows))
        assert res.beta[0] == pytest.approx(0.8, rel=1e-8)
        assert res.beta[1] == pytest.approx(1.4, rel=1e-8)

    def test_power_law_lm_recovery(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0.5, 8, (60, 2))
        y = 2.5 * X[:, 0] ** 0.7 * X[:, 1] ** 1.2
        rows = [Observation(float(yv), tuple(xv), 0.1, (0.05, 0.05))
                for yv, xv in zip(y, X)]
        res = fit_ols(ModelSpec(POWER, 2), Dataset(rows))
        assert np.allclose(res.beta, (2.5, 0.7, 1.2), atol=1e-8)
        assert res.converged

    def test_rank_deficiency_raises(self):
        X = np.column_stack([np.arange(1.0, 9.0), 2.0 * np.arange(1.0, 9.0)])
        d = Dataset(linear_rows(0.5, (1.0, 1.0), X))
        with pytest.raises(np.linalg.LinAlgError):
            fit_ols(ModelSpec(AFFINE, 2), d)


class TestMap:
    def test_zero_predictor_errors_matches_ols(self):
        # homoscedastic response errors, no predictor errors: the
        # likelihood argmin is the least-squares argmin
        rng = np.random.default_rng(3)
        X = rng.uniform(1, 10, (40, 1))
        noise = rng.normal(0, 0.8, 40)
        y = 1.0 + 2.0 * X[:, 0] + noise
        rows = [Observation(float(yv), (float(xv),), 0.5 / abs(yv), (0.0,))
                for yv, xv in zip(y, X[:, 0])]
        d = Dataset(rows)
        ols = fit_ols(ModelSpec(AFFINE, 1), d)
        mp = fit_map(ModelSpec(AFFINE, 1), d)
        assert np.allclose(mp.beta, ols.beta, atol=1e-8)

    def test_noise_free_recovery(self):
        # zero quoted predictor errors: the ln(sigma_mod) term is then flat
        # in beta and the likelihood argmin is exact interpolation
        rng = np.random.default_rng(4)
        X = rng.uniform(1, 10, (25, 2))
        d = Dataset(linear_rows(1.5, (2.0, -0.7), X, ey=0.05, ex=0.0))
        res = fit_map(ModelSpec(AFFINE, 2), d)
        assert np.allclose(res.beta, (1.5, 2.0, -0.7), atol=1e-8)

    def test_predictor_errors_induce_shrinkage(self):
        # with predictor error bars the propagated sigma depends on beta and
        # the noise-free argmin sits slightly below the true slopes
        rng = np.random.default_rng(4)
        X = rng.uniform(1, 10, (25, 2))
        d = Dataset(linear_rows(1.5, (2.0, -0.7), X, ey=0.05, ex=0.02))
        res = fit_map(ModelSpec(AFFINE, 2), d)
        assert abs(res.beta[1]) < 2.0
        assert np.allclose(res.beta, (1.5, 2.0, -0.7), atol=0.02)

    def test_requires_error_bars(self):
        d = Dataset(linear_rows(1.0, (2.0,), np.arange(1.0, 9.0)[:, None],
                                ey=0.0, ex=0.0))
        with pytest.raises(ValueError):
            fit_map(ModelSpec(AFFINE, 1), d)


class TestTls:
    def test_exact_line(self):
        x = np.linspace(1, 9, 12)
        rows = [Observation(2.0 * v, (v,), 0.1, (0.1,)) for v in x]
        res = fit_tls(ModelSpec(SIMPLE, 1), Dataset(rows))
        assert res.beta[0] == pytest.approx(2.0, abs=1e-10)

    def test_symmetry_under_axis_exchange(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(1, 10, 20)
        y = 2.0 * x
        fwd = [Observation(float(yv), (float(xv),), 0.1, (0.1,))
               for xv, yv in zip(x, y)]
        rev = [Observation(float(xv), (float(yv),), 0.1, (0.1,))
               for xv, yv in zip(x, y)]
        b1 = fit_tls(ModelSpec(SIMPLE, 1), Dataset(fwd)).beta[0]
        b2 = fit_tls(ModelSpec(SIMPLE, 1), Dataset(rev)).beta[0]
        assert b1 * b2 == pytest.approx(1.0, abs=1e-8)

    def test_affine_noise_free(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(1, 10, (30, 2))
        d = Dataset(linear_rows(1.5, (2.0, -0.7), X))
        res = fit_tls(ModelSpec(AFFINE, 2), d)
        assert np.allclose(res.beta, (1.5, 2.0, -0.7), atol=1e-8)

    def test_degenerate_spectrum_flagged(self):
        rows = [Observation(0.0, (1.0,), 0.1, (0.1,)),
                Observation(1.0, (0.0,), 0.1, (0.1,)),
                Observation(0.0, (-1.0,), 0.1, (0.1,)),
                Observation(-1.0, (0.0,), 0.1, (0.1,))]
        res = fit_tls(ModelSpec(SIMPLE, 1), Dataset(rows))
        assert res.diagnostics["degenerate"]

    def test_power_rejected(self):
        d = Dataset(linear_rows(1.0, (1.0,), np.arange(1.0, 9.0)[:, None]))
        with pytest.raises(ValueError):
            fit_tls(ModelSpec(POWER, 1), d)


class TestRob:
    def test_clean_data_equals_ols(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(1, 10, (30, 1))
        d = Dataset(linear_rows(0.0, (3.0,), X, noise=rng.normal(0, 0.1, 30)))
        ols = fit_ols(ModelSpec(AFFINE, 1), d)
        rob = fit_rob(ModelSpec(AFFINE, 1), d)
        assert np.allclose(rob.beta, ols.beta, atol=0.05)
        assert rob.converged

    def test_noise_free_equals_ols_exactly(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(1, 10, (20, 1))
        d = Dataset(linear_rows(1.0, (3.0,), X))
        rob = fit_rob(ModelSpec(AFFINE, 1), d)
        assert np.allclose(rob.beta, (1.0, 3.0), atol=1e-8)

    def test_outlier_magnitude_irrelevant_beyond_cutoff(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(1, 10, (30, 1))
        base = linear_rows(0.0, (3.0,), X, noise=rng.normal(0, 0.2, 30))

        def with_outlier(mag):
            rows = list(base) + [Observation(mag, (5.0,), 0.1, (0.0,))]
            return fit_rob(ModelSpec(AFFINE, 1), Dataset(rows)).beta

        b3 = with_outlier(1e3)
        b6 = with_outlier(1e6)
        assert np.max(np.abs(np.array(b3) - np.array(b6))) < 1e-6

    def test_power_rejected(self):
        d = Dataset(linear_rows(1.0, (1.0,), np.arange(1.0, 9.0)[:, None]))
        with pytest.raises(ValueError):
            fit_rob(ModelSpec(POWER, 1), d)


class TestAllMethodsNoiseFree:
    # noise-free exact-model data: quoted predictor errors are zero (there
    # is no predictor noise to quote), so every method interpolates exactly
    def test_affine_agreement(self):
        rng = np.random.default_rng(10)
        X = rng.uniform(1, 10, (25, 3))
        d = Dataset(linear_rows(2.0, (1.0, -0.5, 0.25), X, ey=0.05, ex=0.0))
        truth = (2.0, 1.0, -0.5, 0.25)
        spec = ModelSpec(AFFINE, 3)
        for fn in (fit_ols, fit_map, fit_tls, fit_rob):
            res = fn(spec, d)
            assert np.allclose(res.beta, truth, atol=1e-8), res.method

    def test_loglinear_agreement(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0.5, 40, 30)
        rows = [Observation(1.7 * v**0.9, (v,), 0.1, (0.0,)) for v in x]
        d = Dataset(rows)
        spec = ModelSpec(LOGLIN, 1)
        for fn in (fit_ols, fit_map, fit_tls, fit_rob):
            res = fn(spec, d)
            assert res.beta[0] == pytest.approx(1.7, rel=1e-8), res.method
            assert res.beta[1] == pytest.approx(0.9, rel=1e-8), res.method
