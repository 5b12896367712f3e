"""
Tests for the gradient estimators and the SVI driver.
"""

import math

import numpy as np
import pytest
from scipy.stats import norm

from smoothppl.density import QuadratureGrid, elbo_grad_fd
from smoothppl.errors import DoubleSampleError, ZeroDensityError
from smoothppl.estimate import (
    Estimator,
    GradEstimate,
    SviConfig,
    mc_gradient,
    pge_grad,
    sce_grad,
    svi,
)
from smoothppl.reparam import default_plan, empty_plan, restrict
from smoothppl.syntax import Name, parse_program
from smoothppl.utils import make_rng

Z1, Z2 = Name("z1", 0), Name("z2", 0)
THETA = {"θ1": 1.0, "θ2": 2.0}
TRUE_GRAD = np.array([-1.0 / 5.0 + 1.0 / 3.0, -1.0 / 3.0 + 1.5 * norm.pdf(2.0)])
PATHWISE_MEAN = np.array([-1.0 / 5.0 + 1.0 / 3.0, -1.0 / 3.0])

# An even point count puts z2 = 0, where the model's branch switches, at a cell midpoint.
MIDPOINT_GRID = QuadratureGrid(lo=-10.0, hi=10.0, points=1000)


class TestSingleDraw:
    """Test cases for single-draw estimates."""

    def test_pathwise_estimate_at_zero_noise(self, sign_model, sign_guide):
        """Test the pathwise estimate where the standardised draws are zero."""
        out = pge_grad(sign_model.command, sign_guide.command, THETA, {Z1: 0.0, Z2: 0.0}, name_bound=1)
        np.testing.assert_allclose(out.grad, PATHWISE_MEAN, atol=1e-9)

    def test_score_function_estimate(self, sign_model, sign_guide):
        z = (1.5, 2.0)
        out = sce_grad(sign_model.command, sign_guide.command, THETA, {Z1: z[0], Z2: z[1]}, name_bound=1)
        log_m = (
            norm.logpdf(z[0], 0.0, math.sqrt(5.0))
            + norm.logpdf(z[1], z[0], math.sqrt(3.0))
            + norm.logpdf(0.0, 1.0, 1.0)
        )
        log_g = norm.logpdf(z[0], 1.0, 1.0) + norm.logpdf(z[1], 2.0, 1.0)
        np.testing.assert_allclose(out.grad, [0.5 * (log_m - log_g), 0.0], atol=1e-9)

    def test_zero_model_density(self, sign_guide):
        model = parse_program('x1 := sam(name("z1", 0), N(0, 1), λy. y); obs(U(0, 1), 2)')
        estimator = Estimator(model, sign_guide.command, default_plan(), sign_guide.params, name_bound=1)
        with pytest.raises(ZeroDensityError):
            estimator.estimate(THETA, {Z1: 0.0, Z2: 0.0})

    def test_missing_parameter(self, sign_model, sign_guide):
        estimator = Estimator(sign_model.command, sign_guide.command, default_plan(), sign_guide.params)
        with pytest.raises(ValueError):
            estimator.estimate({"θ1": 1.0}, {Z1: 0.0, Z2: 0.0})

    def test_non_finite_estimate_is_rejected(self):
        with pytest.raises(ZeroDensityError):
            GradEstimate(("a",), [math.nan])


class TestMonteCarlo:
    """Test cases for Estimator.monte_carlo."""

    def test_pathwise_estimator_is_biased(self, sign_model, sign_guide):
        out = mc_gradient(
            sign_model.command, sign_guide.command, default_plan(), THETA, 40_000, seed=1, name_bound=1
        )
        np.testing.assert_allclose(out.grad, PATHWISE_MEAN, atol=0.02)
        assert out.z_scores(TRUE_GRAD)[1] > 5

    def test_selective_estimator_is_unbiased(self, sign_model, sign_guide):
        plan = restrict(default_plan(), ["z1"])
        out = mc_gradient(sign_model.command, sign_guide.command, plan, THETA, 40_000, seed=1, name_bound=1)
        assert np.all(out.z_scores(TRUE_GRAD) < 5)
        assert out.samples == 40_000
        assert out.seed == 1

    def test_score_function_estimator_is_unbiased(self, gauss_model, gauss_guide):
        out = mc_gradient(gauss_model.command, gauss_guide.command, empty_plan(), {"m": 0.3}, 40_000, seed=2)
        assert out.z_scores([0.4])[0] < 5

    def test_result_does_not_depend_on_jobs(self, sign_model, sign_guide):
        estimator = Estimator(
            sign_model.command, sign_guide.command, restrict(default_plan(), ["z1"]), sign_guide.params, name_bound=1
        )
        one = estimator.monte_carlo(THETA, 3000, seed=5, chunk=700, jobs=1)
        three = estimator.monte_carlo(THETA, 3000, seed=5, chunk=700, jobs=3)
        np.testing.assert_array_equal(one.grad, three.grad)
        np.testing.assert_array_equal(one.stderr, three.stderr)

    def test_single_sample_has_infinite_error(self, gauss_model, gauss_guide):
        out = mc_gradient(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.0}, 1)
        assert np.isinf(out.stderr).all()

    def test_draw_rejects_double_sampling(self, gauss_model):
        guide = parse_program(
            'x := sam(name("z", 0), N(m, 1), λy. y); x := sam(name("z", 0), N(m, 1), λy. y)'
        )
        estimator = Estimator(gauss_model.command, guide, default_plan(), ("m",))
        with pytest.raises(DoubleSampleError):
            estimator.draw({"m": 0.0}, make_rng(0), 4)

    def test_as_dict(self, gauss_model, gauss_guide):
        out = mc_gradient(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.3}, 100, seed=4)
        data = out.as_dict()
        assert data["params"] == ["m"]
        assert data["samples"] == 100
        assert data["seed"] == 4
        assert len(data["stderr"]) == 1


class TestSvi:
    """Test cases for svi."""

    @pytest.mark.parametrize(
        "kwargs", [{"eta": -0.1}, {"steps": -1}, {"samples": 0}]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SviConfig(**kwargs)

    def test_conjugate_model_converges(self, gauss_model, gauss_guide):
        cfg = SviConfig(eta=0.05, steps=400, samples=16, seed=3)
        result = svi(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.0}, cfg)
        assert result.tail_mean()[0] == pytest.approx(0.5, abs=0.05)
        assert len(result.trajectory) == 401
        assert len(result.grad_norms) == 400

    def test_progress_and_determinism(self, gauss_model, gauss_guide):
        seen = []
        cfg = SviConfig(eta=0.1, steps=5, samples=4, seed=9)
        first = svi(
            gauss_model.command,
            gauss_guide.command,
            default_plan(),
            {"m": 0.0},
            cfg,
            progress=lambda step, theta, g: seen.append(step),
        )
        second = svi(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.0}, cfg)
        assert seen == [1, 2, 3, 4, 5]
        np.testing.assert_array_equal(first.trajectory, second.trajectory)

    def test_csv(self, gauss_model, gauss_guide):
        cfg = SviConfig(eta=0.1, steps=3, samples=2, seed=11)
        result = svi(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.0}, cfg)
        lines = result.to_csv().splitlines()
        assert lines[0] == "step,m,grad_norm,seed"
        assert len(lines) == 5
        assert lines[1].startswith("0,0.0,,")
        assert lines[-1].startswith("3,") and lines[-1].endswith(",11")

    def test_tail_mean_fraction(self, gauss_model, gauss_guide):
        result = svi(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.0}, SviConfig(steps=2))
        with pytest.raises(ValueError):
            result.tail_mean(0.0)

    def test_zero_learning_rate_keeps_theta(self, gauss_model, gauss_guide):
        cfg = SviConfig(eta=0.0, steps=10, samples=2, seed=1)
        result = svi(gauss_model.command, gauss_guide.command, default_plan(), {"m": 0.7}, cfg)
        np.testing.assert_array_equal(result.trajectory, np.full((11, 1), 0.7))

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "plan,optimum,tol",
        [
            (default_plan(), (0.0, 0.0), 0.1),
            (restrict(default_plan(), ["z1"]), (0.95, 1.52), 0.15),
        ],
    )
    def test_sign_model_optimum(self, sign_model, sign_guide, plan, optimum, tol):
        """Test that the biased estimator settles at the wrong point and the selective one does not."""
        cfg = SviConfig(eta=0.05, steps=2000, samples=16, seed=7)
        result = svi(sign_model.command, sign_guide.command, plan, {"θ1": 0.0, "θ2": 0.0}, cfg, name_bound=1)
        assert np.max(np.abs(result.tail_mean() - optimum)) <= tol

    @pytest.mark.slow
    def test_selective_optimum_is_stationary(self, sign_model, sign_guide):
        grad = elbo_grad_fd(sign_model.command, sign_guide.command, {"θ1": 0.95, "θ2": 1.52}, MIDPOINT_GRID)
        assert np.linalg.norm(grad) < 0.02


class TestGradientAccuracy:
    """Test cases for estimator bias at full sample sizes."""

    @pytest.mark.slow
    def test_pathwise_estimator_bias(self, sign_model, sign_guide):
        out = mc_gradient(
            sign_model.command, sign_guide.command, default_plan(), THETA, 100_000, seed=11, name_bound=1
        )
        assert abs(out.grad[1] - PATHWISE_MEAN[1]) <= 3 * out.stderr[1]
        assert out.z_scores(TRUE_GRAD)[1] > 6

    @pytest.mark.slow
    def test_selective_estimator_matches_true_gradient(self, sign_model, sign_guide):
        plan = restrict(default_plan(), ["z1"])
        out = mc_gradient(sign_model.command, sign_guide.command, plan, THETA, 100_000, seed=12, name_bound=1)
        assert abs(out.grad[1] - TRUE_GRAD[1]) <= 3 * out.stderr[1]

    @pytest.mark.slow
    def test_quadrature_gradient_matches_closed_form(self, sign_model, sign_guide):
        grad = elbo_grad_fd(sign_model.command, sign_guide.command, THETA, MIDPOINT_GRID)
        np.testing.assert_allclose(grad, TRUE_GRAD, atol=1e-3)

    @pytest.mark.slow
    def test_score_function_estimator_matches_quadrature(self, sign_model, sign_guide):
        oracle = elbo_grad_fd(sign_model.command, sign_guide.command, THETA, MIDPOINT_GRID)
        out = mc_gradient(
            sign_model.command, sign_guide.command, empty_plan(), THETA, 200_000, seed=13, name_bound=1
        )
        assert np.all(out.z_scores(oracle) <= 4)

    @pytest.mark.slow
    def test_selective_estimator_is_unbiased_at_random_parameters(self, sign_model, sign_guide):
        plan = restrict(default_plan(), ["z1"])
        rng = make_rng(0, "random-theta")
        for i in range(5):
            theta = {"θ1": float(rng.uniform(-1.5, 1.5)), "θ2": float(rng.uniform(-1.5, 1.5))}
            oracle = elbo_grad_fd(sign_model.command, sign_guide.command, theta, MIDPOINT_GRID)
            out = mc_gradient(
                sign_model.command, sign_guide.command, plan, theta, 200_000, seed=20 + i, name_bound=1
            )
            assert np.all(out.z_scores(oracle) <= 4), (theta, out.grad, oracle)
