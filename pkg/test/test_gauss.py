"""Unit tests for Gaussian and sampled concentration checks."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from polyconc.errors import DimensionMismatchError, PreconditionError, ValidationFailure
from polyconc.gauss import (
    QuadForm,
    check_cor28_mc,
    check_gauss_tail,
    check_product_smallball_mc,
    check_taylor_pathwise,
    dm_l2_gaussian,
    draw,
    gaussian_moments,
    quadform_stats,
    smallball_profile,
    smallball_scan,
)
from polyconc.model import BodySampler, Box, ChainConfig, ExponentialSampler, GaussianSampler
from polyconc.poly import parse_multipoly


@pytest.mark.unit
class TestQuadForm:
    """Tests for quadratic forms and their exact moments."""

    def test_stats(self) -> None:
        """Mean is tr A + c and variance 2 ||A||_F^2 + |b|^2."""
        q = QuadForm(np.diag([1.0, 2.0]), np.array([1.0, 0.0]), 3.0)
        mean, variance = quadform_stats(q)
        assert mean == pytest.approx(6.0)
        assert variance == pytest.approx(11.0)

    def test_asymmetric_rejected(self) -> None:
        """Only symmetric matrices define a quadratic form."""
        with pytest.raises(ValidationFailure):
            QuadForm(np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros(2))

    def test_shape_mismatch(self) -> None:
        """The linear part must match the matrix size."""
        with pytest.raises(DimensionMismatchError):
            QuadForm(np.eye(2), np.zeros(3))

    def test_multipoly_conversion(self) -> None:
        """Conversion to and from MultiPoly preserves values."""
        f = parse_multipoly("x1**2 + 3*x1*x2 - x2 + 2", 2)
        q = QuadForm.from_multipoly(f)
        pts = np.array([[0.5, -1.0], [2.0, 0.25], [-1.5, 3.0]])
        np.testing.assert_allclose(q.evaluate(pts), f.evaluate(pts))
        np.testing.assert_allclose(q.to_multipoly().evaluate(pts), f.evaluate(pts))

    def test_cubic_is_not_a_quadform(self) -> None:
        """Degree three is rejected."""
        with pytest.raises(ValidationFailure):
            QuadForm.from_multipoly(parse_multipoly("x1**3", 1))

    def test_moments_exact_for_degree_two(self) -> None:
        """Degree-two moments skip the pilot sample."""
        mean, sigma, exact, se = gaussian_moments(parse_multipoly("x1*x2", 2), 0)
        assert exact
        assert mean == pytest.approx(0.0)
        assert sigma == pytest.approx(1.0)
        assert se == 0.0


@pytest.mark.unit
class TestSampling:
    """Tests for seeded sample streams."""

    def test_draw_is_deterministic(self) -> None:
        """Equal seeds give equal samples; different seeds do not."""
        sampler = GaussianSampler(dim=2)
        a = draw(sampler, 500, 5)
        b = draw(sampler, 500, 5)
        c = draw(sampler, 500, 6)
        assert a.shape == (500, 2)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_exponential_sampler(self) -> None:
        """Exponential coordinates are positive with mean close to 1."""
        x = draw(ExponentialSampler(dim=3), 60_000, 1)
        assert np.all(x >= 0.0)
        assert np.mean(x) == pytest.approx(1.0, abs=0.02)

    def test_gaussian_moments_of_sample(self) -> None:
        """Gaussian samples have mean 0 and unit variance."""
        x = draw(GaussianSampler(dim=1), 100_000, 2)[:, 0]
        assert np.mean(x) == pytest.approx(0.0, abs=0.02)
        assert np.var(x) == pytest.approx(1.0, abs=0.02)


@pytest.mark.unit
class TestSmallBall:
    """Tests for the Gaussian small-ball scan."""

    def test_linear_form_matches_normal_cdf(self) -> None:
        """For f = x1 the small-ball frequency is 2 Phi(s) - 1."""
        scan = smallball_scan(parse_multipoly("x1", 1), [0.5, 0.1, 0.01], 200_000, 3)
        assert scan.sigma_exact
        for row in scan.rows:
            expected = 2.0 * norm.cdf(row.s) - 1.0
            assert abs(row.estimate.value - expected) <= 5.0 * row.estimate.stderr + 1e-4
            assert row.ratio == pytest.approx(row.estimate.value / row.profile)
        assert scan.min_ratio == min(r.ratio for r in scan.rows)

    def test_profile(self) -> None:
        """The profile is s |ln s|^{-d/2}."""
        assert smallball_profile(0.1, 2) == pytest.approx(0.1 / math.log(10.0))

    def test_scale_range(self) -> None:
        """Scales above 1/2 are rejected."""
        with pytest.raises(ValidationFailure):
            smallball_scan(parse_multipoly("x1", 1), [0.9], 100, 0)

    def test_constant_has_no_spread(self) -> None:
        """A constant polynomial fails the sigma precondition."""
        with pytest.raises(PreconditionError):
            smallball_scan(parse_multipoly("3 + 0*x1", 1), [0.1], 100, 0)

    def test_rotation_invariance(self) -> None:
        """Rotating a quadratic form leaves its small-ball frequencies unchanged."""
        rng = np.random.default_rng(11)
        M = rng.normal(size=(3, 3))
        q = QuadForm(M + M.T, rng.normal(size=3), 0.5)
        U, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        R = U.T @ q.A @ U
        rotated = QuadForm(0.5 * (R + R.T), U.T @ q.b, q.c)
        s_list = [0.5, 0.1, 0.01]
        base = smallball_scan(q, s_list, 200_000, 12)
        moved = smallball_scan(rotated, s_list, 200_000, 13)
        assert moved.sigma == pytest.approx(base.sigma, rel=1e-12)
        for a, b in zip(base.rows, moved.rows):
            combined = math.hypot(a.estimate.stderr, b.estimate.stderr)
            assert abs(a.estimate.value - b.estimate.value) <= 3.0 * combined


@pytest.mark.unit
class TestTail:
    """Tests for the Gaussian tail table."""

    def test_linear_tail_rows(self) -> None:
        """Common exceedances give rates; rare ones are flagged."""
        table = check_gauss_tail(parse_multipoly("x1", 1), [1.0, 2.0, 6.0], 20_000, 4)
        assert table.norm2 == pytest.approx(1.0)
        first, _, last = table.rows
        assert first.p_hat == pytest.approx(2.0 * norm.sf(1.0), abs=0.02)
        assert not first.flagged
        assert last.flagged
        assert last.p_hat == 0.0
        assert last.upper_bound == pytest.approx(1.0 / 20_000)
        assert table.r_hat is not None

    def test_tail_parameters_at_least_one(self) -> None:
        """t below 1 is rejected."""
        with pytest.raises(ValidationFailure):
            check_gauss_tail(parse_multipoly("x1", 1), [0.5], 100, 0)


@pytest.mark.unit
class TestDerivativeNorms:
    """Tests for Gaussian derivative norms."""

    def test_hessian_norm_is_constant(self) -> None:
        """The Hessian of x1^2 + x1 x2 has squared norm 6 everywhere."""
        report = dm_l2_gaussian(parse_multipoly("x1**2 + x1*x2", 2), 2, 2_000, 0)
        assert report.exact == pytest.approx(6.0)
        assert report.estimate.value == pytest.approx(6.0)
        assert report.sigma2 == pytest.approx(3.0)
        assert report.exact_ratio == pytest.approx(2.0)

    def test_gradient_norm(self) -> None:
        """E |grad f|^2 for x1^2 + x1 x2 is 6."""
        report = dm_l2_gaussian(parse_multipoly("x1**2 + x1*x2", 2), 1, 100_000, 1)
        assert report.exact == pytest.approx(6.0)
        assert abs(report.estimate.value - 6.0) <= 5.0 * report.estimate.stderr

    def test_order_range(self) -> None:
        """Orders above the degree are rejected."""
        with pytest.raises(ValidationFailure):
            dm_l2_gaussian(parse_multipoly("x1", 1), 2, 10, 0)


@pytest.mark.unit
class TestSampledChecks:
    """Tests for sampled inequality checks."""

    def test_cor28_linear(self) -> None:
        """For f = x1: eps / (P(|Z| < eps) E|Z|) within a few stderr."""
        eps = 0.1
        report = check_cor28_mc(parse_multipoly("x1", 1), GaussianSampler(dim=1), eps, 200_000, 5)
        expected = eps / ((2.0 * norm.cdf(eps) - 1.0) * math.sqrt(2.0 / math.pi))
        assert report.ratio_stderr is not None
        assert abs(report.witness_ratio - expected) <= 5.0 * report.ratio_stderr
        assert report.tag == "cor28"

    def test_cor28_joint_scaling(self) -> None:
        """Scaling f and eps together leaves the ratio unchanged."""
        sampler = GaussianSampler(dim=2)
        base = check_cor28_mc(parse_multipoly("x1*x2 + x1", 2), sampler, 0.1, 50_000, 8)
        scaled = check_cor28_mc(parse_multipoly("10*x1*x2 + 10*x1", 2), sampler, 1.0, 50_000, 8)
        assert scaled.witness_ratio == pytest.approx(base.witness_ratio, rel=1e-3)

    @pytest.mark.parametrize(
        "sampler",
        [
            GaussianSampler(dim=2),
            BodySampler(body=Box(lo=[0.0, 0.0], hi=[1.0, 1.0]), chain=ChainConfig(burn_in=400, thinning=2)),
        ],
    )
    @pytest.mark.parametrize("lam", [0.1, 10.0])
    def test_cor28_scaling_identity(self, sampler, lam: float) -> None:
        """(f, eps) -> (lam f, lam eps) keeps the ratio within 3 combined stderr."""
        f = parse_multipoly("x1*x2 + x1", 2)
        scaled_f = parse_multipoly(f"{lam}*x1*x2 + {lam}*x1", 2)
        eps = 0.05
        base = check_cor28_mc(f, sampler, eps, 20_000, 21)
        scaled = check_cor28_mc(scaled_f, sampler, lam * eps, 20_000, 21)
        assert base.ratio_stderr is not None and scaled.ratio_stderr is not None
        combined = math.hypot(base.ratio_stderr, scaled.ratio_stderr)
        assert abs(scaled.witness_ratio - base.witness_ratio) <= 3.0 * combined

    def test_cor28_eps_too_large(self) -> None:
        """eps beyond the mean deviation fails the precondition."""
        with pytest.raises(PreconditionError):
            check_cor28_mc(parse_multipoly("x1", 1), GaussianSampler(dim=1), 5.0, 1_000, 0)

    def test_cor28_dimension_mismatch(self) -> None:
        """Sampler and polynomial must share a dimension."""
        with pytest.raises(DimensionMismatchError):
            check_cor28_mc(parse_multipoly("x1", 1), GaussianSampler(dim=2), 0.1, 100, 0)

    def test_product_smallball_linear(self) -> None:
        """For f = x1 and eps = 1/2 the sampled ratio matches the normal law."""
        eps = 0.5
        report = check_product_smallball_mc(
            parse_multipoly("x1", 1), GaussianSampler(dim=1), eps, 0.0, 200_000, 6
        )
        tail = norm.sf(eps)
        expected = eps * tail * tail / ((1.0 - 2.0 * tail) * math.sqrt(2.0 / math.pi))
        assert report.ratio_stderr is not None
        assert abs(report.witness_ratio - expected) <= 5.0 * report.ratio_stderr

    def test_product_smallball_degree_limit(self) -> None:
        """The sampled check takes degree at most two."""
        with pytest.raises(ValidationFailure):
            check_product_smallball_mc(
                parse_multipoly("x1**3", 1), GaussianSampler(dim=1), 0.1, 0.0, 100, 0
            )

    def test_taylor_never_violated(self) -> None:
        """The finite Taylor expansion bounds every increment."""
        f = parse_multipoly("x1**3 - 2*x1*x2 + x2**2", 2)
        report = check_taylor_pathwise(f, 2_000, 7)
        assert report.extras["violations"] == 0
        assert report.lhs <= 1.0 + 1e-9
