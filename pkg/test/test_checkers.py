"""Unit tests for the exact one-dimensional inequality checks."""

import math

import numpy as np
import pytest

from polyconc.checkers import (
    check_carbery_wright,
    check_khinchin,
    check_localized_smallball,
    check_mean_deviation,
    check_nsv_tail,
    check_product_smallball,
    check_restricted_mass,
    check_reverse_poincare,
    check_shifted_exp_smallball,
    check_sup_derivative,
    check_sup_l2,
    check_vanishing_L1,
    kf_level,
    make_report,
    mean_deviation_scan,
    norm0,
    poly_stats,
)
from polyconc.errors import (
    NumericFailure,
    PreconditionError,
    ValidationFailure,
    ZeroPolynomialError,
)
from polyconc.model import AffinePowerWeight, ExpAffineWeight, PowerWeight
from polyconc.poly import IntervalUnion, UniPoly, parse_multipoly
from polyconc.report import product_smallball_oracle
from polyconc.weights import canonicalize_instance


def random_weight_and_poly(rng: np.random.Generator):
    """An exponential or power weight and a polynomial of degree 1 to 6 with a root in the domain."""
    if rng.random() < 0.5:
        lo = float(rng.uniform(-1.0, 1.0))
        lam = float(rng.uniform(0.5, 3.0))
        if rng.random() < 0.5:
            w = ExpAffineWeight(c0=float(rng.uniform(-1.0, 1.0)), c1=-lam, lo=lo, hi=math.inf)
        else:
            w = ExpAffineWeight(c0=float(rng.uniform(-1.0, 1.0)), c1=float(rng.uniform(-3.0, 3.0)),
                                lo=lo, hi=lo + float(rng.uniform(0.5, 3.0)))
    else:
        lo = float(rng.uniform(0.0, 1.0))
        w = PowerWeight(n=int(rng.integers(0, 5)), lo=lo, hi=lo + float(rng.uniform(0.5, 2.0)))
    top = w.hi if math.isfinite(w.hi) else w.lo + 3.0
    d = int(rng.integers(1, 7))
    n_real = int(rng.integers(1, d + 1))
    roots = list(rng.uniform(w.lo, top, size=n_real))
    f = UniPoly.from_roots(roots, lead=float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)))
    if d > n_real:
        # positive quadratic factors (t - c)^2 + b^2 fill the remaining degree
        for _ in range((d - n_real) // 2):
            c, b = rng.uniform(w.lo, top), rng.uniform(0.1, 1.0)
            f = f * UniPoly((c * c + b * b, -2.0 * c, 1.0))
    return w, f


@pytest.mark.unit
class TestMakeReport:
    """Tests for witness ratio construction."""

    def test_plain_ratio(self) -> None:
        """The ratio is lhs / rhs_core and never understates lhs."""
        report = make_report(1.0, 3.0, "demo", {})
        assert report.witness_ratio == pytest.approx(1.0 / 3.0)
        assert report.lhs <= report.witness_ratio * report.rhs_core

    def test_zero_over_zero(self) -> None:
        """0 / 0 is reported as ratio 0."""
        report = make_report(0.0, 0.0, "demo", {})
        assert report.witness_ratio == 0.0
        assert not report.infinite

    def test_positive_over_zero(self) -> None:
        """A positive lhs against a null rhs is infinite."""
        report = make_report(0.5, 0.0, "demo", {})
        assert report.infinite
        assert math.isinf(report.witness_ratio)

    def test_log_values_take_precedence(self) -> None:
        """Log sides give a ratio even when both sides underflow."""
        report = make_report(0.0, 0.0, "demo", {}, log_lhs=-900.0, log_rhs_core=-901.0)
        assert report.witness_ratio == pytest.approx(math.e)

    def test_nan_side_is_a_numeric_failure(self) -> None:
        """A NaN side cannot be reported."""
        with pytest.raises(NumericFailure):
            make_report(1.0, math.nan, "demo", {})
        with pytest.raises(NumericFailure):
            make_report(0.0, 0.0, "demo", {}, log_lhs=-1.0, log_rhs_core=math.nan)

    def test_overflowing_sides(self) -> None:
        """Infinite sides need their logs to give a ratio."""
        with pytest.raises(NumericFailure):
            make_report(math.inf, math.inf, "demo", {})
        report = make_report(math.inf, math.inf, "demo", {}, log_lhs=1000.0, log_rhs_core=999.0)
        assert report.witness_ratio == pytest.approx(math.e)


@pytest.mark.unit
class TestStatistics:
    """Tests for norms and level statistics."""

    def test_geometric_mean_of_identity(self, uniform_weight: ExpAffineWeight) -> None:
        """exp(E ln t) on [0, 1] is 1/e."""
        assert norm0(UniPoly.identity(), uniform_weight) == pytest.approx(math.exp(-1.0), rel=1e-8)

    def test_geometric_mean_with_complex_roots(self, symmetric_uniform) -> None:
        """Factors without real roots are integrated directly."""
        f = UniPoly((1.0, 0.0, 1.0))
        # int_{-1}^{1} ln(1 + t^2) dt / 2 = ln 2 - 2 + pi/2
        expected = math.exp(math.log(2.0) - 2.0 + math.pi / 2.0)
        assert norm0(f, symmetric_uniform) == pytest.approx(expected, rel=1e-8)

    def test_kf_of_identity(self, uniform_weight: ExpAffineWeight) -> None:
        """P(t >= k) = 1 - k reaches 1/e at k = 1 - 1/e."""
        assert kf_level(UniPoly.identity(), uniform_weight) == pytest.approx(
            1.0 - math.exp(-1.0), rel=1e-8
        )

    @pytest.mark.parametrize(
        "weight",
        [
            ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=math.inf),
            PowerWeight(n=2, lo=0.0, hi=1.0),
            AffinePowerWeight(alpha=2.0, beta=1.0, n=3, lo=0.0, hi=1.0),
        ],
    )
    def test_norm_ordering(self, weight) -> None:
        """Norms grow with the exponent: ||f||_0 <= ||f||_1 <= ||f||_2."""
        s = poly_stats(UniPoly.from_roots([0.3, 0.8, 2.0]), weight)
        assert 0.0 < s.norm0 <= s.norm1 * (1 + 1e-9)
        assert s.norm1 <= s.norm2 * (1 + 1e-9)
        assert s.alpha <= s.sigma * (1 + 1e-9)
        assert s.kf > 0.0

    @pytest.mark.slow
    def test_norm_ordering_on_random_instances(self) -> None:
        """||f||_0 <= ||f||_1 <= ||f||_2 on 1000 random weights and polynomials."""
        rng = np.random.default_rng(20240614)
        for _ in range(1000):
            w, f = random_weight_and_poly(rng)
            s = poly_stats(f, w)
            assert 0.0 < s.norm0 <= s.norm1 * (1 + 1e-9)
            assert s.norm1 <= s.norm2 * (1 + 1e-9)


@pytest.mark.unit
class TestProductSmallBall:
    """Tests for the product small-ball check."""

    def test_linear_on_symmetric_interval(self, symmetric_uniform) -> None:
        """f(t) = t with eps = 1/2 on [-1, 1] gives ratio 1/8."""
        report = check_product_smallball(UniPoly.identity(), symmetric_uniform, 0.5)
        assert report.lhs == pytest.approx(0.125)
        assert report.rhs_core == pytest.approx(1.0)
        assert report.witness_ratio == pytest.approx(0.125)
        assert report.tag == "product-smallball"

    def test_one_sided_instance_has_zero_ratio(self, uniform_weight) -> None:
        """A positive polynomial never reaches -eps."""
        report = check_product_smallball(UniPoly((1.0, 1.0)), uniform_weight, 0.1)
        assert report.witness_ratio == 0.0

    def test_eps_must_be_positive(self, uniform_weight) -> None:
        """Non-positive eps is rejected."""
        with pytest.raises(ValidationFailure):
            check_product_smallball(UniPoly.identity(), uniform_weight, -1.0)

    def test_matches_trapezoid_oracle(self, exp_weight) -> None:
        """The exact ratio agrees with a dense trapezoid evaluation."""
        f = UniPoly.from_roots([0.2, 0.7])
        report = check_product_smallball(f, exp_weight, 0.05)
        oracle = product_smallball_oracle(f, exp_weight, 0.05, panels=200_000)
        assert report.witness_ratio == pytest.approx(oracle["witness_ratio"], rel=1e-2)

    @pytest.mark.parametrize(
        "weight",
        [
            ExpAffineWeight(c0=3.0, c1=-2.0, lo=1.0, hi=4.0),
            ExpAffineWeight(c0=1.0, c1=0.7, lo=-1.0, hi=2.0),
            AffinePowerWeight(alpha=2.0, beta=1.0, n=3, lo=0.0, hi=1.0),
        ],
    )
    def test_invariant_under_canonicalization(self, weight) -> None:
        """Affine substitution leaves the witness ratio unchanged."""
        f = UniPoly.from_roots([0.5, 1.5, 3.0])
        eps = 0.3
        direct = check_product_smallball(f, weight, eps)
        g, canon = canonicalize_instance(f, weight)
        moved = check_product_smallball(g, canon.weight, eps)
        assert moved.witness_ratio == pytest.approx(direct.witness_ratio, rel=1e-9)

    def test_shifted_requires_exponential(self, power_weight) -> None:
        """The shifted check only accepts exponential weights."""
        with pytest.raises(ValidationFailure):
            check_shifted_exp_smallball(UniPoly.identity(), power_weight, 0.1, 0.5)

    def test_shifted_tag(self, exp_weight) -> None:
        """The shifted check reports its own tag and shift."""
        report = check_shifted_exp_smallball(UniPoly.from_roots([1.0]), exp_weight, 0.1, 0.5)
        assert report.tag == "shifted-exp-smallball"
        assert report.instance["r"] == 0.5

    def test_localized_along_segment(self, uniform_weight) -> None:
        """x1 along [(-1, 0), (1, 0)] is 2t - 1, an affine copy of the linear case."""
        f = parse_multipoly("x1", 2)
        report = check_localized_smallball(f, [-1.0, 0.0], [1.0, 0.0], uniform_weight, 0.5)
        assert report.witness_ratio == pytest.approx(0.125)
        assert report.tag == "localized-smallball"
        assert report.instance["x"] == [-1.0, 0.0]

    def test_steep_exponential_weight(self) -> None:
        """Sides beyond the float range keep their logs; the ratio ignores the constant c0."""
        f = UniPoly.from_roots([0.5])
        steep = check_product_smallball(f, ExpAffineWeight(c0=0.0, c1=800.0, lo=0.0, hi=1.0), 0.25)
        shifted = check_product_smallball(f, ExpAffineWeight(c0=-800.0, c1=800.0, lo=0.0, hi=1.0), 0.25)
        assert math.isinf(steep.lhs) and math.isinf(steep.rhs_core)
        assert steep.log_lhs is not None and math.isfinite(steep.log_lhs)
        assert steep.witness_ratio == pytest.approx(shifted.witness_ratio, rel=1e-9)
        assert steep.log_lhs - steep.log_rhs_core == pytest.approx(
            shifted.log_lhs - shifted.log_rhs_core, abs=1e-9
        )

    def test_joint_scaling(self) -> None:
        """Scaling f, eps and r by one factor leaves the ratio unchanged to 1e-10."""
        rng = np.random.default_rng(20240615)
        for _ in range(200):
            w, f = random_weight_and_poly(rng)
            eps = float(rng.uniform(0.01, 0.3))
            r = float(rng.uniform(-0.5, 0.5))
            base = check_product_smallball(f, w, eps, r)
            for lam in (0.1, 10.0):
                scaled = check_product_smallball(lam * f, w, lam * eps, lam * r)
                assert scaled.witness_ratio == pytest.approx(base.witness_ratio, rel=1e-10)


@pytest.mark.unit
class TestOtherChecks:
    """Tests for the remaining one-dimensional checks."""

    def test_carbery_wright_linear(self, uniform_weight) -> None:
        """For t on [0, 1]: ||t||_1 P(t < alpha) = alpha / 2."""
        report = check_carbery_wright(UniPoly.identity(), uniform_weight, 0.1)
        assert report.witness_ratio == pytest.approx(0.5)

    def test_nsv_tail_bounded(self, exp_weight) -> None:
        """The normalized tail probability stays below e^{-t}."""
        for t in (1.0, 2.0, 4.0):
            report = check_nsv_tail(UniPoly.from_roots([0.5, 2.0]), exp_weight, t)
            assert report.witness_ratio <= 1.0

    def test_nsv_rejects_zero_polynomial(self, exp_weight) -> None:
        """k(f) vanishes for the zero polynomial."""
        with pytest.raises(ZeroPolynomialError):
            check_nsv_tail(UniPoly(), exp_weight, 1.0)

    @pytest.mark.slow
    def test_nsv_tail_on_random_instances(self) -> None:
        """Tail ratios stay at most 1 and U = domain gives ratio 1 on 1000 instances."""
        rng = np.random.default_rng(20240616)
        for _ in range(1000):
            w, f = random_weight_and_poly(rng)
            t = float(rng.uniform(1.0, 5.0))
            assert check_nsv_tail(f, w, t).witness_ratio <= 1.0
            whole = check_restricted_mass(f, w, IntervalUnion.of((w.lo, w.hi)))
            assert whole.witness_ratio == pytest.approx(1.0, rel=1e-9)

    def test_restricted_mass_on_whole_domain(self, exp_weight, affine_weight) -> None:
        """U equal to the domain makes both sides equal."""
        f = UniPoly.from_roots([0.5, 1.5])
        for w in (exp_weight, affine_weight):
            U = IntervalUnion.of((w.lo, w.hi))
            report = check_restricted_mass(f, w, U)
            assert report.witness_ratio == pytest.approx(1.0, rel=1e-9)

    def test_restricted_mass_empty_set(self, uniform_weight) -> None:
        """An empty U gives a zero left side."""
        report = check_restricted_mass(UniPoly.identity(), uniform_weight, IntervalUnion())
        assert report.witness_ratio == 0.0

    def test_khinchin_linear(self, uniform_weight) -> None:
        """For t on [0, 1]: ||t||_2 = 1/sqrt 3 and ||t||_0 = 1/e."""
        report = check_khinchin(UniPoly.identity(), uniform_weight, 2.0)
        assert report.extras["norm_q"] == pytest.approx(1.0 / math.sqrt(3.0))
        assert report.witness_ratio == pytest.approx(math.e / (2.0 * math.sqrt(3.0)), rel=1e-7)
        assert [s.tag for s in report.sub_reports] == ["khinchin-norm0", "khinchin-norm1"]

    def test_khinchin_fractional_q(self, uniform_weight) -> None:
        """Non-integer q goes through quadrature: ||t||_{1.5} = (1/2.5)^{1/1.5}."""
        report = check_khinchin(UniPoly.identity(), uniform_weight, 1.5)
        assert report.extras["norm_q"] == pytest.approx((1.0 / 2.5) ** (1.0 / 1.5), rel=1e-8)

    def test_reverse_poincare_linear(self, uniform_weight) -> None:
        """sigma(w) ||f'||_2 / ||f||_2 for f = t on [0, 1] is 1/2."""
        report = check_reverse_poincare(UniPoly.identity(), uniform_weight)
        assert report.witness_ratio == pytest.approx(0.5)

    def test_mean_deviation_linear(self, uniform_weight) -> None:
        """Half the mass of t on [0, 1] lies above the mean."""
        report = check_mean_deviation(UniPoly.identity(), uniform_weight, 0.0)
        assert report.lhs == pytest.approx(0.5)
        assert report.extras["prob_below_mean"] == pytest.approx(0.5)
        assert report.extras["alpha_f"] == pytest.approx(0.25)

    def test_mean_deviation_scan_decreasing(self, exp_weight) -> None:
        """Raising the threshold lowers the probability."""
        reports = mean_deviation_scan(UniPoly.from_roots([1.0, 3.0]), exp_weight)
        values = [r.lhs for r in reports]
        assert values == sorted(values, reverse=True)
        assert all(r.witness_ratio <= 1.0 for r in reports)

    def test_mean_deviation_constant(self, uniform_weight) -> None:
        """A constant polynomial has no spread."""
        with pytest.raises(PreconditionError):
            check_mean_deviation(UniPoly((2.0,)), uniform_weight, 0.0)

    def test_vanishing_l1(self) -> None:
        """A root inside the domain keeps the ratio finite."""
        w = PowerWeight(n=1, lo=0.0, hi=1.0)
        report = check_vanishing_L1(UniPoly.from_roots([0.5]), w, 0.3)
        assert math.isfinite(report.witness_ratio)
        assert report.witness_ratio > 0.0

    def test_vanishing_l1_preconditions(self, exp_weight) -> None:
        """The check needs a power weight and a root in the domain."""
        with pytest.raises(ValidationFailure):
            check_vanishing_L1(UniPoly.from_roots([0.5]), exp_weight, 0.3)
        with pytest.raises(PreconditionError):
            check_vanishing_L1(UniPoly((1.0, 1.0)), PowerWeight(n=1, lo=0.0, hi=1.0), 0.3)

    def test_sup_derivative_linear(self, uniform_weight) -> None:
        """sup |t - 1/2| on [0, 1] is half of sup |f'|."""
        report = check_sup_derivative(UniPoly.from_roots([0.5]), uniform_weight)
        assert report.witness_ratio == pytest.approx(0.5)

    def test_sup_l2_linear(self) -> None:
        """sup t / ||t||_2 on [0, 1] with n = 0 is sqrt 3."""
        report = check_sup_l2(UniPoly.identity(), PowerWeight(n=0, lo=0.0, hi=1.0))
        assert report.extras["factor"] == 1.0
        assert report.witness_ratio == pytest.approx(math.sqrt(3.0))
