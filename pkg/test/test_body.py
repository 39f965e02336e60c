"""Unit tests for convex bodies and hit-and-run sampling."""

import numpy as np
import pytest

from polyconc.body import (
    EmpiricalDist,
    chord,
    contains,
    halfspaces,
    hit_and_run,
    interior_point,
    pushforward_samples,
)
from polyconc.errors import DimensionMismatchError, PreconditionError, ValidationFailure
from polyconc.model import Ball, Box, ChainConfig, Polytope, Simplex
from polyconc.poly import parse_multipoly

UNIT_SQUARE = Box(lo=[0.0, 0.0], hi=[1.0, 1.0])
UNIT_DISC = Ball(center=[0.0, 0.0], radius=1.0)
TRIANGLE = Simplex(vertices=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
DIAMOND = Polytope(
    A=[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]], b=[1.0, 1.0, 1.0, 1.0]
)


@pytest.mark.unit
class TestGeometry:
    """Tests for membership, halfspaces and chords."""

    @pytest.mark.parametrize(
        "body, inside, outside",
        [
            (UNIT_SQUARE, [0.2, 0.9], [1.1, 0.5]),
            (UNIT_DISC, [0.6, -0.6], [0.8, 0.8]),
            (TRIANGLE, [0.2, 0.3], [0.6, 0.6]),
            (DIAMOND, [0.4, -0.4], [0.8, 0.4]),
        ],
    )
    def test_contains(self, body, inside, outside) -> None:
        """Single points and batches are classified alike."""
        assert contains(body, inside)
        assert not contains(body, outside)
        assert list(contains(body, np.array([inside, outside]))) == [True, False]

    def test_contains_dimension(self) -> None:
        """Points of the wrong dimension are rejected."""
        with pytest.raises(DimensionMismatchError):
            contains(UNIT_SQUARE, [0.5, 0.5, 0.5])

    def test_box_halfspaces(self) -> None:
        """A box is described by its 2n faces."""
        A, b = halfspaces(Box(lo=[-1.0, 2.0], hi=[1.0, 3.0]))
        assert A.shape == (4, 2)
        np.testing.assert_allclose(b, [1.0, 3.0, 1.0, -2.0])

    def test_simplex_halfspaces(self) -> None:
        """The standard triangle is x >= 0, y >= 0, x + y <= 1."""
        A, b = halfspaces(TRIANGLE)
        np.testing.assert_allclose(np.linalg.norm(A, axis=1), 1.0)
        pts = np.random.default_rng(0).uniform(-0.5, 1.5, size=(500, 2))
        by_faces = np.all(pts @ A.T <= b[None, :] + 1e-12, axis=1)
        np.testing.assert_array_equal(by_faces, contains(TRIANGLE, pts))

    def test_ball_has_no_halfspaces(self) -> None:
        """Balls are not polytopes."""
        with pytest.raises(ValidationFailure):
            halfspaces(UNIT_DISC)

    def test_interior_points(self) -> None:
        """Default starts sit strictly inside."""
        np.testing.assert_allclose(interior_point(UNIT_SQUARE), [0.5, 0.5])
        np.testing.assert_allclose(interior_point(TRIANGLE), [1.0 / 3.0, 1.0 / 3.0])
        np.testing.assert_allclose(interior_point(DIAMOND), [0.0, 0.0], atol=1e-9)

    def test_box_chord(self) -> None:
        """A horizontal chord of the unit square."""
        lo, hi = chord(UNIT_SQUARE, [0.5, 0.25], [1.0, 0.0])
        assert lo == pytest.approx(-0.5)
        assert hi == pytest.approx(0.5)

    def test_ball_chord(self) -> None:
        """A diameter of the unit disc."""
        s = 1.0 / np.sqrt(2.0)
        lo, hi = chord(UNIT_DISC, [0.0, 0.0], [s, s])
        assert lo == pytest.approx(-1.0)
        assert hi == pytest.approx(1.0)

    def test_simplex_chord(self) -> None:
        """The diagonal direction leaves the triangle through x + y = 1."""
        s = 1.0 / np.sqrt(2.0)
        lo, hi = chord(TRIANGLE, [0.25, 0.25], [s, s])
        assert hi == pytest.approx(0.25 * np.sqrt(2.0))
        assert lo == pytest.approx(-0.25 * np.sqrt(2.0))

    def test_chord_needs_unit_direction(self) -> None:
        """Directions are unit vectors."""
        with pytest.raises(ValidationFailure):
            chord(UNIT_SQUARE, [0.5, 0.5], [2.0, 0.0])

    def test_chord_needs_interior_start(self) -> None:
        """Boundary points are not interior."""
        with pytest.raises(PreconditionError):
            chord(UNIT_SQUARE, [0.0, 0.5], [1.0, 0.0])


@pytest.mark.unit
class TestHitAndRun:
    """Tests for the hit-and-run sampler."""

    def test_deterministic_and_inside(self) -> None:
        """Equal seeds give equal blocks, all inside the body."""
        cfg = ChainConfig(seed=11, n_chains=2)
        a = hit_and_run(TRIANGLE, 400, cfg)
        b = hit_and_run(TRIANGLE, 400, cfg)
        assert a.shape == (400, 2)
        np.testing.assert_array_equal(a, b)
        assert np.all(contains(TRIANGLE, a))

    def test_seeds_differ(self) -> None:
        """Different seeds give different blocks."""
        a = hit_and_run(UNIT_DISC, 50, ChainConfig(seed=1))
        b = hit_and_run(UNIT_DISC, 50, ChainConfig(seed=2))
        assert not np.array_equal(a, b)

    def test_uniform_interval(self) -> None:
        """On [0, 1] the chain is uniform: mean 1/2, variance 1/12."""
        x = hit_and_run(Box(lo=[0.0], hi=[1.0]), 20_000, ChainConfig(seed=3))[:, 0]
        assert np.mean(x) == pytest.approx(0.5, abs=0.01)
        assert np.var(x) == pytest.approx(1.0 / 12.0, abs=0.005)

    def test_uniform_disc_second_moment(self) -> None:
        """E|x|^2 over the unit disc is 1/2."""
        x = hit_and_run(UNIT_DISC, 20_000, ChainConfig(seed=4, n_chains=4))
        assert np.mean(np.sum(x * x, axis=1)) == pytest.approx(0.5, abs=0.03)
        assert np.all(contains(UNIT_DISC, x))

    def test_chain_counts_split(self) -> None:
        """Sample counts are split across chains and concatenated."""
        x = hit_and_run(UNIT_SQUARE, 10, ChainConfig(seed=0, n_chains=3, burn_in=5))
        assert x.shape == (10, 2)

    def test_bad_start(self) -> None:
        """A start outside the body is rejected."""
        with pytest.raises(PreconditionError):
            hit_and_run(UNIT_SQUARE, 10, ChainConfig(start=[2.0, 2.0]))

    def test_sample_count(self) -> None:
        """At least one sample is required."""
        with pytest.raises(ValidationFailure):
            hit_and_run(UNIT_SQUARE, 0, ChainConfig())


@pytest.mark.unit
class TestPushforward:
    """Tests for empirical pushforward distributions."""

    def test_values_sorted(self) -> None:
        """Pushforward values come back sorted."""
        block = np.array([[0.9, 0.1], [0.2, 0.2], [0.5, 0.7]])
        dist = pushforward_samples(parse_multipoly("x1 + x2", 2), block)
        np.testing.assert_allclose(dist.values, [0.4, 1.0, 1.2])
        assert dist.N == 3

    def test_empirical_cdf(self) -> None:
        """The empirical cdf counts values at or below y."""
        dist = EmpiricalDist(np.array([0.0, 1.0, 1.0, 2.0]))
        assert dist.cdf(1.0) == 0.75
        np.testing.assert_allclose(dist.cdf([-1.0, 0.5, 3.0]), [0.0, 0.25, 1.0])

    def test_unsorted_rejected(self) -> None:
        """Unsorted values are not an empirical distribution."""
        with pytest.raises(ValidationFailure):
            EmpiricalDist(np.array([2.0, 1.0]))

    def test_dimension_check(self) -> None:
        """Samples must match the polynomial dimension."""
        with pytest.raises(DimensionMismatchError):
            pushforward_samples(parse_multipoly("x1", 1), np.zeros((3, 2)))
