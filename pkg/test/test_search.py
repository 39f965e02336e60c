"""Unit tests for witness searches and the divergence family."""

import math

import numpy as np
import pytest

from polyconc.errors import ValidationFailure
from polyconc.model import ExpAffineWeight, PowerWeight, SearchSpace
from polyconc.search import (
    divergence_family,
    divergence_table,
    instance_weight,
    profile_constant,
    replay,
    root_pair_infimum,
    worst_ratio_search,
)


@pytest.mark.unit
class TestRootPairInfimum:
    """Tests for the elementary root-pair bound."""

    def test_bounded_below_by_half(self) -> None:
        """The infimum over a wide grid stays above 1/2."""
        report = root_pair_infimum(np.linspace(-10.0, 10.0, 401))
        assert 0.5 <= report.infimum <= 1.0
        assert report.grid_points == 401

    def test_single_point(self) -> None:
        """tau = sigma = 1 gives exactly 1."""
        report = root_pair_infimum([1.0])
        assert report.infimum == pytest.approx(1.0)
        assert report.argmin == (1.0, 1.0)

    def test_empty_grid(self) -> None:
        """An empty grid is rejected."""
        with pytest.raises(ValidationFailure):
            root_pair_infimum([])


@pytest.mark.unit
class TestInstances:
    """Tests for decoded search instances."""

    def test_power_instance_weight(self) -> None:
        """Power instances live on [s, s + 1]."""
        w = instance_weight({"family": "power", "n": 2, "s": 3.0})
        assert isinstance(w, PowerWeight)
        assert w.domain == (3.0, 4.0)

    def test_exponential_instance_weight(self) -> None:
        """Exponential instances use e^{-t} on [0, s]."""
        w = instance_weight({"family": "exp", "n": 0, "s": math.inf})
        assert isinstance(w, ExpAffineWeight)
        assert w.hi == math.inf

    def test_replay_matches_direct_check(self) -> None:
        """Replaying a witness recomputes its ratio."""
        witness = {"family": "power", "n": 0, "s": 0.0, "roots": [0.5], "eps": 0.25, "r": 0.0}
        # t - 1/2 on [0, 1] with eps = 1/4: (1/4)(1/4)(1/4) / ((1/2)(1/4))
        assert replay(witness) == pytest.approx(0.125)

    def test_divergence_family(self) -> None:
        """(t + 1)^2 (t - a) has the expected roots."""
        f = divergence_family(10.0, 3)
        assert f.degree == 3
        assert f(10.0) == pytest.approx(0.0)
        assert f(-1.0) == pytest.approx(0.0)


@pytest.mark.unit
class TestValidation:
    """Tests for search argument checks."""

    def test_budget_must_be_positive(self) -> None:
        """Zero starts are rejected."""
        with pytest.raises(ValidationFailure):
            worst_ratio_search(SearchSpace(degree=1), 0, 0)

    def test_root_box_below_truncation(self) -> None:
        """Roots beyond the truncation point are rejected for half-line weights."""
        with pytest.raises(ValidationFailure):
            worst_ratio_search(SearchSpace(degree=1, root_box=500.0), 1, 0)

    def test_divergence_values_must_increase(self) -> None:
        """Non-increasing a values are rejected."""
        with pytest.raises(ValidationFailure):
            divergence_table([100.0, 10.0])
        with pytest.raises(ValidationFailure):
            divergence_table([-1.0, 10.0])

    def test_profile_ranges(self) -> None:
        """Profile degrees and exponents are bounded."""
        with pytest.raises(ValidationFailure):
            profile_constant(7, 0, 1, 0)


@pytest.mark.unit
@pytest.mark.slow
class TestSearches:
    """Tests that run the optimizer."""

    def test_search_is_deterministic(self) -> None:
        """Equal (space, budget, seed) give equal results."""
        space = SearchSpace(degree=1, root_box=3.0)
        first = worst_ratio_search(space, 2, 7)
        second = worst_ratio_search(space, 2, 7)
        assert first.best_ratio == second.best_ratio
        assert first.trajectory == second.trajectory
        assert first.witness == second.witness

    def test_search_result_consistent(self) -> None:
        """The reported best ratio is finite, replayable and tops the trajectory."""
        result = worst_ratio_search(SearchSpace(degree=2, root_box=3.0), 3, 1)
        assert math.isfinite(result.best_ratio)
        assert result.best_ratio >= 0.0
        assert len(result.trajectory) == 3
        assert result.trajectory == sorted(result.trajectory)
        assert replay(result.witness) == pytest.approx(result.best_ratio)

    def test_power_family_search(self) -> None:
        """Power-weight searches place the domain inside the s range."""
        space = SearchSpace(degree=1, weight_family="power", power_n=2, s_range=(0.0, 4.0))
        result = worst_ratio_search(space, 2, 3)
        assert 0.0 <= result.witness["s"] <= 4.0
        assert math.isfinite(result.best_ratio)

    def test_degree_three_divergence_increases(self) -> None:
        """Best ratios of (t + 1)^2 (t - a) grow with a."""
        table = divergence_table([10.0, 100.0, 1000.0], degree=3)
        assert table.increasing
        assert [row.a for row in table.rows] == [10.0, 100.0, 1000.0]

    def test_divergence_truncation_insensitive(self) -> None:
        """Doubling a far truncation point barely moves the ratio."""
        near = divergence_table([10.0], degree=3, trunc=100.0)
        far = divergence_table([10.0], degree=3, trunc=200.0)
        assert far.rows[0].witness_ratio == pytest.approx(near.rows[0].witness_ratio, rel=1e-4)

    def test_degree_three_outgrows_degree_two(self) -> None:
        """Degree three grows more than fivefold while the degree-two control stays bounded."""
        a_values = [10.0, 100.0, 1000.0]
        cubic = [row.witness_ratio for row in divergence_table(a_values, degree=3).rows]
        quadratic = [row.witness_ratio for row in divergence_table(a_values, degree=2).rows]
        assert cubic[-1] > 5.0 * cubic[0]
        assert max(quadratic) <= 2.0 * min(quadratic)
        bound = worst_ratio_search(SearchSpace(degree=2), 16, 0).best_ratio
        assert max(quadratic) <= 2.0 * bound

    def test_quadratic_best_ratio_stable_across_seeds(self) -> None:
        """Five seeds at degree two agree on the best ratio within 10%."""
        space = SearchSpace(degree=2)
        best = [worst_ratio_search(space, 16, seed).best_ratio for seed in range(5)]
        assert all(math.isfinite(b) and b > 0.0 for b in best)
        assert (max(best) - min(best)) / max(best) <= 0.10
