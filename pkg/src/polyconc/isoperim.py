#!/usr/bin/env python3
"""
Isoperimetry of pushforward measures.

A pushforward ``mu_f`` is the law of ``f(X)`` for ``X`` drawn from a weight on
the line or uniformly from a convex body. It is represented either by a
sorted sample (``EmpiricalDist``), by an exact CDF closure
(``ExactPushforward``) or, for the perimeter and spectral computations, by a
piecewise linear CDF on a grid (``GridDist``).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .body import AnyBody, EmpiricalDist, hit_and_run
from .checkers import make_report
from .errors import (
    DegenerateDistributionError,
    DivergentWeightError,
    NumericFailure,
    ValidationFailure,
)
from .model import ChainConfig, CheegerReport, CheegerRow, IneqReport, PoincareReport
from .poly import Interval, IntervalUnion, MultiPoly, UniPoly, derivative_uni, eval_uni, level_set, real_roots
from .weights import (
    AnyWeight,
    log_integrate_abs_poly,
    log_integrate_indicator,
    log_mass,
    normalized_integral,
    restrict_weight,
    truncation_point,
)

logger = logging.getLogger(__name__)

__all__ = [
    "EmpiricalDist",
    "GridDist",
    "ThreeSets",
    "ExactPushforward",
    "exact_pushforward_cdf",
    "to_grid",
    "nu_perimeter",
    "richardson_perimeter",
    "cheeger_profile",
    "poincare_gap",
    "three_set_check",
    "three_set_exact",
    "gap_sum_identity",
]

MIN_GRID_CELLS = 100
MIN_CHAIN_SAMPLES = 10_000
PROFILE_FLOOR = 1e-8
RICHARDSON_STEPS = (8, 4, 2, 1)
TWO_INTERVAL_POINTS = 60
DEFAULT_EXACT_CELLS = 1000


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridDist:
    """
    Piecewise linear CDF through ``(grid[i], cdf_values[i])``.

    The grid is strictly increasing and the CDF runs from 0 to 1, so each
    cell carries a constant density ``dF / dy``.
    """

    grid: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.grid, dtype=float).ravel()
        F = np.asarray(self.cdf_values, dtype=float).ravel()
        if y.size != F.size or y.size < 2:
            raise ValidationFailure("grid and cdf values need the same length >= 2")
        if not np.all(np.isfinite(y)) or np.any(np.diff(y) <= 0):
            raise ValidationFailure("grid must be finite and strictly increasing")
        if np.any(np.diff(F) < 0) or F[0] != 0.0 or F[-1] != 1.0:
            raise ValidationFailure("cdf values must rise from 0 to 1")
        object.__setattr__(self, "grid", y)
        object.__setattr__(self, "cdf_values", F)

    @property
    def M(self) -> int:
        return int(self.grid.size - 1)

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def spacing(self) -> float:
        """Mean cell width."""
        return (self.span[1] - self.span[0]) / self.M

    @property
    def cell_mass(self) -> np.ndarray:
        return np.diff(self.cdf_values)

    @property
    def density(self) -> np.ndarray:
        return self.cell_mass / np.diff(self.grid)

    def cdf(self, y: Any) -> Any:
        out = np.interp(np.asarray(y, dtype=float), self.grid, self.cdf_values, left=0.0, right=1.0)
        return float(out) if np.ndim(out) == 0 else out

    def mass(self, A: IntervalUnion) -> float:
        total = 0.0
        for iv in A:
            upper = 1.0 if math.isinf(iv.hi) else self.cdf(iv.hi)
            lower = 0.0 if math.isinf(iv.lo) else self.cdf(iv.lo)
            total += upper - lower
        return min(max(total, 0.0), 1.0)

    def mean(self) -> float:
        mids = 0.5 * (self.grid[:-1] + self.grid[1:])
        return float(np.sum(self.cell_mass * mids))

    def mean_abs_deviation(self) -> float:
        m = self.mean()
        a, b = self.grid[:-1], self.grid[1:]
        mass = self.cell_mass
        mids = 0.5 * (a + b)
        inside = (a < m) & (m < b)
        out = np.where(a >= m, mass * (mids - m), mass * (m - mids))
        p = self.density
        out = np.where(inside, 0.5 * p * ((m - a) ** 2 + (b - m) ** 2), out)
        return float(np.sum(out))


@dataclass(frozen=True)
class ThreeSets:
    """Closed sets ``J1``, ``J3`` at distance ``eps`` and the gap ``J2`` between them."""

    J1: IntervalUnion
    J3: IntervalUnion
    eps: float

    def __post_init__(self) -> None:
        if self.J1.is_empty or self.J3.is_empty:
            raise ValidationFailure("J1 and J3 must be non-empty")
        gap = self.J1.distance_to(self.J3)
        if not gap > 0:
            raise ValidationFailure("J1 and J3 must be disjoint with positive distance")
        if abs(gap - self.eps) > 1e-12 * (1.0 + gap):
            raise ValidationFailure(f"eps {self.eps} differs from the distance {gap}")

    @classmethod
    def build(cls, J1: IntervalUnion, J3: IntervalUnion) -> "ThreeSets":
        return cls(J1=J1, J3=J3, eps=J1.distance_to(J3))

    @property
    def J2(self) -> IntervalUnion:
        return self.J1.union(self.J3).complement()

    def swapped(self) -> "ThreeSets":
        return ThreeSets(J1=self.J3, J3=self.J1, eps=self.eps)

    def to_dict(self) -> dict:
        return {"J1": self.J1.to_list(), "J3": self.J3.to_list(), "eps": self.eps}


@dataclass(frozen=True)
class ExactPushforward:
    """Law of ``f(T)`` when ``T`` follows the normalized weight ``w``."""

    f: UniPoly
    w: AnyWeight

    def __post_init__(self) -> None:
        if not math.isfinite(log_mass(self.w)):
            raise DivergentWeightError("pushforward of a weight with infinite or zero mass")

    def cdf(self, y: float) -> float:
        below = level_set(self.f, float(y), (self.w.lo, self.w.hi), above=False)
        if below.is_empty:
            return 0.0
        value = math.exp(log_integrate_indicator(self.w, below) - log_mass(self.w))
        return min(value, 1.0)

    def probability(self, A: IntervalUnion) -> float:
        """``mu_f(A)``; the law has no atoms unless ``f`` is constant."""
        total = 0.0
        for iv in A:
            upper = 1.0 if math.isinf(iv.hi) else self.cdf(iv.hi)
            lower = 0.0 if math.isinf(iv.lo) else self.cdf(iv.lo)
            total += upper - lower
        return min(max(total, 0.0), 1.0)

    def truncated(self) -> "ExactPushforward":
        """Same law with an unbounded weight cut at its truncation point."""
        if math.isfinite(self.w.hi):
            return self
        cut = truncation_point(self.w, max(self.f.degree, 1))
        piece = restrict_weight(self.w, self.w.lo, cut)
        if piece is None:
            raise DegenerateDistributionError("truncated weight is empty")
        return ExactPushforward(self.f, piece)

    @property
    def support(self) -> Tuple[float, float]:
        """Range of ``f`` over the (truncated) domain."""
        w = self.truncated().w
        points = [w.lo, w.hi]
        if self.f.degree >= 2:
            points.extend(real_roots(derivative_uni(self.f), (w.lo, w.hi)).roots)
        values = [eval_uni(self.f, x) for x in points]
        return float(min(values)), float(max(values))


def exact_pushforward_cdf(f: UniPoly, w: AnyWeight, y: float) -> float:
    """``w({f <= y}) / w(R)`` from the real roots of ``f - y``."""
    return ExactPushforward(f, w).cdf(y)


def to_grid(dist: Union[EmpiricalDist, ExactPushforward], M: Optional[int] = None) -> GridDist:
    """
    Grid form of a pushforward.

    Samples are gridded at ``M + 1`` quantile points (``M`` defaults to
    ``ceil(N^{1/3})``); an exact pushforward at ``M + 1`` equally spaced
    points of its support (``M`` defaults to 1000).

    Raises:
        DegenerateDistributionError: For a single-atom distribution.
    """
    if M is not None and M < 2:
        raise ValidationFailure(f"grid needs M >= 2, got {M}")
    if isinstance(dist, EmpiricalDist):
        values = dist.values
        if values[0] == values[-1]:
            raise DegenerateDistributionError("sample distribution is a single atom")
        cells = M if M is not None else max(2, math.ceil(dist.N ** (1.0 / 3.0)))
        grid = np.unique(np.quantile(values, np.linspace(0.0, 1.0, cells + 1)))
        F = np.asarray(dist.cdf(grid), dtype=float)
    else:
        exact = dist.truncated()
        lo, hi = exact.support
        if not hi > lo:
            raise DegenerateDistributionError("pushforward of a constant polynomial")
        cells = M if M is not None else DEFAULT_EXACT_CELLS
        grid = np.linspace(lo, hi, cells + 1)
        F = np.array([exact.cdf(y) for y in grid[1:-1]])
        F = np.concatenate([[0.0], F, [1.0]])
    if grid.size < 2:
        raise DegenerateDistributionError("grid collapsed to a single point")
    F[0], F[-1] = 0.0, 1.0
    F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
    return GridDist(grid, F)


# ---------------------------------------------------------------------------
# perimeter
# ---------------------------------------------------------------------------


def _check_h(g: GridDist, h: float) -> None:
    if not h > 0 or h < 2.0 * g.spacing * (1.0 - 1e-12):
        raise ValidationFailure(f"h = {h} is below two grid spacings ({2.0 * g.spacing})")


def nu_perimeter(g: GridDist, A: IntervalUnion, h: float) -> float:
    """
    One-sided quotient ``(nu(A + (-h, h)) - nu(A)) / h``.

    Raises:
        ValidationFailure: If ``h`` is below two grid spacings or a finite end
            of ``A`` lies outside the grid span.
    """
    _check_h(g, h)
    lo, hi = g.span
    for iv in A:
        for end in (iv.lo, iv.hi):
            if math.isfinite(end) and not lo <= end <= hi:
                raise ValidationFailure(f"set end {end} lies outside the grid span [{lo}, {hi}]")
    return (g.mass(A.enlarge(h)) - g.mass(A)) / h


def richardson_perimeter(
    g: GridDist, A: IntervalUnion, h0: Optional[float] = None
) -> Tuple[float, List[Tuple[float, float]]]:
    """
    Perimeter over ``h in {8, 4, 2, 1} h0`` with one Richardson step.

    ``h0`` defaults to two grid spacings.

    Returns:
        The extrapolated value ``2 E(h0) - E(2 h0)`` (clipped at 0) and the
        ``(h, E(h))`` sequence.
    """
    base = h0 if h0 is not None else 2.0 * g.spacing
    sequence = [(k * base, nu_perimeter(g, A, k * base)) for k in RICHARDSON_STEPS]
    value = 2.0 * sequence[-1][1] - sequence[-2][1]
    return max(value, 0.0), sequence


def _halfline_perimeter(g: GridDist, y: np.ndarray, h: float) -> np.ndarray:
    Fy = g.cdf(y)
    e1 = (g.cdf(y + h) - Fy) / h
    e2 = (g.cdf(y + 2.0 * h) - Fy) / (2.0 * h)
    return np.maximum(2.0 * e1 - e2, 0.0)


def _lower_halfline_perimeter(g: GridDist, y: np.ndarray, h: float) -> np.ndarray:
    Fy = g.cdf(y)
    e1 = (Fy - g.cdf(y - h)) / h
    e2 = (Fy - g.cdf(y - 2.0 * h)) / (2.0 * h)
    return np.maximum(2.0 * e1 - e2, 0.0)


def cheeger_profile(g: GridDist, alpha_f: float) -> CheegerReport:
    """
    Half-line Cheeger witness ``inf nu+(A) alpha_f / (nu(A) nu(R \\ A))``.

    ``A`` ranges over the half-lines ``(-inf, y_i]``; points with
    ``F (1 - F) < 1e-8`` are skipped. A coarse scan of the two-interval sets
    ``(-inf, a] u [b, inf)`` is reported alongside.
    """
    if g.M < MIN_GRID_CELLS:
        raise ValidationFailure(f"Cheeger profile needs M >= {MIN_GRID_CELLS}, got {g.M}")
    if not alpha_f > 0:
        raise ValidationFailure("alpha_f must be positive")
    h0 = 2.0 * g.spacing
    y = g.grid[1:-1]
    F = g.cdf_values[1:-1]
    spread = F * (1.0 - F)
    keep = spread >= PROFILE_FLOOR
    if not np.any(keep):
        raise DegenerateDistributionError("no grid point with F (1 - F) above the floor")
    y, F, spread = y[keep], F[keep], spread[keep]
    perimeter = _halfline_perimeter(g, y, h0)
    profile = perimeter * alpha_f / spread
    k = int(np.argmin(profile))
    rows = [
        CheegerRow(y=float(a), cdf=float(b), perimeter=float(c), profile=float(d))
        for a, b, c, d in zip(y, F, perimeter, profile)
    ]

    # two-interval complements on a coarse sub-grid
    idx = np.unique(np.linspace(1, g.M - 1, min(TWO_INTERVAL_POINTS, g.M - 1)).astype(int))
    pts = g.grid[idx]
    Fp = g.cdf_values[idx]
    right = _halfline_perimeter(g, pts, h0)
    left = _lower_halfline_perimeter(g, pts, h0)
    best: Optional[float] = None
    best_pair: Optional[List[float]] = None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if pts[j] - pts[i] <= 4.0 * h0:
                continue
            inside = Fp[i] + 1.0 - Fp[j]
            spread_ab = inside * (Fp[j] - Fp[i])
            if spread_ab < PROFILE_FLOOR:
                continue
            value = (right[i] + left[j]) * alpha_f / spread_ab
            if best is None or value < best:
                best, best_pair = float(value), [float(pts[i]), float(pts[j])]
    logger.debug("cheeger: half-line inf %.6g at y=%.6g, two-interval inf %s",
                 profile[k], y[k], best)
    return CheegerReport(
        alpha_f=alpha_f,
        delta_hat=float(profile[k]),
        argmin_y=float(y[k]),
        two_interval_delta=best,
        two_interval_argmin=best_pair,
        rows=rows,
    )


def poincare_gap(g: GridDist) -> PoincareReport:
    """
    Smallest nonzero eigenvalue of the weighted Neumann operator
    ``-(p u')' / p`` discretized by cell-centered finite volumes.

    Raises:
        DegenerateDistributionError: If a grid cell carries no mass.
    """
    if g.M < MIN_GRID_CELLS:
        raise ValidationFailure(f"spectral gap needs M >= {MIN_GRID_CELLS}, got {g.M}")
    mass = g.cell_mass
    if np.any(mass <= 0):
        raise DegenerateDistributionError("grid has a zero-mass cell")
    width = np.diff(g.grid)
    # face conductance: dual-cell density over the center distance
    k = 2.0 * (mass[:-1] + mass[1:]) / (width[:-1] + width[1:]) ** 2
    diag = np.zeros_like(mass)
    diag[:-1] += k
    diag[1:] += k
    diag /= mass
    off = -k / np.sqrt(mass[:-1] * mass[1:])
    try:
        eigenvalues = eigh_tridiagonal(
            diag, off, eigvals_only=True, select="i", select_range=(0, 1), lapack_driver="stebz"
        )
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"tridiagonal eigen-solver failed: {exc}") from exc
    lambda1 = float(eigenvalues[1])
    if not lambda1 > 0:
        raise NumericFailure(f"spectral gap is not positive: {lambda1}")
    best = 1.0 / math.sqrt(lambda1)
    alpha = g.mean_abs_deviation()
    return PoincareReport(
        lambda1=lambda1, best_constant=best, alpha_f=alpha, ratio=best / alpha, cells=g.M
    )


# ---------------------------------------------------------------------------
# three-set inequality
# ---------------------------------------------------------------------------


def _log_se(influence: np.ndarray) -> float:
    return float(np.std(influence, ddof=1) / math.sqrt(len(influence)))


def three_set_check(
    K: AnyBody,
    f: MultiPoly,
    sets: ThreeSets,
    N: int,
    cfg: ChainConfig,
    block: Optional[np.ndarray] = None,
) -> IneqReport:
    """
    Monte Carlo three-set check on a convex body.

    ``lhs = eps p1 p3`` and ``rhs_core = p2 alpha_f``, where ``p_i`` is the
    frequency of ``f`` in ``J_i`` and ``alpha_f`` the mean absolute deviation,
    all from one hit-and-run block (``block`` when supplied). Stderrs follow
    the delta method on the log ratio and treat the chain output as
    independent draws.
    """
    if N < MIN_CHAIN_SAMPLES:
        raise ValidationFailure(f"three-set check needs N >= {MIN_CHAIN_SAMPLES}, got {N}")
    if f.dim != K.dim:
        raise ValidationFailure(f"polynomial dimension {f.dim} does not match body dimension {K.dim}")
    if block is None:
        block = hit_and_run(K, N, cfg)
    elif len(block) != N:
        raise ValidationFailure(f"sample block has {len(block)} rows, expected {N}")
    v = np.asarray(f.evaluate(block), dtype=float)
    i1 = sets.J1.contains(v).astype(float)
    i3 = sets.J3.contains(v).astype(float)
    i2 = 1.0 - np.maximum(i1, i3)
    p1, p2, p3 = float(i1.mean()), float(i2.mean()), float(i3.mean())
    m = float(v.mean())
    dev = np.abs(v - m)
    alpha = float(dev.mean())
    tilt = float(np.mean(v < m) - np.mean(v > m))

    lhs = sets.eps * p1 * p3
    rhs = p2 * alpha
    psi_lhs = np.zeros_like(v)
    psi_rhs = np.zeros_like(v)
    if p1 > 0:
        psi_lhs += (i1 - p1) / p1
    if p3 > 0:
        psi_lhs += (i3 - p3) / p3
    if p2 > 0:
        psi_rhs += (i2 - p2) / p2
    if alpha > 0:
        psi_rhs += (dev - alpha + tilt * (v - m)) / alpha
    lhs_se = lhs * _log_se(psi_lhs)
    rhs_se = rhs * _log_se(psi_rhs)
    report = make_report(
        lhs,
        rhs,
        "three-set",
        {"body": K.model_dump(mode="json"), "f": f.to_dict(), "sets": sets.to_dict(),
         "N": N, "seed": cfg.seed},
        extras={"p1": p1, "p2": p2, "p3": p3, "mean": m, "alpha_f": alpha},
        lhs_stderr=lhs_se,
        rhs_stderr=rhs_se,
    )
    if report.infinite:
        logger.warning("three-set: no samples in J2 with p1 p3 > 0; increase N")
        return report
    ratio_se = report.witness_ratio * _log_se(psi_lhs - psi_rhs)
    return report.model_copy(update={"ratio_stderr": ratio_se})


def three_set_exact(f: UniPoly, w: AnyWeight, sets: ThreeSets) -> IneqReport:
    """Three-set check for a one-dimensional weight from the exact pushforward CDF."""
    law = ExactPushforward(f, w)
    p1 = law.probability(sets.J1)
    p3 = law.probability(sets.J3)
    p2 = law.probability(sets.J2)
    mean = normalized_integral(w, f)
    alpha = math.exp(log_integrate_abs_poly(w, f, mean) - log_mass(w))
    return make_report(
        sets.eps * p1 * p3,
        p2 * alpha,
        "three-set",
        {"f": list(f.coeffs), "weight": w.model_dump(mode="json"), "sets": sets.to_dict()},
        extras={"p1": p1, "p2": p2, "p3": p3, "mean": mean, "alpha_f": alpha},
    )


def gap_sum_identity(g: GridDist, sets: ThreeSets) -> IneqReport:
    """
    ``nu(J1) nu(J3)`` against ``sum_i nu((-inf, a_i]) nu([b_i, inf))`` over the
    components ``(a_i, b_i)`` of ``J2``; the ratio never exceeds 1.
    """
    total = 0.0
    for iv in sets.J2:
        below = 0.0 if math.isinf(iv.lo) else g.cdf(iv.lo)
        above = 0.0 if math.isinf(iv.hi) else 1.0 - g.cdf(iv.hi)
        total += below * above
    lhs = g.mass(sets.J1) * g.mass(sets.J3)
    return make_report(
        lhs, total, "gap-sum", {"sets": sets.to_dict(), "cells": g.M},
        extras={"components": len(sets.J2)},
    )


def halfline(y: float) -> IntervalUnion:
    return IntervalUnion((Interval(-math.inf, float(y)),))


def interval_sets(pairs: Sequence[Sequence[float]]) -> IntervalUnion:
    """Closed union from ``(lo, hi)`` pairs; infinite ends allowed."""
    return IntervalUnion.merged([Interval(float(a), float(b)) for a, b in pairs])
