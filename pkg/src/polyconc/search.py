#!/usr/bin/env python3
"""
Worst-case witness search for the product small-ball inequality.

Instances are monic polynomials parameterized by their roots. Each random
start is refined by a bounded Nelder-Mead descent on the negated witness
ratio; starts are independent tasks keyed by ``(seed, start index)``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import rng
from .checkers import check_product_smallball
from .errors import ValidationFailure
from .model import (
    DivergenceRow,
    DivergenceTable,
    ExpAffineWeight,
    PowerWeight,
    ProfileTable,
    RootPairReport,
    SearchResult,
    SearchSpace,
)
from .parallel import map_ordered
from .poly import UniPoly
from .weights import AnyWeight, truncation_point

logger = logging.getLogger(__name__)

MAX_ITER = 200
XATOL = 1e-8
RESTARTS = 2
DIVERGENCE_GRID = 80
MAX_INFINITE_KEPT = 50
DEFAULT_POWER_S_RANGE = (0.0, 10.0)


@dataclass
class _StartOutcome:
    best_ratio: float = -1.0
    best_theta: Optional[np.ndarray] = None
    infinite: List[Dict[str, Any]] = field(default_factory=list)


class _Layout:
    """Maps the flat parameter vector to an instance of the search space."""

    def __init__(self, space: SearchSpace) -> None:
        self.space = space
        d = space.degree
        R = space.root_box
        bounds: List[Tuple[float, float]] = [(-R, R)] * d
        bounds.append((math.log(space.eps_range[0]), math.log(space.eps_range[1])))
        self.s_index: Optional[int] = None
        self.r_index: Optional[int] = None
        if space.weight_family == "power":
            self.s_index = len(bounds)
            bounds.append(space.s_range or DEFAULT_POWER_S_RANGE)
        elif space.s_range is not None:
            if space.s_range[0] <= 0:
                raise ValidationFailure("exponential domain lengths must be positive")
            self.s_index = len(bounds)
            bounds.append((math.log(space.s_range[0]), math.log(space.s_range[1])))
        r_range = space.r_range
        if r_range is None and space.weight_family == "exp-shifted":
            r_range = (-R, R)
        if r_range is not None:
            self.r_index = len(bounds)
            bounds.append(r_range)
        self.bounds = bounds
        self.lower = np.array([b[0] for b in bounds])
        self.upper = np.array([b[1] for b in bounds])

    def decode(self, theta: np.ndarray) -> Dict[str, Any]:
        theta = np.clip(theta, self.lower, self.upper)
        d = self.space.degree
        roots = sorted(float(x) for x in theta[:d])
        eps = float(math.exp(theta[d]))
        if self.space.weight_family == "power":
            s = float(theta[self.s_index])
        elif self.s_index is not None:
            s = float(math.exp(theta[self.s_index]))
        else:
            s = math.inf
        r = float(theta[self.r_index]) if self.r_index is not None else 0.0
        return {
            "family": self.space.weight_family,
            "n": self.space.power_n,
            "roots": roots,
            "eps": eps,
            "s": s,
            "r": r,
        }


def instance_weight(witness: Dict[str, Any]) -> AnyWeight:
    """Weight of a decoded search instance."""
    s = float(witness["s"])
    if witness["family"] == "power":
        return PowerWeight(n=int(witness["n"]), lo=s, hi=s + 1.0)
    return ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=s)


def replay(witness: Dict[str, Any]) -> float:
    """Witness ratio of a decoded instance."""
    f = UniPoly.from_roots(witness["roots"])
    report = check_product_smallball(
        f, instance_weight(witness), float(witness["eps"]), float(witness["r"])
    )
    return report.witness_ratio


def _run_start(layout: _Layout, seed: int, index: int) -> _StartOutcome:
    gen = rng.stream(seed, rng.SEARCH, index)
    theta = layout.lower + gen.random(len(layout.bounds)) * (layout.upper - layout.lower)
    out = _StartOutcome()

    def objective(x: np.ndarray) -> float:
        inst = layout.decode(x)
        ratio = replay(inst)
        if math.isinf(ratio):
            if len(out.infinite) < MAX_INFINITE_KEPT:
                out.infinite.append(inst)
            return 0.0
        if ratio > out.best_ratio:
            out.best_ratio = ratio
            out.best_theta = np.clip(np.array(x, dtype=float), layout.lower, layout.upper)
        return -ratio

    for _ in range(RESTARTS + 1):
        res = minimize(
            objective,
            theta,
            method="Nelder-Mead",
            bounds=layout.bounds,
            options={"maxiter": MAX_ITER, "xatol": XATOL, "fatol": 1e-12},
        )
        theta = out.best_theta if out.best_theta is not None else res.x
    return out


def worst_ratio_search(space: SearchSpace, budget: int, seed: int) -> SearchResult:
    """
    Largest finite product small-ball witness ratio over ``budget`` starts.

    Deterministic in ``(space, budget, seed)``: starts are keyed streams and
    their outcomes are merged by maximum with the lowest index winning ties.
    """
    if budget < 1:
        raise ValidationFailure("budget must be at least 1")
    layout = _Layout(space)
    if space.weight_family != "power" and space.s_range is None:
        trunc = truncation_point(ExpAffineWeight(), space.degree)
        if space.root_box >= trunc:
            raise ValidationFailure(
                f"root box {space.root_box} reaches the truncation point {trunc:.3g}"
            )
    logger.info(
        "search: family=%s degree=%d budget=%d seed=%d",
        space.weight_family, space.degree, budget, seed,
    )
    outcomes = map_ordered(lambda i: _run_start(layout, seed, i), list(range(budget)))

    trajectory: List[float] = []
    best_index = -1
    best_ratio = -1.0
    infinite: List[Dict[str, Any]] = []
    for i, outcome in enumerate(outcomes):
        if outcome.best_ratio > best_ratio:
            best_ratio, best_index = outcome.best_ratio, i
        trajectory.append(max(best_ratio, 0.0))
        for inst in outcome.infinite:
            if len(infinite) < MAX_INFINITE_KEPT:
                infinite.append(inst)

    witness: Dict[str, Any] = {}
    if best_index >= 0 and outcomes[best_index].best_theta is not None:
        witness = layout.decode(outcomes[best_index].best_theta)
        best_ratio = replay(witness)
    best_ratio = max(best_ratio, 0.0)
    if infinite:
        logger.info("search: %d configurations with rhs_core = 0 recorded", len(infinite))
    logger.info("search: best ratio %.6g from start %d", best_ratio, best_index)
    return SearchResult(
        best_ratio=best_ratio,
        witness=witness,
        trials=budget,
        seed=seed,
        budget=budget,
        trajectory=trajectory,
        infinite_witnesses=infinite,
    )


def divergence_family(a: float, degree: int) -> UniPoly:
    """``(t + 1)^{degree - 1} (t - a)``."""
    return UniPoly.from_roots([-1.0] * (degree - 1) + [a])


def _best_eps(f: UniPoly, w: AnyWeight, a: float) -> Tuple[float, float]:
    logs = np.linspace(math.log(1e-3), math.log(a * a), DIVERGENCE_GRID)

    def ratio(log_eps: float) -> float:
        value = check_product_smallball(f, w, math.exp(log_eps)).witness_ratio
        return value if math.isfinite(value) else 0.0

    values = [ratio(x) for x in logs]
    k = int(np.argmax(values))
    best_log, best_value = logs[k], values[k]
    lo = logs[max(k - 1, 0)]
    hi = logs[min(k + 1, len(logs) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -ratio(x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if -res.fun > best_value:
            best_log, best_value = float(res.x), float(-res.fun)
    return math.exp(best_log), best_value


def divergence_table(
    a_values: Sequence[float], degree: int = 3, trunc: Optional[float] = None
) -> DivergenceTable:
    """
    Best-eps witness ratios of ``(t + 1)^{degree - 1} (t - a)`` under
    ``e^{-t}`` on ``[0, trunc]`` (``trunc = None`` for the half-line).
    """
    a_list = [float(a) for a in a_values]
    if not a_list or any(a <= 0 for a in a_list):
        raise ValidationFailure("a_values must be positive")
    if any(b <= a for a, b in zip(a_list, a_list[1:])):
        raise ValidationFailure("a_values must be increasing")
    if degree < 1:
        raise ValidationFailure("degree must be at least 1")
    w = ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=math.inf if trunc is None else trunc)
    rows = []
    for a in a_list:
        eps_star, ratio = _best_eps(divergence_family(a, degree), w, a)
        rows.append(DivergenceRow(a=a, eps_star=eps_star, witness_ratio=ratio))
    increasing = all(r2.witness_ratio > r1.witness_ratio for r1, r2 in zip(rows, rows[1:]))
    if not increasing and degree >= 3:
        logger.warning("divergence table for degree %d is not increasing", degree)
    return DivergenceTable(degree=degree, trunc=trunc, rows=rows, increasing=increasing)


def degree3_divergence(a_values: Sequence[float], trunc: Optional[float] = None) -> DivergenceTable:
    return divergence_table(a_values, 3, trunc)


def profile_space(d: int, n: int) -> SearchSpace:
    return SearchSpace(degree=d, weight_family="power", power_n=n, s_range=DEFAULT_POWER_S_RANGE)


def profile_constant(d: int, n: int, budget: int, seed: int) -> ProfileTable:
    """Best ratios for power weights over degrees ``1..d`` and exponents ``0..n``."""
    if not 1 <= d <= 6 or not 0 <= n <= 8:
        raise ValidationFailure("profile needs 1 <= d <= 6 and 0 <= n <= 8")
    degrees = list(range(1, d + 1))
    powers = list(range(0, n + 1))
    cells = [
        [worst_ratio_search(profile_space(dd, nn), budget, seed).best_ratio for nn in powers]
        for dd in degrees
    ]
    trend = [
        all(cells[i + 1][j] >= cells[i][j] for i in range(len(degrees) - 1))
        for j in range(len(powers))
    ]
    return ProfileTable(
        degrees=degrees, powers=powers, budget=budget, seed=seed,
        cells=cells, nondecreasing_in_d=trend,
    )


def root_pair_infimum(grid: Sequence[float]) -> RootPairReport:
    """
    Infimum of ``sqrt(1+(1-tau)^2) sqrt(1+(1-sigma)^2) / (|tau - sigma| + 1)``
    over pairs drawn from ``grid``.
    """
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValidationFailure("grid must not be empty")
    left = np.sqrt(1.0 + (1.0 - g) ** 2)
    values = np.outer(left, left) / (np.abs(g[:, None] - g[None, :]) + 1.0)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return RootPairReport(
        infimum=float(values[i, j]), argmin=(float(g[i]), float(g[j])), grid_points=int(g.size)
    )
