#!/usr/bin/env python3

import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pytest

from polyconc.cache import ResultCache
from polyconc.model import AffinePowerWeight, ExpAffineWeight, PowerWeight
from polyconc.weights import AnyWeight, density


@pytest.fixture
def tmp_cache(tmp_path: Path) -> ResultCache:
    """Provide a ResultCache backed by a temporary database."""
    return ResultCache(db_path=tmp_path / "test_cache.db", ttl_seconds=3600)


@pytest.fixture
def exp_weight() -> ExpAffineWeight:
    """Standard exponential weight e^{-t} on the half-line."""
    return ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=math.inf)


@pytest.fixture
def uniform_weight() -> ExpAffineWeight:
    """Lebesgue weight on [0, 1]."""
    return ExpAffineWeight(c0=0.0, c1=0.0, lo=0.0, hi=1.0)


@pytest.fixture
def symmetric_uniform() -> ExpAffineWeight:
    """Lebesgue weight on [-1, 1]."""
    return ExpAffineWeight(c0=0.0, c1=0.0, lo=-1.0, hi=1.0)


@pytest.fixture
def power_weight() -> PowerWeight:
    """Weight t^2 on [0, 1]."""
    return PowerWeight(n=2, lo=0.0, hi=1.0)


@pytest.fixture
def affine_weight() -> AffinePowerWeight:
    """Weight (2t + 1)^2 on [0, 1]."""
    return AffinePowerWeight(alpha=2.0, beta=1.0, n=3, lo=0.0, hi=1.0)


@pytest.fixture
def trapezoid_oracle() -> Callable[..., float]:
    """Dense trapezoid integral of ``g(t) * density(w, t)`` over the weight domain."""

    def integrate(w: AnyWeight, g: Callable[[np.ndarray], np.ndarray],
                  panels: int = 200_000, hi: Optional[float] = None) -> float:
        top = w.hi if math.isfinite(w.hi) else (hi if hi is not None else w.lo + 60.0)
        t = np.linspace(w.lo, top, panels + 1)
        values = np.asarray(g(t), dtype=float) * np.asarray(density(w, t), dtype=float)
        return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(t)))

    return integrate
