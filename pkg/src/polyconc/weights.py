#!/usr/bin/env python3
"""
One-dimensional weights from the localization reduction.

Three families are supported, all stored unnormalized:

* ``ExpAffineWeight``: density ``exp(c0 + c1 t)`` on ``[lo, hi]``
  (``hi = inf`` when ``c1 < 0``);
* ``PowerWeight``: density ``t^n`` on ``[lo, hi]`` with ``lo >= 0``;
* ``AffinePowerWeight``: density ``(alpha t + beta)^(n-1)``.

Integrals of polynomials are exact. The exponential family is integrated
against the basis ``J_j = int_0^L u^j e^{-lam u} du`` after moving the
origin to the endpoint where the density peaks, so every basis value is
positive and carries a separate log factor. The power families use
Gauss-Legendre rules with enough nodes to be exact.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc, gammaln, logsumexp

from .errors import DivergentWeightError, ValidationFailure
from .model import AffinePowerWeight, ExpAffineWeight, PowerWeight
from .poly import DEFAULT_TOL, IntervalUnion, UniPoly, compose_affine, real_roots

logger = logging.getLogger(__name__)

AnyWeight = Union[ExpAffineWeight, PowerWeight, AffinePowerWeight]

TAIL_MASS = 1e-12
# below this value of lam * L the basis is summed as a power series
_SERIES_CUTOFF = 1.0
_SERIES_TERMS = 60


@dataclass(frozen=True)
class MomentTable:
    weight: AnyWeight
    moments: Tuple[float, ...]


@dataclass(frozen=True)
class WeightedStats:
    mass: float
    mean: float
    variance: float


@dataclass(frozen=True)
class AffineMap:
    """The substitution ``u = a t + b``."""

    a: float
    b: float

    def apply(self, t: float) -> float:
        return self.a * t + self.b

    def inverse(self, u: float) -> float:
        return (u - self.b) / self.a


@dataclass(frozen=True)
class Canonical:
    """
    A weight in canonical form with the map realizing it.

    ``int g(t) dw(t) = jacobian * int g(map.inverse(u)) dweight(u)``.
    """

    weight: AnyWeight
    map: AffineMap
    log_jacobian: float

    @property
    def jacobian(self) -> float:
        return math.exp(self.log_jacobian)


# ---------------------------------------------------------------------------
# low-level integration
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _legendre(m: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(m)


def _gauss_nodes(lo: float, hi: float, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    m = degree // 2 + 2
    x, wts = _legendre(m)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * wts


def _exp_basis(lam: float, length: float, top: int) -> np.ndarray:
    """``J_j = int_0^length u^j exp(-lam u) du`` for ``j = 0..top``."""
    j = np.arange(top + 1, dtype=float)
    if lam == 0.0:
        return length ** (j + 1) / (j + 1)
    x = lam * length
    if math.isinf(length):
        return np.exp(gammaln(j + 1) - (j + 1) * math.log(lam))
    if x <= _SERIES_CUTOFF:
        k = np.arange(_SERIES_TERMS, dtype=float)
        series = (-x) ** k / np.exp(gammaln(k + 1))
        return np.array(
            [length ** (jj + 1) * float(np.sum(series / (jj + 1 + k))) for jj in j]
        )
    return np.exp(gammaln(j + 1) - (j + 1) * math.log(lam)) * gammainc(j + 1, x)


def _parts(w: AnyWeight, f: UniPoly) -> Tuple[float, float]:
    """
    Split ``int f dw`` as ``exp(log_factor) * value``.

    The exponential family returns the log of its peak density as the
    factor; the power families return factor 0.
    """
    lo, hi = w.lo, w.hi
    if f.is_zero or not hi > lo:
        return 0.0, 0.0
    if isinstance(w, ExpAffineWeight):
        if w.c1 < 0:
            anchor, lam, g = lo, -w.c1, compose_affine(f, 1.0, lo)
        elif w.c1 > 0:
            if math.isinf(hi):
                raise DivergentWeightError("exp_affine weight with c1 > 0 on an unbounded domain")
            anchor, lam, g = hi, w.c1, compose_affine(f, -1.0, hi)
        else:
            if math.isinf(hi):
                raise DivergentWeightError("constant weight on an unbounded domain")
            anchor, lam, g = lo, 0.0, compose_affine(f, 1.0, lo)
        basis = _exp_basis(lam, hi - lo, g.degree)
        return w.c0 + w.c1 * anchor, float(np.dot(g.array(), basis[: len(g.array())]))
    if isinstance(w, PowerWeight):
        nodes, wts = _gauss_nodes(lo, hi, f.degree + w.n)
        return 0.0, float(np.sum(wts * f(nodes) * nodes**w.n))
    nodes, wts = _gauss_nodes(lo, hi, f.degree + w.n - 1)
    base = w.alpha * nodes + w.beta
    return 0.0, float(np.sum(wts * f(nodes) * base ** (w.n - 1)))


def _log_abs(parts: Sequence[Tuple[float, float]]) -> float:
    factors = np.array([p[0] for p in parts], dtype=float)
    values = np.array([abs(p[1]) for p in parts], dtype=float)
    keep = values > 0
    if not np.any(keep):
        return -math.inf
    return float(logsumexp(factors[keep], b=values[keep]))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def density(w: AnyWeight, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Pointwise density, zero outside the domain."""
    x = np.asarray(t, dtype=float)
    inside = (x >= w.lo) & (x <= w.hi)
    if isinstance(w, ExpAffineWeight):
        with np.errstate(over="ignore"):
            value = np.exp(w.c0 + w.c1 * x)
    elif isinstance(w, PowerWeight):
        value = np.abs(x) ** w.n
    else:
        value = np.abs(w.alpha * x + w.beta) ** (w.n - 1)
    out = np.where(inside, value, 0.0)
    return float(out) if out.ndim == 0 else out


def restrict_weight(w: AnyWeight, lo: float, hi: float) -> Optional[AnyWeight]:
    """
    Same density on ``[lo, hi]`` intersected with the domain.

    Returns:
        The restricted weight, or None when the intersection has no length.
    """
    a = max(lo, w.lo)
    b = min(hi, w.hi)
    if not b > a:
        return None
    return w.model_copy(update={"lo": a, "hi": b})


def integrate_poly(w: AnyWeight, f: UniPoly) -> float:
    """
    Exact ``int f dw``.

    Raises:
        DivergentWeightError: If the weight has infinite mass.
    """
    log_factor, value = _parts(w, f)
    if value == 0.0:
        return 0.0
    return value * math.exp(log_factor)


def moment(w: AnyWeight, k: int) -> float:
    """
    Exact ``int t^k dw``.

    Power weights use ``(hi^{p} - lo^{p}) / p`` with ``p = n + k + 1``.
    """
    if k < 0:
        raise ValidationFailure(f"moment order must be non-negative, got {k}")
    if isinstance(w, PowerWeight):
        p = w.n + k + 1
        return (w.hi**p - w.lo**p) / p
    return integrate_poly(w, UniPoly((0.0,) * k + (1.0,)))


def mass(w: AnyWeight) -> float:
    return moment(w, 0)


def moment_table(w: AnyWeight, top: int) -> MomentTable:
    return MomentTable(weight=w, moments=tuple(moment(w, k) for k in range(top + 1)))


def log_mass(w: AnyWeight) -> float:
    """Natural log of the total mass, finite even when the mass underflows."""
    lo, hi = w.lo, w.hi
    if isinstance(w, ExpAffineWeight):
        if w.c1 == 0.0:
            if math.isinf(hi):
                raise DivergentWeightError("constant weight on an unbounded domain")
            return w.c0 + math.log(hi - lo)
        lam = abs(w.c1)
        if w.c1 > 0 and math.isinf(hi):
            raise DivergentWeightError("exp_affine weight with c1 > 0 on an unbounded domain")
        anchor = lo if w.c1 < 0 else hi
        tail = 0.0 if math.isinf(hi) else math.log(-math.expm1(-lam * (hi - lo)))
        return w.c0 + w.c1 * anchor + tail - math.log(lam)
    if isinstance(w, PowerWeight):
        p = w.n + 1
        if lo == 0.0:
            return p * math.log(hi) - math.log(p)
        return p * math.log(hi) + math.log(-math.expm1(p * math.log(lo / hi))) - math.log(p)
    canon = canonicalize(w)
    return canon.log_jacobian + log_mass(canon.weight)


def _check_inside(w: AnyWeight, A: IntervalUnion) -> None:
    for iv in A:
        slack_lo = 1e-12 * (1.0 + abs(w.lo)) if math.isfinite(w.lo) else 0.0
        slack_hi = 1e-12 * (1.0 + abs(w.hi)) if math.isfinite(w.hi) else 0.0
        if iv.lo < w.lo - slack_lo or iv.hi > w.hi + slack_hi:
            raise ValidationFailure(
                f"set piece [{iv.lo}, {iv.hi}] leaves the weight domain [{w.lo}, {w.hi}]"
            )


def _indicator_parts(w: AnyWeight, A: IntervalUnion) -> List[Tuple[float, float]]:
    _check_inside(w, A)
    parts = []
    one = UniPoly((1.0,))
    for iv in A:
        piece = restrict_weight(w, iv.lo, iv.hi)
        if piece is not None:
            parts.append(_parts(piece, one))
    return parts


def integrate_indicator(w: AnyWeight, A: IntervalUnion) -> float:
    """
    Exact ``w(A)``; open and closed ends are treated alike.

    Raises:
        ValidationFailure: If ``A`` is not contained in the domain.
    """
    return float(sum(v * math.exp(lf) for lf, v in _indicator_parts(w, A) if v != 0.0))


def log_integrate_indicator(w: AnyWeight, A: IntervalUnion) -> float:
    """``ln w(A)``; ``-inf`` for a null set."""
    return _log_abs(_indicator_parts(w, A))


def _abs_parts(w: AnyWeight, f: UniPoly, r: float) -> List[Tuple[float, float]]:
    g = f - r
    if g.is_zero:
        return []
    cuts = [w.lo]
    if g.degree > 0:
        cuts += [x for x in real_roots(g, (w.lo, w.hi), DEFAULT_TOL).roots if w.lo < x < w.hi]
    cuts.append(w.hi)
    parts = []
    for a, b in zip(cuts, cuts[1:]):
        piece = restrict_weight(w, a, b)
        if piece is not None:
            lf, v = _parts(piece, g)
            parts.append((lf, abs(v)))
    return parts


def integrate_abs_poly(w: AnyWeight, f: UniPoly, r: float = 0.0) -> float:
    """
    Exact ``int |f - r| dw``.

    The domain is split at the real roots of ``f - r``; ``f - r`` keeps one
    sign on each piece, so each piece contributes ``|int (f - r)|``.
    """
    return float(sum(v * math.exp(lf) for lf, v in _abs_parts(w, f, r) if v != 0.0))


def log_integrate_abs_poly(w: AnyWeight, f: UniPoly, r: float = 0.0) -> float:
    return _log_abs(_abs_parts(w, f, r))


def normalized_integral(w: AnyWeight, f: UniPoly) -> float:
    """``int f dw / w(R)`` without forming either factor."""
    lf_f, v_f = _parts(w, f)
    lf_1, v_1 = _parts(w, UniPoly((1.0,)))
    if v_1 <= 0.0:
        raise ValidationFailure("weight has zero mass")
    if v_f == 0.0:
        return 0.0
    return v_f / v_1 * math.exp(lf_f - lf_1)


def stats(w: AnyWeight) -> WeightedStats:
    """Mass, mean and variance of the normalized weight."""
    mean = normalized_integral(w, UniPoly((0.0, 1.0)))
    variance = normalized_integral(w, UniPoly((-mean, 1.0)) ** 2)
    return WeightedStats(mass=mass(w), mean=mean, variance=variance)


def c1_inf(n: int, s_grid: Sequence[float]) -> float:
    """
    Smallest variance of the normalized ``t^n`` weight on ``[s, s + 1]``.

    The infimum also includes the large-``s`` limit 1/12.
    """
    if len(s_grid) == 0:
        raise ValidationFailure("s_grid must not be empty")
    if any(s < 0 for s in s_grid):
        raise ValidationFailure("s_grid entries must be non-negative")
    values = [stats(PowerWeight(n=n, lo=float(s), hi=float(s) + 1.0)).variance for s in s_grid]
    return min(min(values), 1.0 / 12.0)


def quarter_mass_inf(n: int, s_grid: Sequence[float]) -> float:
    """
    Smallest share of ``t^n`` mass on ``[s, s + 1/4]`` within ``[s, s + 1]``.

    The large-``s`` limit 1/4 is included.
    """
    if len(s_grid) == 0:
        raise ValidationFailure("s_grid must not be empty")
    p = n + 1
    values = [
        ((s + 0.25) ** p - s**p) / ((s + 1.0) ** p - s**p) for s in map(float, s_grid)
    ]
    return min(min(values), 0.25)


def canonicalize(w: AnyWeight) -> Canonical:
    """
    Map a weight to canonical form.

    Exponential weights become ``e^{-u}`` (or Lebesgue) on ``[0, L]``; affine
    power weights become ``u^{n-1}``. ``alpha < 0`` is handled by the same
    substitution ``u = alpha t + beta``, which reflects the domain.
    """
    if isinstance(w, ExpAffineWeight):
        if w.c1 < 0:
            lam = -w.c1
            amap = AffineMap(lam, -lam * w.lo)
            log_j = w.c0 + w.c1 * w.lo - math.log(lam)
            canon = ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=lam * (w.hi - w.lo))
        elif w.c1 > 0:
            lam = w.c1
            amap = AffineMap(-lam, lam * w.hi)
            log_j = w.c0 + w.c1 * w.hi - math.log(lam)
            canon = ExpAffineWeight(c0=0.0, c1=-1.0, lo=0.0, hi=lam * (w.hi - w.lo))
        else:
            amap = AffineMap(1.0, -w.lo)
            log_j = w.c0
            canon = ExpAffineWeight(c0=0.0, c1=0.0, lo=0.0, hi=w.hi - w.lo)
        return Canonical(canon, amap, log_j)
    if isinstance(w, PowerWeight):
        return Canonical(w, AffineMap(1.0, 0.0), 0.0)
    if w.alpha == 0.0:
        log_j = (w.n - 1) * math.log(w.beta)
        canon = ExpAffineWeight(c0=0.0, c1=0.0, lo=0.0, hi=w.hi - w.lo)
        return Canonical(canon, AffineMap(1.0, -w.lo), log_j)
    ends = sorted((w.alpha * w.lo + w.beta, w.alpha * w.hi + w.beta))
    canon = PowerWeight(n=w.n - 1, lo=max(ends[0], 0.0), hi=ends[1])
    return Canonical(canon, AffineMap(w.alpha, w.beta), -math.log(abs(w.alpha)))


def canonicalize_instance(f: UniPoly, w: AnyWeight) -> Tuple[UniPoly, Canonical]:
    """Transport ``f`` along with its weight: ``g(u) = f(map.inverse(u))``."""
    canon = canonicalize(w)
    a, b = canon.map.a, canon.map.b
    return compose_affine(f, 1.0 / a, -b / a), canon


def truncation_point(w: AnyWeight, degree: int) -> float:
    """
    Smallest ``T`` with ``int_T^inf density (1 + t)^{2 degree} dt < 1e-12``.

    Only unbounded exponential weights are truncated; other weights return
    their right end.
    """
    if not (isinstance(w, ExpAffineWeight) and math.isinf(w.hi)):
        return w.hi
    lam = -w.c1
    a = 2 * degree + 1
    target = math.log(TAIL_MASS)

    def log_tail(t: float) -> float:
        # int_{1+t}^inf u^{2d} e^{c0 + c1 (u - 1)} du
        q = gammaincc(a, lam * (1.0 + t))
        if q <= 0.0:
            return -1e6
        return w.c0 + lam + gammaln(a) - a * math.log(lam) + math.log(q) - target

    start = max(w.lo, 0.0)
    if log_tail(start) < 0:
        return start
    upper = start + 1.0
    while log_tail(upper) >= 0:
        upper = start + 2.0 * (upper - start)
    return float(brentq(log_tail, start, upper, xtol=1e-9))
