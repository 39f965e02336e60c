#!/usr/bin/env python3
"""
Both sides of the one-dimensional inequalities, evaluated exactly.

Every check returns an :class:`~polyconc.model.IneqReport` whose witness
ratio is the smallest constant making the instance true. Probabilities are
taken with respect to the normalized weight; masses are combined in log
space so instances far out in an exponential tail stay meaningful.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.special import logsumexp

from .errors import NumericFailure, PreconditionError, ValidationFailure, ZeroPolynomialError
from .model import ExpAffineWeight, IneqReport, PowerWeight
from .poly import (
    DEFAULT_TOL,
    IntervalUnion,
    MultiPoly,
    UniPoly,
    derivative_uni,
    level_set,
    real_roots,
    restrict_to_segment,
    sign_partition,
)
from .weights import (
    AnyWeight,
    canonicalize_instance,
    log_integrate_abs_poly,
    log_integrate_indicator,
    normalized_integral,
    restrict_weight,
    stats,
)

logger = logging.getLogger(__name__)

DEFAULT_EPS_FRAC_GRID = (0.0, 0.01, 0.05, 0.1, 0.2)
KF_RTOL = 1e-10
_QUAD_LIMIT = 200
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class PolyStats1D:
    """Norms and moments of ``f`` under a normalized weight."""

    norm0: float
    norm1: float
    norm2: float
    kf: float
    mean: float
    sigma: float
    alpha: float


# ---------------------------------------------------------------------------
# report construction
# ---------------------------------------------------------------------------


def _exp(x: Optional[float]) -> float:
    if x is None or x == -math.inf:
        return 0.0
    # sides past the float range keep their exact logs
    return math.inf if x > _LOG_MAX else math.exp(x)


def make_report(
    lhs: float,
    rhs_core: float,
    tag: str,
    instance: Dict[str, Any],
    log_lhs: Optional[float] = None,
    log_rhs_core: Optional[float] = None,
    extras: Optional[Dict[str, Any]] = None,
    sub_reports: Optional[List[IneqReport]] = None,
    **stderrs: Optional[float],
) -> IneqReport:
    """
    Build a report and its witness ratio.

    ``0 / 0`` gives ratio 0 and ``rhs_core = 0 < lhs`` gives the infinite
    flag. When log values are supplied the ratio comes from their
    difference. A finite ratio always satisfies ``lhs <= ratio * rhs_core``.

    Raises:
        NumericFailure: If a side or its log is NaN, or both sides overflow
            without logs to compare them.
    """
    sides = [lhs, rhs_core] + [v for v in (log_lhs, log_rhs_core) if v is not None]
    if any(math.isnan(float(v)) for v in sides):
        raise NumericFailure(f"{tag}: non-numeric side (lhs={lhs}, rhs_core={rhs_core})")
    lhs = max(float(lhs), 0.0)
    rhs_core = max(float(rhs_core), 0.0)
    if log_lhs is not None and log_rhs_core is not None:
        if log_lhs == -math.inf:
            ratio = 0.0
        elif log_rhs_core == -math.inf:
            ratio = math.inf
        else:
            diff = log_lhs - log_rhs_core
            ratio = math.inf if diff > _LOG_MAX else math.exp(diff)
    elif lhs == 0.0:
        ratio = 0.0
    elif rhs_core == 0.0:
        ratio = math.inf
    elif math.isinf(lhs) and math.isinf(rhs_core):
        raise NumericFailure(f"{tag}: both sides overflow")
    else:
        ratio = lhs / rhs_core
    if math.isnan(ratio):
        raise NumericFailure(f"{tag}: undefined ratio of two overflowing sides")
    if math.isfinite(ratio) and 0.0 < rhs_core < math.inf and math.isfinite(lhs):
        for _ in range(16):
            if lhs <= ratio * rhs_core:
                break
            ratio = float(np.nextafter(ratio, math.inf))
    return IneqReport(
        lhs=lhs,
        rhs_core=rhs_core,
        witness_ratio=ratio,
        infinite=math.isinf(ratio),
        tag=tag,
        instance=instance,
        extras=extras or {},
        sub_reports=sub_reports or [],
        log_lhs=log_lhs if log_lhs is None or math.isfinite(log_lhs) else None,
        log_rhs_core=log_rhs_core if log_rhs_core is None or math.isfinite(log_rhs_core) else None,
        **stderrs,
    )


def _instance(f: UniPoly, w: AnyWeight, **params: Any) -> Dict[str, Any]:
    out: Dict[str, Any] = {"f": list(f.coeffs), "weight": w.model_dump(mode="json")}
    out.update(params)
    return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _log_total(w: AnyWeight) -> float:
    return log_integrate_abs_poly(w, UniPoly((1.0,)))


def _log_density(w: AnyWeight, t: Any) -> Any:
    x = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        if isinstance(w, ExpAffineWeight):
            return w.c0 + w.c1 * x
        if isinstance(w, PowerWeight):
            return w.n * np.log(np.abs(x)) if w.n else np.zeros_like(x)
        if w.n == 1:
            return np.zeros_like(x)
        return (w.n - 1) * np.log(np.abs(w.alpha * x + w.beta))


def _normalized_density(w: AnyWeight):
    log_m = _log_total(w)

    def nd(t: float) -> float:
        return float(np.exp(_log_density(w, t) - log_m))

    return nd


def _integrate(func, a: float, b: float, weight: Optional[str] = None) -> float:
    if not b > a:
        return 0.0
    if weight is not None:
        value, _ = quad(func, a, b, weight=weight, wvar=(0.0, 0.0), limit=_QUAD_LIMIT)
        return value
    if math.isinf(b):
        head, _ = quad(func, a, a + 1.0, limit=_QUAD_LIMIT)
        tail, _ = quad(func, a + 1.0, b, limit=_QUAD_LIMIT)
        return head + tail
    value, _ = quad(func, a, b, limit=_QUAD_LIMIT, epsabs=1e-14, epsrel=1e-11)
    return value


def _mean_log_linear(w: AnyWeight, r: float, nd) -> float:
    """``E[ln|t - r|]`` with the log singularity split off at ``r``."""
    lo, hi = w.lo, w.hi
    if not lo <= r <= hi:
        return _integrate(lambda t: nd(t) * math.log(abs(t - r)), lo, hi)
    total = 0.0
    if r > lo:
        total += _integrate(nd, lo, r, weight="alg-logb")
    if r < hi:
        near = min(hi, r + 1.0)
        total += _integrate(nd, r, near, weight="alg-loga")
        if near < hi:
            total += _integrate(lambda t: nd(t) * math.log(t - r), near, hi)
    return total


def _abs_at_least(f: UniPoly, c: float, domain: Tuple[float, float]) -> IntervalUnion:
    upper = level_set(f, c, domain, above=True)
    lower = level_set(f, -c, domain, above=False)
    return upper.union(lower)


def _prob(w: AnyWeight, A: IntervalUnion, log_m: Optional[float] = None) -> float:
    log_m = _log_total(w) if log_m is None else log_m
    return min(_exp(log_integrate_indicator(w, A) - log_m), 1.0)


def sup_abs(f: UniPoly, lo: float, hi: float) -> float:
    """``max |f|`` on a finite interval (endpoints and critical points)."""
    points = [lo, hi]
    df = derivative_uni(f)
    if not df.is_zero and df.degree > 0:
        points += list(real_roots(df, (lo, hi)).roots)
    return float(np.max(np.abs(f(np.array(points)))))


def _norm2(f: UniPoly, w: AnyWeight) -> float:
    return math.sqrt(max(normalized_integral(w, f * f), 0.0))


def _log_ratio(log_value: float, log_m: float) -> float:
    return _exp(log_value - log_m)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def norm0(f: UniPoly, w: AnyWeight) -> float:
    """
    Geometric mean ``exp(E ln|f|)``.

    ``f = lead * prod (t - r_i)^{m_i} * q`` with ``q`` free of real roots; each
    linear factor is integrated with a log-weighted quadrature rule.
    """
    if f.is_zero:
        return 0.0
    if f.degree == 0:
        return abs(f.lead)
    roots = real_roots(f)
    nd = _normalized_density(w)
    total = math.log(abs(f.lead))
    divisor = np.array([1.0])
    for r, m in roots:
        total += m * _mean_log_linear(w, r, nd)
        divisor = P.polymul(divisor, P.polypow([-r, 1.0], m))
    quotient, _ = P.polydiv(f.array() / f.lead, divisor)
    q = UniPoly(tuple(np.atleast_1d(quotient)))
    if q.degree > 0:
        total += _integrate(lambda t: nd(t) * math.log(abs(q(t))), w.lo, w.hi)
    elif not q.is_zero:
        total += math.log(abs(q.lead))
    return math.exp(total)


def kf_level(f: UniPoly, w: AnyWeight) -> float:
    """
    ``k(f) = inf {k : P(|f| >= k) <= 1/e}`` by bisection.

    Returns the upper end of the final bracket (relative width 1e-10).
    """
    if f.is_zero:
        return 0.0
    log_m = _log_total(w)
    threshold = math.exp(-1.0)

    def tail(k: float) -> float:
        return _prob(w, _abs_at_least(f, k, (w.lo, w.hi)), log_m)

    lo, hi = 0.0, 1.0
    while tail(hi) > threshold:
        lo, hi = hi, 2.0 * hi
    while hi - lo > KF_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if tail(mid) > threshold:
            lo = mid
        else:
            hi = mid
    return hi


def lq_norm(f: UniPoly, w: AnyWeight, q: float) -> float:
    """
    ``(E|f|^q)^{1/q}``; exact for integer ``q``, quadrature split at the
    real roots of ``f`` otherwise.
    """
    if q <= 0:
        raise ValidationFailure(f"q must be positive, got {q}")
    if f.is_zero:
        return 0.0
    if float(q).is_integer():
        k = int(q)
        power = f**k
        if k % 2 == 0:
            value = normalized_integral(w, power)
        else:
            value = _log_ratio(log_integrate_abs_poly(w, power), _log_total(w))
        return max(value, 0.0) ** (1.0 / q)
    nd = _normalized_density(w)
    cuts = [w.lo]
    if f.degree > 0:
        cuts += [x for x in real_roots(f, (w.lo, w.hi)).roots if w.lo < x < w.hi]
    cuts.append(w.hi)
    total = sum(
        _integrate(lambda t: nd(t) * abs(f(t)) ** q, a, b) for a, b in zip(cuts, cuts[1:])
    )
    return max(total, 0.0) ** (1.0 / q)


def poly_stats(f: UniPoly, w: AnyWeight) -> PolyStats1D:
    """
    Norms, mean, standard deviation, mean absolute deviation and ``k(f)``.
    """
    log_m = _log_total(w)
    mean = normalized_integral(w, f)
    centered = f - mean
    variance = normalized_integral(w, centered * centered) if not centered.is_zero else 0.0
    return PolyStats1D(
        norm0=norm0(f, w),
        norm1=_log_ratio(log_integrate_abs_poly(w, f), log_m),
        norm2=_norm2(f, w),
        kf=kf_level(f, w),
        mean=mean,
        sigma=math.sqrt(max(variance, 0.0)),
        alpha=_log_ratio(log_integrate_abs_poly(w, f, mean), log_m),
    )


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_product_smallball(
    f: UniPoly, w: AnyWeight, eps: float, r: float = 0.0, tag: str = "product-smallball"
) -> IneqReport:
    """
    ``eps w(f <= -eps) w(f >= eps)`` against ``w(|f| < eps) int |f - r| dw``.

    All four factors are exact; they are combined as logs.
    """
    if not eps > 0:
        raise ValidationFailure(f"eps must be positive, got {eps}")
    part = sign_partition(f, eps, (w.lo, w.hi))
    ln_neg = log_integrate_indicator(w, part.neg)
    ln_pos = log_integrate_indicator(w, part.pos)
    ln_mid = log_integrate_indicator(w, part.mid)
    ln_abs = log_integrate_abs_poly(w, f, r)
    log_lhs = math.log(eps) + ln_neg + ln_pos
    log_rhs = ln_mid + ln_abs
    return make_report(
        _exp(log_lhs),
        _exp(log_rhs),
        tag,
        _instance(f, w, eps=eps, r=r),
        log_lhs=log_lhs,
        log_rhs_core=log_rhs,
        extras={"log_neg": ln_neg, "log_pos": ln_pos, "log_mid": ln_mid, "log_abs": ln_abs},
    )


def check_shifted_exp_smallball(
    f: UniPoly, w: AnyWeight, eps: float, r: float
) -> IneqReport:
    """The r-shifted product small-ball check restricted to exponential weights."""
    if not isinstance(w, ExpAffineWeight):
        raise ValidationFailure("shifted exponential check needs an exp_affine weight")
    return check_product_smallball(f, w, eps, r, tag="shifted-exp-smallball")


def check_carbery_wright(f: UniPoly, w: AnyWeight, alpha: float) -> IneqReport:
    """``||f||_1^{1/d} P(|f| <= alpha)`` against ``alpha^{1/d}``."""
    if not alpha > 0:
        raise ValidationFailure(f"alpha must be positive, got {alpha}")
    d = max(f.degree, 1)
    log_m = _log_total(w)
    norm1 = _log_ratio(log_integrate_abs_poly(w, f), log_m)
    if f.degree == 0:
        small = 1.0 if abs(f.lead) <= alpha else 0.0
    else:
        small = _prob(w, sign_partition(f, alpha, (w.lo, w.hi)).mid, log_m)
    lhs = norm1 ** (1.0 / d) * small
    rhs = alpha ** (1.0 / d)
    return make_report(
        lhs, rhs, "carbery-wright", _instance(f, w, alpha=alpha),
        extras={"norm1": norm1, "prob_small": small},
    )


def check_nsv_tail(f: UniPoly, w: AnyWeight, t: float) -> IneqReport:
    """``P(|f| >= (4t)^d k(f))`` against ``e^{-t}``."""
    if t < 1:
        raise ValidationFailure(f"t must be at least 1, got {t}")
    if f.is_zero:
        raise ZeroPolynomialError("k(f) = 0 for the zero polynomial")
    kf = kf_level(f, w)
    level = (4.0 * t) ** f.degree * kf
    log_lhs = log_integrate_indicator(w, _abs_at_least(f, level, (w.lo, w.hi))) - _log_total(w)
    return make_report(
        _exp(log_lhs),
        math.exp(-t),
        "nsv-tail",
        _instance(f, w, t=t),
        log_lhs=log_lhs,
        log_rhs_core=-t,
        extras={"kf": kf, "level": level},
    )


def check_restricted_mass(f: UniPoly, w: AnyWeight, U: IntervalUnion) -> IneqReport:
    """``P(U)^{d+1} E|f|`` against ``E[|f| 1_U]``."""
    d = f.degree
    log_m = _log_total(w)
    log_u = log_integrate_indicator(w, U)
    pieces = []
    for iv in U:
        piece = restrict_weight(w, iv.lo, iv.hi)
        if piece is not None:
            pieces.append(log_integrate_abs_poly(piece, f))
    finite = [p for p in pieces if p > -math.inf]
    log_on_u = float(logsumexp(finite)) if finite else -math.inf
    log_lhs = (d + 1) * (log_u - log_m) + log_integrate_abs_poly(w, f) - log_m
    log_rhs = log_on_u - log_m
    if log_u == -math.inf:
        log_lhs = -math.inf
    return make_report(
        _exp(log_lhs),
        _exp(log_rhs),
        "restricted-mass",
        _instance(f, w, U=U.to_list()),
        log_lhs=log_lhs,
        log_rhs_core=log_rhs,
        extras={"prob_U": _exp(log_u - log_m)},
    )


def check_khinchin(f: UniPoly, w: AnyWeight, q: float) -> IneqReport:
    """
    ``||f||_q`` against ``q^d ||f||_0`` and ``q^d ||f||_1``.

    The top-level report carries the ``||f||_0`` comparison; both
    comparisons are attached as sub-reports.
    """
    if q < 1:
        raise ValidationFailure(f"q must be at least 1, got {q}")
    d = f.degree
    nq = lq_norm(f, w, q)
    n0 = norm0(f, w)
    n1 = _log_ratio(log_integrate_abs_poly(w, f), _log_total(w))
    scale = q**d
    inst = _instance(f, w, q=q)
    vs0 = make_report(nq, scale * n0, "khinchin-norm0", inst)
    vs1 = make_report(nq, scale * n1, "khinchin-norm1", inst)
    return make_report(
        nq, scale * n0, "khinchin", inst,
        extras={"norm_q": nq, "norm0": n0, "norm1": n1},
        sub_reports=[vs0, vs1],
    )


def check_reverse_poincare(f: UniPoly, w: AnyWeight) -> IneqReport:
    """``sigma(w) ||f'||_2`` against ``||f||_2``."""
    sigma_w = math.sqrt(max(stats(w).variance, 0.0))
    if sigma_w == 0.0:
        raise PreconditionError("weight has zero variance")
    lhs = sigma_w * _norm2(derivative_uni(f), w)
    return make_report(
        lhs, _norm2(f, w), "reverse-poincare", _instance(f, w), extras={"sigma_w": sigma_w}
    )


def check_mean_deviation(f: UniPoly, w: AnyWeight, eps_frac: float) -> IneqReport:
    """
    ``P(f - m_f >= eps_frac alpha_f)`` against 1.

    ``extras["prob_below_mean"]`` carries ``P(f < m_f)``.
    """
    log_m = _log_total(w)
    mean = normalized_integral(w, f)
    centered = f - mean
    variance = normalized_integral(w, centered * centered) if not centered.is_zero else 0.0
    if f.degree == 0 or variance <= 0.0:
        raise PreconditionError("sigma_f = 0: f is constant under the weight")
    alpha = _log_ratio(log_integrate_abs_poly(w, f, mean), log_m)
    domain = (w.lo, w.hi)
    above = _prob(w, level_set(f, mean + eps_frac * alpha, domain, above=True), log_m)
    at_least_mean = _prob(w, level_set(f, mean, domain, above=True), log_m)
    return make_report(
        above, 1.0, "mean-deviation", _instance(f, w, eps_frac=eps_frac),
        extras={
            "mean": mean,
            "alpha_f": alpha,
            "sigma_f": math.sqrt(variance),
            "prob_below_mean": 1.0 - at_least_mean,
        },
    )


def mean_deviation_scan(
    f: UniPoly, w: AnyWeight, grid: Sequence[float] = DEFAULT_EPS_FRAC_GRID
) -> List[IneqReport]:
    return [check_mean_deviation(f, w, e) for e in grid]


def _require_root(f: UniPoly, lo: float, hi: float) -> None:
    if f.is_zero:
        return
    if f.degree == 0 or len(real_roots(f, (lo, hi))) == 0:
        raise PreconditionError(f"f has no root in [{lo}, {hi}]")


def check_vanishing_L1(f: UniPoly, w: AnyWeight, r: float) -> IneqReport:
    """``int |f| dw`` against ``int |f - r| dw`` for ``f`` vanishing in the domain."""
    if not isinstance(w, PowerWeight):
        raise ValidationFailure("vanishing-L1 check needs a power weight")
    _require_root(f, w.lo, w.hi)
    log_lhs = log_integrate_abs_poly(w, f)
    log_rhs = log_integrate_abs_poly(w, f, r)
    return make_report(
        _exp(log_lhs), _exp(log_rhs), "vanishing-l1", _instance(f, w, r=r),
        log_lhs=log_lhs, log_rhs_core=log_rhs,
    )


def check_sup_derivative(f: UniPoly, w: AnyWeight) -> IneqReport:
    """
    ``sup_I |f|`` against ``|I| sup_I |f'|`` on ``I = [lo, min(hi, lo + 1)]``,
    where ``f`` must vanish somewhere in ``I``.
    """
    lo = w.lo
    hi = min(w.hi, lo + 1.0)
    _require_root(f, lo, hi)
    lhs = sup_abs(f, lo, hi)
    rhs = (hi - lo) * sup_abs(derivative_uni(f), lo, hi) if f.degree > 0 else 0.0
    return make_report(lhs, rhs, "sup-derivative", _instance(f, w, interval=[lo, hi]))


def check_sup_l2(f: UniPoly, w: AnyWeight) -> IneqReport:
    """``sup |f|`` on the domain against ``max(1, (n+1)/d)^d ||f||_2`` for ``t^n`` weights."""
    if not isinstance(w, PowerWeight):
        raise ValidationFailure("sup/L2 check needs a power weight")
    d = max(f.degree, 1)
    factor = max(1.0, (w.n + 1) / d) ** d
    lhs = sup_abs(f, w.lo, w.hi)
    return make_report(
        lhs, factor * _norm2(f, w), "sup-l2", _instance(f, w), extras={"factor": factor}
    )


def check_localized_smallball(
    f: MultiPoly,
    x: Sequence[float],
    y: Sequence[float],
    w: AnyWeight,
    eps: float,
    r: float = 0.0,
) -> IneqReport:
    """
    Product small-ball check for ``f`` along the needle ``x + t (y - x)``.

    ``w`` is the needle weight in the segment parameter ``t``; the restricted
    polynomial and the weight are canonicalized before checking.
    """
    g = restrict_to_segment(f, x, y)
    g_canon, canon = canonicalize_instance(g, w)
    report = check_product_smallball(g_canon, canon.weight, eps, r, tag="localized-smallball")
    report.instance.update(
        {"x": list(map(float, x)), "y": list(map(float, y)), "needle": list(g.coeffs)}
    )
    return report
