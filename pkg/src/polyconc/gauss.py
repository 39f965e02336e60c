#!/usr/bin/env python3
"""
Monte Carlo experiments under Gaussian and other sampled measures.

Samples come in blocks of ``BLOCK`` vectors, each block drawn from its own
keyed stream, so a sample depends only on ``(n, N, seed)``. Every estimate
reports ``stderr = sample std (ddof=1) / sqrt(N)``; ratios of estimates
carry delta-method errors computed from influence functions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import rng
from .body import hit_and_run
from .checkers import make_report
from .errors import (
    DimensionMismatchError,
    PreconditionError,
    ValidationFailure,
)
from .model import (
    BodySampler,
    DerivativeNormReport,
    ExponentialSampler,
    GaussianSampler,
    IneqReport,
    MCEstimate,
    SmallBallRow,
    SmallBallScan,
    TailRow,
    TailTable,
)
from .parallel import map_ordered
from .poly import MultiPoly, dm_norm_at

logger = logging.getLogger(__name__)

BLOCK = 2**16
PILOT_SAMPLES = 100_000
TAIL_MIN_HITS = 10

AnySampler = Union[GaussianSampler, ExponentialSampler, BodySampler]


@dataclass(frozen=True, eq=False)
class QuadForm:
    """``f(x) = x^T A x + b.x + c`` with symmetric ``A``."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise DimensionMismatchError(f"QuadForm shapes A{A.shape} b{b.shape} disagree")
        if not np.array_equal(A, A.T):
            raise ValidationFailure("QuadForm matrix must be symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def degree(self) -> int:
        if np.any(self.A):
            return 2
        return 1 if np.any(self.b) else 0

    def evaluate(self, x: Any) -> Any:
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionMismatchError(f"point dimension {pts.shape[1]} does not match {self.dim}")
        out = np.einsum("ij,jk,ik->i", pts, self.A, pts) + pts @ self.b + self.c
        return float(out[0]) if single else out

    __call__ = evaluate

    def scaled(self, lam: float) -> "QuadForm":
        return QuadForm(lam * self.A, lam * self.b, lam * self.c)

    def to_multipoly(self) -> MultiPoly:
        n = self.dim
        terms: Dict[Tuple[int, ...], float] = {(0,) * n: self.c}
        for i in range(n):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = self.b[i]
            for j in range(i, n):
                e2 = [0] * n
                e2[i] += 1
                e2[j] += 1
                coeff = self.A[i, i] if i == j else 2.0 * self.A[i, j]
                terms[tuple(e2)] = terms.get(tuple(e2), 0.0) + coeff
        return MultiPoly(n, terms)

    @classmethod
    def from_multipoly(cls, f: MultiPoly) -> "QuadForm":
        if f.degree > 2:
            raise ValidationFailure("only polynomials of degree <= 2 are quadratic forms")
        n = f.dim
        A = np.zeros((n, n))
        b = np.zeros(n)
        c = 0.0
        for exps, coeff in f.terms:
            idx = [i for i, e in enumerate(exps) for _ in range(e)]
            if not idx:
                c += coeff
            elif len(idx) == 1:
                b[idx[0]] += coeff
            elif idx[0] == idx[1]:
                A[idx[0], idx[0]] += coeff
            else:
                A[idx[0], idx[1]] += 0.5 * coeff
                A[idx[1], idx[0]] += 0.5 * coeff
        return cls(A, b, c)


Poly = Union[MultiPoly, QuadForm]


def quadform_stats(q: QuadForm) -> Tuple[float, float]:
    """Exact mean ``tr A + c`` and variance ``2 ||A||_F^2 + |b|^2`` under N(0, I)."""
    mean = float(np.trace(q.A)) + q.c
    variance = 2.0 * float(np.sum(q.A * q.A)) + float(q.b @ q.b)
    return mean, variance


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _blocks(N: int) -> List[Tuple[int, int]]:
    return [(k, min(BLOCK, N - k * BLOCK)) for k in range((N + BLOCK - 1) // BLOCK)]


def gaussian_sample(n: int, N: int, seed: int, family: int = rng.GAUSS) -> np.ndarray:
    """``N`` standard normal vectors in R^n, shape ``(N, n)``."""
    if n < 1 or N < 1:
        raise ValidationFailure("gaussian_sample needs n, N >= 1")

    def block(spec: Tuple[int, int]) -> np.ndarray:
        index, rows = spec
        return rng.box_muller(rng.stream(seed, family, index), rows * n).reshape(rows, n)

    return np.vstack(map_ordered(block, _blocks(N)))


def exponential_sample(n: int, N: int, seed: int) -> np.ndarray:
    """``N`` vectors of independent Exp(1) coordinates."""

    def block(spec: Tuple[int, int]) -> np.ndarray:
        index, rows = spec
        u = rng.stream(seed, rng.EXPONENTIAL, index).random(rows * n)
        return -np.log1p(-u).reshape(rows, n)

    return np.vstack(map_ordered(block, _blocks(N)))


def draw(sampler: AnySampler, N: int, seed: int) -> np.ndarray:
    """``N`` points from a sampler; body chains take their seed from ``seed``."""
    if isinstance(sampler, GaussianSampler):
        return gaussian_sample(sampler.dim, N, seed)
    if isinstance(sampler, ExponentialSampler):
        return exponential_sample(sampler.dim, N, seed)
    cfg = sampler.chain.model_copy(update={"seed": seed})
    return hit_and_run(sampler.body, N, cfg)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def _estimate(values: np.ndarray, seed: int) -> MCEstimate:
    N = len(values)
    stderr = float(np.std(values, ddof=1) / math.sqrt(N)) if N > 1 else 0.0
    return MCEstimate(value=float(np.mean(values)), stderr=stderr, n_samples=N, seed=seed)


def _dim(f: Poly) -> int:
    return f.dim


def gaussian_moments(f: Poly, seed: int) -> Tuple[float, float, bool, float]:
    """
    ``(m_f, sigma_f, exact, sigma_stderr)`` under N(0, I).

    Exact for degree <= 2; otherwise from a pilot sample on its own stream.
    """
    if f.degree <= 2:
        q = f if isinstance(f, QuadForm) else QuadForm.from_multipoly(f)
        mean, var = quadform_stats(q)
        return mean, math.sqrt(var), True, 0.0
    X = gaussian_sample(_dim(f), PILOT_SAMPLES, seed, family=rng.PILOT)
    v = f.evaluate(X)
    mean = float(np.mean(v))
    sq = (v - mean) ** 2
    var = float(np.mean(sq))
    sigma = math.sqrt(var)
    var_se = float(np.std(sq, ddof=1) / math.sqrt(len(v)))
    sigma_se = var_se / (2.0 * sigma) if sigma > 0 else math.inf
    logger.debug("pilot moments: mean=%.6g sigma=%.6g (se %.3g)", mean, sigma, sigma_se)
    return mean, sigma, False, sigma_se


def _require_sigma(sigma: float, sigma_se: float) -> None:
    if sigma <= 0.0 or sigma <= 3.0 * sigma_se:
        raise PreconditionError("sigma_f is indistinguishable from 0")


def _check_s(s: float) -> None:
    if not 0.0 < s <= 0.5:
        raise ValidationFailure(f"s must lie in (0, 1/2], got {s}")


def mc_smallball(f: Poly, s: float, N: int, seed: int) -> MCEstimate:
    """Frequency of ``|f(X) - m_f| <= sigma_f s`` for standard Gaussian ``X``."""
    _check_s(s)
    mean, sigma, _, sigma_se = gaussian_moments(f, seed)
    _require_sigma(sigma, sigma_se)
    X = gaussian_sample(_dim(f), N, seed)
    hits = (np.abs(f.evaluate(X) - mean) <= sigma * s).astype(float)
    return _estimate(hits, seed)


def smallball_profile(s: float, degree: int) -> float:
    """``s |ln s|^{-d/2}``."""
    return s * abs(math.log(s)) ** (-degree / 2.0)


def smallball_scan(f: Poly, s_list: Sequence[float], N: int, seed: int) -> SmallBallScan:
    """
    Small-ball frequencies at several scales on one shared sample.

    The minimum of ``estimate / profile`` is the empirical lower witness.
    """
    for s in s_list:
        _check_s(s)
    mean, sigma, exact, sigma_se = gaussian_moments(f, seed)
    _require_sigma(sigma, sigma_se)
    d = max(f.degree, 1)
    dev = np.abs(f.evaluate(gaussian_sample(_dim(f), N, seed)) - mean)
    rows = []
    for s in s_list:
        est = _estimate((dev <= sigma * s).astype(float), seed)
        profile = smallball_profile(s, d)
        rows.append(SmallBallRow(s=s, estimate=est, profile=profile, ratio=est.value / profile))
    return SmallBallScan(
        degree=d,
        mean=mean,
        sigma=sigma,
        sigma_exact=exact,
        sigma_stderr=sigma_se,
        rows=rows,
        min_ratio=min((r.ratio for r in rows), default=0.0),
    )


def check_gauss_tail(f: Poly, t_list: Sequence[float], N: int, seed: int) -> TailTable:
    """
    Exceedance frequencies of ``|f| > ||f||_2 t^d`` and the rates ``-ln p / t^2``.

    Rows with fewer than ``TAIL_MIN_HITS`` exceedances are flagged and left
    out of the rate estimate.
    """
    if any(t < 1 for t in t_list):
        raise ValidationFailure("tail parameters must be at least 1")
    mean, sigma, exact, _ = gaussian_moments(f, seed)
    norm2 = math.sqrt(mean * mean + sigma * sigma)
    d = max(f.degree, 1)
    values = np.abs(f.evaluate(gaussian_sample(_dim(f), N, seed)))
    rows = []
    for t in t_list:
        hits = (values > norm2 * t**d).astype(float)
        est = _estimate(hits, seed)
        flagged = est.value < TAIL_MIN_HITS / N
        rate = -math.log(est.value) / t**2 if est.value > 0 else None
        rows.append(
            TailRow(
                t=t,
                p_hat=est.value,
                stderr=est.stderr,
                rate=rate,
                flagged=flagged,
                upper_bound=1.0 / N if est.value == 0 else None,
            )
        )
        if flagged:
            logger.warning("tail row t=%g has p_hat=%g below %d/N; excluded", t, est.value, TAIL_MIN_HITS)
    rates = [r.rate for r in rows if not r.flagged and r.rate is not None]
    return TailTable(
        degree=d,
        norm2=norm2,
        norm2_exact=exact,
        n_samples=N,
        seed=seed,
        rows=rows,
        r_hat=min(rates) if rates else None,
    )


def dm_l2_gaussian(f: MultiPoly, m: int, N: int, seed: int) -> DerivativeNormReport:
    """
    ``E |D^m f|^2`` by Monte Carlo, exact as well for degree <= 2, and its
    ratio to ``sigma_f^2``.
    """
    if not 1 <= m <= f.degree:
        raise ValidationFailure(f"derivative order {m} outside [1, {f.degree}]")
    X = gaussian_sample(f.dim, N, seed)
    est = _estimate(np.square(dm_norm_at(f, m, X)), seed)
    _, sigma, _, _ = gaussian_moments(f, seed)
    sigma2 = sigma * sigma
    exact = None
    if f.degree <= 2:
        q = QuadForm.from_multipoly(f)
        frob = float(np.sum(q.A * q.A))
        exact = 4.0 * frob + float(q.b @ q.b) if m == 1 else 4.0 * frob
    return DerivativeNormReport(
        m=m,
        estimate=est,
        exact=exact,
        sigma2=sigma2,
        ratio=est.value / sigma2 if sigma2 > 0 else math.inf,
        exact_ratio=exact / sigma2 if exact is not None and sigma2 > 0 else None,
    )


def _se(influence: np.ndarray) -> float:
    return float(np.std(influence, ddof=1) / math.sqrt(len(influence)))


def check_cor28_mc(
    q: Poly, sampler: AnySampler, eps: float, N: int, seed: int
) -> IneqReport:
    """
    ``eps`` against ``P(|f - m_f| < eps) E|f - m_f|`` from one sample.

    Raises:
        PreconditionError: If ``eps >= alpha_hat - 3 stderr``.
    """
    if sampler.dim != _dim(q):
        raise DimensionMismatchError("sampler and polynomial dimensions differ")
    if not eps > 0:
        raise ValidationFailure(f"eps must be positive, got {eps}")
    v = q.evaluate(draw(sampler, N, seed))
    m = float(np.mean(v))
    centered = v - m
    dev = np.abs(centered)
    alpha = float(np.mean(dev))
    slope = float(np.mean(centered < 0) - np.mean(centered > 0))
    if_alpha = dev - alpha + slope * centered
    inside = (dev < eps).astype(float)
    p = float(np.mean(inside))
    if_p = inside - p
    se_alpha = _se(if_alpha)
    if eps >= alpha - 3.0 * se_alpha:
        raise PreconditionError(
            f"eps={eps:g} is not below alpha_hat - 3 stderr = {alpha - 3.0 * se_alpha:g}"
        )
    rhs = p * alpha
    rhs_se = _se(alpha * if_p + p * if_alpha)
    report = make_report(
        eps,
        rhs,
        "cor28",
        {"f": _describe(q), "sampler": sampler.model_dump(mode="json"), "eps": eps, "N": N, "seed": seed},
        extras={"p_hat": p, "alpha_hat": alpha, "mean_hat": m, "alpha_stderr": se_alpha, "p_stderr": _se(if_p)},
        lhs_stderr=0.0,
        rhs_stderr=rhs_se,
    )
    if not report.infinite and rhs > 0:
        report.ratio_stderr = report.witness_ratio * rhs_se / rhs
    return report


def check_product_smallball_mc(
    f: Poly, sampler: AnySampler, eps: float, r: float, N: int, seed: int
) -> IneqReport:
    """
    Product small-ball statement on R^n for a degree-two polynomial.

    ``eps P(f <= -eps) P(f >= eps)`` against ``P(|f| < eps) E|f - r|``.
    """
    if f.degree > 2:
        raise ValidationFailure("sampled product small-ball check takes degree <= 2")
    if sampler.dim != _dim(f):
        raise DimensionMismatchError("sampler and polynomial dimensions differ")
    if not eps > 0:
        raise ValidationFailure(f"eps must be positive, got {eps}")
    v = f.evaluate(draw(sampler, N, seed))
    neg = (v <= -eps).astype(float)
    pos = (v >= eps).astype(float)
    mid = (np.abs(v) < eps).astype(float)
    dev = np.abs(v - r)
    p_neg, p_pos, p_mid, e_abs = (float(np.mean(a)) for a in (neg, pos, mid, dev))
    lhs = eps * p_neg * p_pos
    rhs = p_mid * e_abs
    lhs_se = _se(eps * (p_pos * (neg - p_neg) + p_neg * (pos - p_pos)))
    rhs_se = _se(e_abs * (mid - p_mid) + p_mid * (dev - e_abs))
    report = make_report(
        lhs,
        rhs,
        "product-smallball-mc",
        {"f": _describe(f), "sampler": sampler.model_dump(mode="json"), "eps": eps, "r": r, "N": N, "seed": seed},
        extras={"p_neg": p_neg, "p_pos": p_pos, "p_mid": p_mid, "abs_mean": e_abs},
        lhs_stderr=lhs_se,
        rhs_stderr=rhs_se,
    )
    if not report.infinite and lhs > 0 and rhs > 0:
        report.ratio_stderr = report.witness_ratio * math.hypot(lhs_se / lhs, rhs_se / rhs)
    return report


def check_taylor_pathwise(f: MultiPoly, n_pairs: int, seed: int) -> IneqReport:
    """
    Finite Taylor estimate on Gaussian pairs ``(x, y)``.

    ``lhs`` is the largest ``|f(y) - f(x)| / bound`` over the pairs; the
    number of pairs exceeding the bound goes to ``extras``.
    """
    if n_pairs < 1:
        raise ValidationFailure("n_pairs must be at least 1")
    Z = gaussian_sample(f.dim, 2 * n_pairs, seed)
    X, Y = Z[:n_pairs], Z[n_pairs:]
    lhs = np.abs(f.evaluate(Y) - f.evaluate(X))
    dist = np.linalg.norm(Y - X, axis=1)
    rhs = np.zeros(n_pairs)
    for m in range(1, f.degree + 1):
        rhs += dm_norm_at(f, m, X) * dist**m / math.factorial(m)
    violations = int(np.sum(lhs > rhs * (1.0 + 1e-12) + 1e-12))
    positive = rhs > 0
    worst = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else 0.0
    return make_report(
        worst, 1.0, "taylor-pathwise", {"f": f.to_dict(), "pairs": n_pairs, "seed": seed},
        extras={"violations": violations},
    )


def _describe(f: Poly) -> Dict[str, Any]:
    if isinstance(f, QuadForm):
        return {"A": f.A.tolist(), "b": f.b.tolist(), "c": f.c}
    return f.to_dict()
