#!/usr/bin/env python3
"""
Polynomials: arithmetic, real roots, segment restriction, eps-level sign
partitions and derivative tensors.

Univariate polynomials are stored as ascending coefficient tuples and
evaluated with :mod:`numpy.polynomial.polynomial`. Real roots are isolated
between the critical points of the polynomial, which come recursively from
its derivatives, and refined by Brent's method.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .errors import (
    DimensionMismatchError,
    NumericFailure,
    ValidationFailure,
    ZeroPolynomialError,
)

logger = logging.getLogger(__name__)

MAX_DEGREE = 12
DEFAULT_TOL = 1e-10
_EVAL_BLOCK = 65536
_EPS = np.finfo(float).eps
# evaluation error allowance, in units of eps * sum |c_i x^i| per coefficient
_ROUNDING = 64.0

Number = Union[int, float]
Domain = Tuple[float, float]


# ---------------------------------------------------------------------------
# univariate polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniPoly:
    """
    Univariate real polynomial, coefficients in ascending degree order.

    Trailing zeros are stripped on construction, so the last stored
    coefficient is the leading one; the zero polynomial has no coefficients.
    """

    coeffs: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        c = [float(x) for x in np.ravel(np.asarray(self.coeffs, dtype=float))]
        if any(not math.isfinite(x) for x in c):
            raise ValidationFailure("polynomial coefficients must be finite")
        while c and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_roots(cls, roots: Sequence[float], lead: float = 1.0) -> "UniPoly":
        """Build ``lead * prod(t - r)`` over the given roots."""
        if len(roots) == 0:
            return cls((lead,))
        return cls(tuple(lead * P.polyfromroots(np.asarray(roots, dtype=float))))

    @classmethod
    def constant(cls, value: float) -> "UniPoly":
        return cls((value,))

    @classmethod
    def identity(cls) -> "UniPoly":
        return cls((0.0, 1.0))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return max(len(self.coeffs) - 1, 0)

    @property
    def lead(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    def array(self) -> np.ndarray:
        """Coefficient array; ``[0.0]`` for the zero polynomial."""
        if not self.coeffs:
            return np.zeros(1)
        return np.array(self.coeffs)

    def __call__(self, t: Any) -> Any:
        return eval_uni(self, t)

    def _coerce(self, other: Union["UniPoly", Number]) -> np.ndarray:
        if isinstance(other, UniPoly):
            return other.array()
        return np.array([float(other)])

    def __add__(self, other: Union["UniPoly", Number]) -> "UniPoly":
        return UniPoly(tuple(P.polyadd(self.array(), self._coerce(other))))

    __radd__ = __add__

    def __sub__(self, other: Union["UniPoly", Number]) -> "UniPoly":
        return UniPoly(tuple(P.polysub(self.array(), self._coerce(other))))

    def __rsub__(self, other: Union["UniPoly", Number]) -> "UniPoly":
        return UniPoly(tuple(P.polysub(self._coerce(other), self.array())))

    def __mul__(self, other: Union["UniPoly", Number]) -> "UniPoly":
        return UniPoly(tuple(P.polymul(self.array(), self._coerce(other))))

    __rmul__ = __mul__

    def __neg__(self) -> "UniPoly":
        return UniPoly(tuple(-self.array()))

    def __pow__(self, k: int) -> "UniPoly":
        if k < 0:
            raise ValueError("negative polynomial power")
        return UniPoly(tuple(P.polypow(self.array(), k)))

    def to_dict(self) -> Dict[str, Any]:
        return {"coeffs": list(self.coeffs)}


def ensure_degree(f: Union["UniPoly", "MultiPoly"], cap: int = MAX_DEGREE) -> None:
    """
    Reject instance polynomials above the supported degree.

    Raises:
        ValidationFailure: If ``f.degree > cap``.
    """
    if f.degree > cap:
        raise ValidationFailure(f"polynomial degree {f.degree} exceeds the cap {cap}")


def eval_uni(f: UniPoly, t: Any) -> Any:
    """Horner evaluation of ``f`` at a scalar or array ``t``."""
    if f.is_zero:
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    value = P.polyval(t, f.array())
    return float(value) if np.ndim(value) == 0 else value


def derivative_uni(f: UniPoly) -> UniPoly:
    """Formal derivative."""
    if f.degree == 0:
        return UniPoly()
    return UniPoly(tuple(P.polyder(f.array())))


def compose_affine(f: UniPoly, a: float, b: float) -> UniPoly:
    """
    Return ``g(t) = f(a t + b)``.

    Args:
        f: Polynomial to transport.
        a: Slope of the substitution.
        b: Offset of the substitution.

    Returns:
        The composed polynomial, same degree as ``f`` when ``a != 0``.
    """
    inner = np.array([float(b), float(a)])
    out = np.zeros(1)
    for c in reversed(f.array()):
        out = P.polyadd(P.polymul(out, inner), [c])
    return UniPoly(tuple(out))


def parse_unipoly(expr: str, variable: str = "t") -> UniPoly:
    """
    Parse an expression such as ``"(t+1)**2*(t-3)"``.

    Raises:
        ValidationFailure: If the expression is not a polynomial in ``variable``.
    """
    sym = sympy.Symbol(variable)
    try:
        parsed = sympy.Poly(sympy.sympify(expr, locals={variable: sym}), sym)
        coeffs = [float(c) for c in reversed(parsed.all_coeffs())]
    except (sympy.SympifyError, sympy.PolynomialError, TypeError, ValueError) as e:
        raise ValidationFailure(f"cannot parse polynomial {expr!r}: {e}") from e
    return UniPoly(tuple(coeffs))


# ---------------------------------------------------------------------------
# real roots
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootList:
    """Distinct real roots with multiplicities, sorted increasingly."""

    roots: Tuple[float, ...] = ()
    multiplicities: Tuple[int, ...] = ()
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if len(self.roots) != len(self.multiplicities):
            raise ValidationFailure("roots and multiplicities differ in length")
        if any(b <= a for a, b in zip(self.roots, self.roots[1:])):
            raise ValidationFailure("roots must be strictly increasing")

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self) -> Iterator[Tuple[float, int]]:
        return iter(zip(self.roots, self.multiplicities))

    def as_dict(self) -> Dict[float, int]:
        return dict(zip(self.roots, self.multiplicities))


def _scale(c: np.ndarray, x: float) -> float:
    d = len(c) - 1
    return float(np.max(np.abs(c))) * max(1.0, abs(x)) ** d


def multiplicity_at(f: UniPoly, r: float, tol: float = DEFAULT_TOL) -> int:
    """
    Count how many successive derivatives of ``f`` vanish at ``r``.

    A derivative ``g`` vanishes when ``|g(r)| <= tol * max|coeff(g)| * max(1,|r|)^deg g``.
    """
    k = 0
    g = f
    while not g.is_zero and g.degree > 0:
        c = g.array()
        if abs(P.polyval(r, c)) > tol * _scale(c, r):
            break
        k += 1
        g = derivative_uni(g)
    return k


def _negligible(c: np.ndarray, x: float) -> bool:
    """Whether ``f(x)`` is lost in the rounding error of its own evaluation."""
    noise = _ROUNDING * len(c) * _EPS * float(P.polyval(abs(x), np.abs(c)))
    return abs(float(P.polyval(x, c))) <= noise


def _piece_root(c: np.ndarray, u: float, v: float, tol: float) -> float:
    r = brentq(lambda s: P.polyval(s, c), u, v, xtol=0.01 * tol, rtol=4 * _EPS, maxiter=500)
    return float(r)


def _roots_between(c: np.ndarray, lo: float, hi: float, tol: float) -> List[Tuple[float, int]]:
    c = P.polytrim(np.asarray(c, dtype=float))
    degree = len(c) - 1
    if degree <= 0:
        return []
    c = np.ldexp(c, -math.frexp(float(np.max(np.abs(c))))[1])
    if degree == 1:
        r = -c[0] / c[1]
        return [(min(max(r, lo), hi), 1)] if lo - tol <= r <= hi + tol else []

    bound = 1.0 + float(np.max(np.abs(c[:-1]))) / abs(c[-1])
    a = max(lo, -bound)
    b = min(hi, bound)
    if a > b:
        return []
    pad = 1e-8 * (1.0 + max(abs(a), abs(b)))
    a, b = a - pad, b + pad

    # f is monotone between consecutive critical points, so each piece holds
    # at most one root; a critical point where f vanishes is a multiple root
    found: List[Tuple[float, int]] = []
    knots = [(a, float(P.polyval(a, c)))]
    for x, m in _roots_between(P.polyder(c), a, b, tol):
        if _negligible(c, x):
            logger.debug("multiple root of order %d at %.12g", m + 1, x)
            found.append((x, m + 1))
            knots.append((x, 0.0))
        else:
            knots.append((x, float(P.polyval(x, c))))
    knots.append((b, float(P.polyval(b, c))))
    for (u, fu), (v, fv) in zip(knots, knots[1:]):
        if fu * fv < 0.0:
            found.append((_piece_root(c, u, v, tol), 1))

    found.sort()
    merged: List[Tuple[float, int]] = []
    for r, m in found:
        if merged and abs(r - merged[-1][0]) <= 10 * tol * (1.0 + abs(r)):
            if m > merged[-1][1]:
                merged[-1] = (r, m)
            continue
        merged.append((r, m))
    return [(min(max(r, lo), hi), m) for r, m in merged if lo - tol <= r <= hi + tol]


def real_roots(
    f: UniPoly,
    domain: Domain = (-math.inf, math.inf),
    tol: float = DEFAULT_TOL,
) -> RootList:
    """
    Locate all real roots of ``f`` in a closed domain.

    The critical points of ``f`` (the real roots of ``f'``, found by the same
    routine) cut the domain into monotone pieces, so each piece holds at most
    one sign change, which Brent's method refines. A critical point where
    ``f`` itself vanishes is a multiple root, located as accurately as a
    simple root of the highest derivative that still vanishes there.

    Args:
        f: Polynomial, not identically zero.
        domain: Closed interval ``(lo, hi)``; infinite ends are clipped to the
            Cauchy root bound.
        tol: Location tolerance.

    Returns:
        RootList of distinct roots in the domain.

    Raises:
        ZeroPolynomialError: If ``f`` is identically zero.
    """
    if f.is_zero:
        raise ZeroPolynomialError("real_roots of the zero polynomial")
    lo, hi = float(domain[0]), float(domain[1])
    if lo > hi:
        raise ValidationFailure(f"empty domain [{lo}, {hi}]")
    if f.degree == 0:
        return RootList((), (), tol)
    pairs = _roots_between(f.array(), lo, hi, tol)
    # clamping can collapse two roots onto an endpoint
    roots: List[float] = []
    mults: List[int] = []
    for r, m in pairs:
        if roots and r <= roots[-1]:
            mults[-1] = max(mults[-1], m)
            continue
        roots.append(r)
        mults.append(m)
    if sum(mults) > f.degree:
        raise NumericFailure(f"root multiplicities exceed degree {f.degree}")
    return RootList(tuple(roots), tuple(mults), tol)


# ---------------------------------------------------------------------------
# interval unions and sign partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValidationFailure(f"interval with lo > hi: ({self.lo}, {self.hi})")
        if math.isinf(self.lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_closed", False)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: Any) -> Any:
        x = np.asarray(x, dtype=float)
        left = (x >= self.lo) if self.lo_closed else (x > self.lo)
        right = (x <= self.hi) if self.hi_closed else (x < self.hi)
        return left & right

    def to_list(self) -> List[Any]:
        return [self.lo, self.hi, self.lo_closed, self.hi_closed]


def _merge(intervals: Sequence[Interval]) -> Tuple[Interval, ...]:
    items = sorted(intervals, key=lambda iv: (iv.lo, not iv.lo_closed))
    out: List[Interval] = []
    for iv in items:
        if out:
            cur = out[-1]
            touching = iv.lo < cur.hi or (
                iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed)
            )
            if touching:
                if iv.hi > cur.hi:
                    hi, hi_closed = iv.hi, iv.hi_closed
                elif iv.hi == cur.hi:
                    hi, hi_closed = cur.hi, cur.hi_closed or iv.hi_closed
                else:
                    hi, hi_closed = cur.hi, cur.hi_closed
                out[-1] = Interval(cur.lo, hi, cur.lo_closed, hi_closed)
                continue
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, pairwise disjoint union of intervals."""

    intervals: Tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        ivs = tuple(self.intervals)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo < a.hi or (b.lo == a.hi and a.hi_closed and b.lo_closed):
                raise ValidationFailure("interval union must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def of(cls, *pairs: Tuple[float, float]) -> "IntervalUnion":
        """Union of closed intervals given as ``(lo, hi)`` pairs (overlaps merged)."""
        return cls(_merge([Interval(float(a), float(b)) for a, b in pairs]))

    @classmethod
    def merged(cls, intervals: Sequence[Interval]) -> "IntervalUnion":
        return cls(_merge(intervals))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def contains(self, x: Any) -> Any:
        x = np.asarray(x, dtype=float)
        hit = np.zeros(x.shape, dtype=bool)
        for iv in self.intervals:
            hit |= iv.contains(x)
        return hit

    def enlarge(self, h: float) -> "IntervalUnion":
        """Minkowski sum with the open interval ``(-h, h)``."""
        grown = [
            Interval(iv.lo - h, iv.hi + h, False, False) for iv in self.intervals
        ]
        return IntervalUnion.merged(grown)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.merged(list(self.intervals) + list(other.intervals))

    def complement(self, lo: float = -math.inf, hi: float = math.inf) -> "IntervalUnion":
        """Complement within ``[lo, hi]``."""
        out: List[Interval] = []
        cur, cur_closed = lo, not math.isinf(lo)
        for iv in self.intervals:
            if iv.hi < lo or iv.lo > hi:
                continue
            if iv.lo > cur or (iv.lo == cur and cur_closed and not iv.lo_closed):
                out.append(Interval(cur, iv.lo, cur_closed, not iv.lo_closed))
            cur, cur_closed = iv.hi, not iv.hi_closed
        if cur < hi or (cur == hi and cur_closed and not math.isinf(hi)):
            out.append(Interval(cur, hi, cur_closed, not math.isinf(hi)))
        return IntervalUnion(tuple(iv for iv in out if iv.lo < iv.hi or (iv.lo_closed and iv.hi_closed)))

    def distance_to(self, other: "IntervalUnion") -> float:
        """Smallest gap between points of the two unions (0 if they meet)."""
        best = math.inf
        for a in self.intervals:
            for b in other.intervals:
                gap = max(0.0, b.lo - a.hi, a.lo - b.hi)
                best = min(best, gap)
        return best

    def to_list(self) -> List[List[Any]]:
        return [iv.to_list() for iv in self.intervals]


@dataclass(frozen=True)
class SignPartition:
    """The sets ``{f <= -eps}``, ``{|f| < eps}`` and ``{f >= eps}`` on a domain."""

    eps: float
    neg: IntervalUnion
    mid: IntervalUnion
    pos: IntervalUnion
    domain: Domain


def _classify(value: float, eps: float) -> str:
    if value <= -eps:
        return "neg"
    if value >= eps:
        return "pos"
    return "mid"


def _interior_point(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(b):
        return a + 1.0
    if math.isinf(a):
        return b - 1.0
    return 0.5 * (a + b)


def sign_partition(
    f: UniPoly, eps: float, domain: Domain, tol: float = DEFAULT_TOL
) -> SignPartition:
    """
    Split a domain into the three eps-level sets of ``f``.

    Breakpoints are the real roots of ``f + eps`` and ``f - eps``. ``neg`` and
    ``pos`` are closed at their finite boundary points and ``mid`` is open
    there. A point where ``f`` only touches a level belongs to ``neg`` or
    ``pos`` as a degenerate closed interval.

    Args:
        f: Polynomial.
        eps: Level, strictly positive.
        domain: Base interval ``(lo, hi)``; infinite ends allowed.
        tol: Root tolerance.

    Returns:
        SignPartition over the domain.
    """
    if not eps > 0:
        raise ValidationFailure(f"eps must be positive, got {eps}")
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ValidationFailure(f"degenerate domain [{lo}, {hi}]")

    labels: Dict[float, str] = {}
    if f.degree > 0:
        for x in real_roots(f + eps, (lo, hi), tol).roots:
            labels[x] = "neg"
        for x in real_roots(f - eps, (lo, hi), tol).roots:
            labels[x] = "pos"

    pieces: List[Tuple[float, float, str, bool]] = []
    inner = sorted(x for x in labels if lo < x < hi)
    if not math.isinf(lo):
        pieces.append((lo, lo, labels.get(lo, _classify(eval_uni(f, lo), eps)), True))
    cuts = [lo] + inner + [hi]
    for i, (a, b) in enumerate(zip(cuts, cuts[1:])):
        if a < b:
            pieces.append((a, b, _classify(eval_uni(f, _interior_point(a, b)), eps), False))
        if i < len(inner):
            pieces.append((b, b, labels[b], True))
    if not math.isinf(hi):
        pieces.append((hi, hi, labels.get(hi, _classify(eval_uni(f, hi), eps)), True))

    groups: Dict[str, List[Interval]] = {"neg": [], "mid": [], "pos": []}
    run: Optional[List[Any]] = None
    for a, b, label, is_point in pieces:
        if run is not None and run[2] == label:
            run[1], run[4] = b, is_point
            continue
        if run is not None:
            groups[run[2]].append(Interval(run[0], run[1], run[3], run[4]))
        run = [a, b, label, is_point, is_point]
    if run is not None:
        groups[run[2]].append(Interval(run[0], run[1], run[3], run[4]))

    return SignPartition(
        eps=eps,
        neg=IntervalUnion.merged(groups["neg"]),
        mid=IntervalUnion.merged(groups["mid"]),
        pos=IntervalUnion.merged(groups["pos"]),
        domain=(lo, hi),
    )


# ---------------------------------------------------------------------------
# multivariate polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiPoly:
    """
    Polynomial on R^dim as a map from exponent tuples to coefficients.

    ``terms`` may be passed as a mapping; it is normalized to a sorted tuple
    of ``(exponents, coeff)`` pairs with zero coefficients dropped.
    """

    dim: int
    terms: Any = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValidationFailure("MultiPoly dimension must be at least 1")
        raw = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        acc: Dict[Tuple[int, ...], float] = {}
        for exps, coeff in raw:
            key = tuple(int(e) for e in exps)
            if len(key) != self.dim:
                raise DimensionMismatchError(
                    f"exponent {key} has length {len(key)}, expected {self.dim}"
                )
            if any(e < 0 for e in key):
                raise ValidationFailure(f"negative exponent in {key}")
            acc[key] = acc.get(key, 0.0) + float(coeff)
        normalized = tuple(sorted((k, v) for k, v in acc.items() if v != 0.0))
        object.__setattr__(self, "terms", normalized)

    @property
    def degree(self) -> int:
        return max((sum(k) for k, _ in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @cached_property
    def _exponents(self) -> np.ndarray:
        return np.array([k for k, _ in self.terms], dtype=float).reshape(-1, self.dim)

    @cached_property
    def _coeffs(self) -> np.ndarray:
        return np.array([v for _, v in self.terms], dtype=float)

    def __call__(self, x: Any) -> Any:
        return self.evaluate(x)

    def evaluate(self, x: Any) -> Any:
        """Evaluate at one point (shape ``(dim,)``) or at rows of an ``(N, dim)`` array."""
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"point dimension {pts.shape[1]} does not match {self.dim}"
            )
        out = np.zeros(pts.shape[0])
        if self.terms:
            expo = self._exponents[None, :, :]
            for start in range(0, pts.shape[0], _EVAL_BLOCK):
                block = pts[start : start + _EVAL_BLOCK]
                monomials = np.prod(block[:, None, :] ** expo, axis=2)
                out[start : start + _EVAL_BLOCK] = monomials @ self._coeffs
        return float(out[0]) if single else out

    def partial(self, alpha: Sequence[int]) -> "MultiPoly":
        """Mixed partial derivative with multi-index ``alpha``."""
        if len(alpha) != self.dim:
            raise DimensionMismatchError("multi-index length does not match dimension")
        out: Dict[Tuple[int, ...], float] = {}
        for exps, coeff in self.terms:
            if all(e >= a for e, a in zip(exps, alpha)):
                factor = math.prod(math.perm(e, a) for e, a in zip(exps, alpha))
                key = tuple(e - a for e, a in zip(exps, alpha))
                out[key] = out.get(key, 0.0) + coeff * factor
        return MultiPoly(self.dim, out)

    def shifted(self, c: float) -> "MultiPoly":
        """``f + c``."""
        acc = dict(self.terms)
        zero = (0,) * self.dim
        acc[zero] = acc.get(zero, 0.0) + c
        return MultiPoly(self.dim, acc)

    def scaled(self, lam: float) -> "MultiPoly":
        return MultiPoly(self.dim, {k: lam * v for k, v in self.terms})

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "terms": [[list(k), v] for k, v in self.terms]}


def parse_multipoly(expr: str, dim: int) -> MultiPoly:
    """
    Parse an expression in ``x1 .. x{dim}`` such as ``"x1*x2 - 1"``.

    Raises:
        ValidationFailure: If the expression is not a polynomial in those symbols.
    """
    symbols = sympy.symbols(" ".join(f"x{i + 1}" for i in range(dim)))
    if dim == 1:
        symbols = (symbols,)
    names = {str(s): s for s in symbols}
    try:
        parsed = sympy.Poly(sympy.sympify(expr, locals=names), *symbols)
        terms = {monom: float(coeff) for monom, coeff in parsed.terms()}
    except (sympy.SympifyError, sympy.PolynomialError, TypeError, ValueError) as e:
        raise ValidationFailure(f"cannot parse polynomial {expr!r}: {e}") from e
    return MultiPoly(dim, terms)


def restrict_to_segment(f: MultiPoly, x: Sequence[float], y: Sequence[float]) -> UniPoly:
    """
    Restrict ``f`` to the segment from ``x`` to ``y``: ``g(t) = f(x + t (y - x))``.

    ``g`` is recovered by interpolating ``f`` at ``deg f + 1`` Chebyshev
    nodes on ``[0, 1]``.

    Raises:
        DimensionMismatchError: If ``x`` or ``y`` do not live in R^dim.
        ValidationFailure: If ``x == y`` or ``deg f`` exceeds the cap.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != (f.dim,) or ya.shape != (f.dim,):
        raise DimensionMismatchError(
            f"segment endpoints must have shape ({f.dim},), got {xa.shape} and {ya.shape}"
        )
    if np.array_equal(xa, ya):
        raise ValidationFailure("segment endpoints coincide")
    ensure_degree(f)
    if f.is_zero:
        return UniPoly()
    d = f.degree
    k = np.arange(d + 1)
    nodes = 0.5 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * (d + 1))))
    values = f.evaluate(xa[None, :] + nodes[:, None] * (ya - xa)[None, :])
    series = np.polynomial.Chebyshev.fit(nodes, values, deg=d, domain=[0.0, 1.0])
    coef = series.convert(kind=np.polynomial.Polynomial).coef
    peak = float(np.max(np.abs(coef))) if coef.size else 0.0
    if peak == 0.0:
        return UniPoly()
    return UniPoly(tuple(P.polytrim(coef, tol=1e-13 * peak)))


def dm_norm_at(f: MultiPoly, m: int, x: Any) -> Any:
    """
    Frobenius norm of the m-th derivative tensor of ``f`` at ``x``.

    Ordered index tuples sharing a multi-index contribute the same partial,
    so each multiset is evaluated once and weighted by its multinomial count.
    Accepts a single point or an ``(N, dim)`` array.
    """
    if not 1 <= m <= f.degree:
        raise ValidationFailure(f"derivative order {m} outside [1, {f.degree}]")
    pts = np.asarray(x, dtype=float)
    total: Any = 0.0
    for combo in combinations_with_replacement(range(f.dim), m):
        alpha = [combo.count(i) for i in range(f.dim)]
        weight = math.factorial(m) / math.prod(math.factorial(a) for a in alpha)
        part = f.partial(alpha)
        if part.is_zero:
            continue
        total = total + weight * np.square(part.evaluate(pts))
    return np.sqrt(total) if np.ndim(total) else math.sqrt(total)


def taylor_bound(
    f: MultiPoly, x: Sequence[float], y: Sequence[float]
) -> Tuple[float, float]:
    """
    Both sides of the finite Taylor estimate at ``x``.

    Returns:
        ``(|f(y) - f(x)|, sum_m |D^m f(x)| |y - x|^m / m!)``.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    lhs = abs(f.evaluate(ya) - f.evaluate(xa))
    dist = float(np.linalg.norm(ya - xa))
    rhs = 0.0
    for m in range(1, f.degree + 1):
        rhs += float(dm_norm_at(f, m, xa)) * dist**m / math.factorial(m)
    return lhs, rhs


def level_set(
    f: UniPoly, y: float, domain: Domain, above: bool, tol: float = DEFAULT_TOL
) -> IntervalUnion:
    """
    Closed level set ``{f >= y}`` (``above``) or ``{f <= y}`` within a domain.
    """
    lo, hi = float(domain[0]), float(domain[1])
    g = f - y
    if g.is_zero:
        return IntervalUnion((Interval(lo, hi),))
    if g.degree == 0:
        keep = (g.lead > 0) == above
        return IntervalUnion((Interval(lo, hi),)) if keep else IntervalUnion()
    cuts = [lo] + [x for x in real_roots(g, (lo, hi), tol).roots if lo < x < hi] + [hi]
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        value = eval_uni(g, _interior_point(a, b))
        if (value >= 0) if above else (value <= 0):
            pieces.append(Interval(a, b))
    return IntervalUnion.merged(pieces)
