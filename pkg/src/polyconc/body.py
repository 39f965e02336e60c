#!/usr/bin/env python3
"""
Convex bodies: membership, chords and uniform sampling by hit-and-run.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, List, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from . import rng
from .errors import DimensionMismatchError, NumericFailure, PreconditionError, ValidationFailure
from .model import Ball, Box, ChainConfig, Polytope, Simplex
from .parallel import map_ordered
from .poly import MultiPoly

logger = logging.getLogger(__name__)

AnyBody = Union[Ball, Box, Simplex, Polytope]

# slack is recomputed from scratch this often to stop drift
_RESYNC_STEPS = 1000


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    """Sorted sample values of a pushforward distribution."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValidationFailure("empirical distribution needs at least one sample")
        if np.any(np.diff(v) < 0):
            raise ValidationFailure("empirical values must be sorted")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return int(self.values.size)

    def cdf(self, y: Any) -> Any:
        out = np.searchsorted(self.values, np.asarray(y, dtype=float), side="right") / self.N
        return float(out) if np.ndim(out) == 0 else out


def _check_dim(K: AnyBody, x: np.ndarray) -> None:
    if x.shape[-1] != K.dim:
        raise DimensionMismatchError(f"point dimension {x.shape[-1]} does not match body dimension {K.dim}")


def halfspaces(K: AnyBody) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``(A, b)`` with unit-norm rows such that ``K = {x : A x <= b}``.

    Raises:
        ValidationFailure: For a ball, which has no finite halfspace form.
    """
    if isinstance(K, Box):
        n = K.dim
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([np.asarray(K.hi), -np.asarray(K.lo)])
        return A, b
    if isinstance(K, Simplex):
        V = np.asarray(K.vertices, dtype=float)
        v0 = V[0]
        inv = np.linalg.inv((V[1:] - v0).T)
        A = np.vstack([-inv, inv.sum(axis=0, keepdims=True)])
        b = np.concatenate([-inv @ v0, [1.0 + inv.sum(axis=0) @ v0]])
    elif isinstance(K, Polytope):
        A = np.asarray(K.A, dtype=float)
        b = np.asarray(K.b, dtype=float)
    else:
        raise ValidationFailure("a ball has no halfspace form")
    norms = np.linalg.norm(A, axis=1)
    return A / norms[:, None], b / norms


def interior_point(K: AnyBody) -> np.ndarray:
    """Center, midpoint, centroid or Chebyshev center, by kind."""
    if isinstance(K, Ball):
        return np.asarray(K.center, dtype=float)
    if isinstance(K, Box):
        return 0.5 * (np.asarray(K.lo) + np.asarray(K.hi))
    if isinstance(K, Simplex):
        return np.mean(np.asarray(K.vertices, dtype=float), axis=0)
    A, b = halfspaces(K)
    n = K.dim
    res = linprog(
        c=np.r_[np.zeros(n), -1.0],
        A_ub=np.c_[A, np.ones(len(b))],
        b_ub=b,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        raise NumericFailure(f"Chebyshev center LP failed: {res.message}")
    return np.asarray(res.x[:n])


def contains(K: AnyBody, x: Any) -> Any:
    """Membership of one point or of each row of an ``(N, n)`` array."""
    pts = np.asarray(x, dtype=float)
    _check_dim(K, pts)
    P2 = np.atleast_2d(pts)
    if isinstance(K, Ball):
        c = np.asarray(K.center)
        hit = np.sum((P2 - c) ** 2, axis=1) <= K.radius**2
    elif isinstance(K, Box):
        hit = np.all((P2 >= np.asarray(K.lo)) & (P2 <= np.asarray(K.hi)), axis=1)
    elif isinstance(K, Polytope):
        hit = np.all(P2 @ np.asarray(K.A).T <= np.asarray(K.b), axis=1)
    else:
        V = np.asarray(K.vertices, dtype=float)
        lam = np.linalg.solve((V[1:] - V[0]).T, (P2 - V[0]).T).T
        hit = np.all(lam >= -1e-12, axis=1) & (lam.sum(axis=1) <= 1.0 + 1e-12)
    return bool(hit[0]) if pts.ndim == 1 else hit


def _interior(K: AnyBody, x: np.ndarray) -> bool:
    if isinstance(K, Ball):
        return float(np.sum((x - np.asarray(K.center)) ** 2)) < K.radius**2
    A, b = halfspaces(K)
    return bool(np.all(A @ x < b))


def _ball_chord(K: Ball, x: np.ndarray, u: np.ndarray) -> Tuple[float, float]:
    d = x - np.asarray(K.center)
    beta = float(u @ d)
    gamma = float(d @ d) - K.radius**2
    disc = beta * beta - gamma
    if disc <= 0:
        raise NumericFailure("chord of a ball is empty")
    root = math.sqrt(disc)
    return -beta - root, -beta + root


def _slack_chord(slack: np.ndarray, au: np.ndarray) -> Tuple[float, float]:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = slack / au
    up = au > 0
    down = au < 0
    if not np.any(up) or not np.any(down):
        raise NumericFailure("chord is unbounded")
    return float(np.max(ratios[down])), float(np.min(ratios[up]))


def chord(K: AnyBody, x: Any, u: Any) -> Tuple[float, float]:
    """
    Maximal ``(t_lo, t_hi)`` with ``x + t u`` in ``K``.

    Raises:
        PreconditionError: If ``x`` is not an interior point.
    """
    xa = np.asarray(x, dtype=float)
    ua = np.asarray(u, dtype=float)
    _check_dim(K, xa)
    _check_dim(K, ua)
    if abs(float(np.linalg.norm(ua)) - 1.0) > 1e-9:
        raise ValidationFailure("chord direction must be a unit vector")
    if not _interior(K, xa):
        raise PreconditionError("chord start is not an interior point")
    if isinstance(K, Ball):
        return _ball_chord(K, xa, ua)
    A, b = halfspaces(K)
    return _slack_chord(b - A @ xa, A @ ua)


def _resolve(K: AnyBody, cfg: ChainConfig) -> Tuple[int, int, np.ndarray]:
    n = K.dim
    burn = cfg.burn_in if cfg.burn_in is not None else 100 * n * n
    thin = cfg.thinning if cfg.thinning is not None else n
    start = np.asarray(cfg.start, dtype=float) if cfg.start is not None else interior_point(K)
    _check_dim(K, start)
    if not _interior(K, start):
        raise PreconditionError("chain start is not an interior point")
    return burn, thin, start


def _run_chain(K: AnyBody, count: int, burn: int, thin: int, start: np.ndarray,
               seed: int, index: int) -> np.ndarray:
    gen = rng.stream(seed, rng.CHAIN, index)
    n = K.dim
    x = start.copy()
    out = np.empty((count, n))
    is_ball = isinstance(K, Ball)
    if not is_ball:
        A, b = halfspaces(K)
        slack = b - A @ x
    kept = 0
    step = 0
    total = burn + count * thin
    while step < total:
        u = gen.standard_normal(n)
        u /= np.linalg.norm(u)
        if is_ball:
            t_lo, t_hi = _ball_chord(K, x, u)
        else:
            au = A @ u
            t_lo, t_hi = _slack_chord(slack, au)
        t = t_lo + (t_hi - t_lo) * gen.random()
        x = x + t * u
        step += 1
        if not is_ball:
            slack = slack - t * au
            if step % _RESYNC_STEPS == 0:
                slack = b - A @ x
        if step > burn and (step - burn) % thin == 0:
            out[kept] = x
            kept += 1
    return out


def hit_and_run(K: AnyBody, N: int, cfg: ChainConfig) -> np.ndarray:
    """
    ``N`` approximately uniform points of ``K`` from hit-and-run chains.

    Chains are keyed by ``(cfg.seed, chain index)`` and their blocks are
    concatenated in index order; each step picks a uniform direction and a
    uniform point on the chord through the current point.
    """
    if N < 1:
        raise ValidationFailure("hit_and_run needs N >= 1")
    burn, thin, start = _resolve(K, cfg)
    chains = min(cfg.n_chains, N)
    counts = [N // chains + (1 if k < N % chains else 0) for k in range(chains)]
    logger.debug("hit-and-run: %d chains, burn_in=%d, thinning=%d", chains, burn, thin)
    blocks = map_ordered(
        lambda k: _run_chain(K, counts[k], burn, thin, start, cfg.seed, k), list(range(chains))
    )
    return np.vstack(blocks)


def pushforward_samples(f: MultiPoly, block: np.ndarray) -> EmpiricalDist:
    """Sorted values of ``f`` on a sample block (stable order for ties)."""
    pts = np.atleast_2d(np.asarray(block, dtype=float))
    if pts.shape[1] != f.dim:
        raise DimensionMismatchError(f"sample dimension {pts.shape[1]} does not match {f.dim}")
    values = np.asarray(f.evaluate(pts), dtype=float)
    return EmpiricalDist(np.sort(values, kind="stable"))
