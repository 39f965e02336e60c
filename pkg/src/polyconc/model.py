#!/usr/bin/env python3
"""Pydantic models for weights, bodies, samplers, run configuration and results."""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)
from scipy.optimize import linprog
from typing_extensions import Annotated

INF = math.inf


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="strings")


class _Report(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


class ExpAffineWeight(_Frozen):
    """
    Exponential-affine weight with density exp(c0 + c1 t) on [lo, hi].
    """

    type: Literal["exp_affine"] = "exp_affine"
    c0: float = Field(0.0, description="Constant term of the exponent")
    c1: float = Field(-1.0, description="Slope of the exponent")
    lo: float = Field(0.0, description="Left end of the domain (finite)")
    hi: float = Field(INF, description="Right end of the domain; +inf only when c1 < 0")

    @model_validator(mode="after")
    def _check_domain(self) -> "ExpAffineWeight":
        if not math.isfinite(self.lo):
            raise ValueError("exp_affine weight needs a finite left end")
        if not self.hi > self.lo:
            raise ValueError(f"empty domain [{self.lo}, {self.hi}]")
        if math.isinf(self.hi) and not self.c1 < 0:
            raise ValueError("unbounded exp_affine domain requires c1 < 0")
        return self

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.lo, self.hi)


class PowerWeight(_Frozen):
    """
    Power weight with density t^n on [lo, hi], lo >= 0.
    """

    type: Literal["power"] = "power"
    n: int = Field(0, ge=0, description="Exponent of the density t^n")
    lo: float = Field(0.0, ge=0.0, description="Left end of the domain")
    hi: float = Field(1.0, description="Right end of the domain (finite)")

    @model_validator(mode="after")
    def _check_domain(self) -> "PowerWeight":
        if not math.isfinite(self.hi) or not self.hi > self.lo:
            raise ValueError(f"power weight needs a finite domain, got [{self.lo}, {self.hi}]")
        return self

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.lo, self.hi)


class AffinePowerWeight(_Frozen):
    """
    Affine power weight with density (alpha t + beta)^(n-1) on [lo, hi].
    """

    type: Literal["affine_power"] = "affine_power"
    alpha: float = Field(1.0, description="Slope of the affine base")
    beta: float = Field(0.0, description="Offset of the affine base")
    n: int = Field(1, ge=1, description="Ambient dimension; the density exponent is n - 1")
    lo: float = Field(0.0, description="Left end of the domain")
    hi: float = Field(1.0, description="Right end of the domain (finite)")

    @model_validator(mode="after")
    def _check_domain(self) -> "AffinePowerWeight":
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.hi > self.lo:
            raise ValueError(f"affine_power weight needs a finite domain, got [{self.lo}, {self.hi}]")
        ends = (self.alpha * self.lo + self.beta, self.alpha * self.hi + self.beta)
        if min(ends) < 0 or max(ends) <= 0:
            raise ValueError("alpha t + beta must be positive on the interior of the domain")
        return self

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.lo, self.hi)


Weight = Annotated[
    Union[ExpAffineWeight, PowerWeight, AffinePowerWeight], Field(discriminator="type")
]
WeightTypes = (ExpAffineWeight, PowerWeight, AffinePowerWeight)


# ---------------------------------------------------------------------------
# convex bodies and samplers
# ---------------------------------------------------------------------------


class Ball(_Frozen):
    type: Literal["ball"] = "ball"
    center: List[float] = Field(..., description="Center of the ball")
    radius: float = Field(1.0, gt=0.0, description="Radius")

    @property
    def dim(self) -> int:
        return len(self.center)


class Box(_Frozen):
    type: Literal["box"] = "box"
    lo: List[float] = Field(..., description="Lower corner")
    hi: List[float] = Field(..., description="Upper corner")

    @model_validator(mode="after")
    def _check_corners(self) -> "Box":
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box corners must be nonempty and of equal length")
        if any(not a < b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi in every coordinate")
        return self

    @property
    def dim(self) -> int:
        return len(self.lo)


class Simplex(_Frozen):
    type: Literal["simplex"] = "simplex"
    vertices: List[List[float]] = Field(..., description="n + 1 affinely independent vertices")

    @model_validator(mode="after")
    def _check_vertices(self) -> "Simplex":
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError("simplex needs n + 1 vertices in R^n")
        if np.linalg.matrix_rank(v[1:] - v[0]) < v.shape[1]:
            raise ValueError("simplex vertices are affinely dependent")
        return self

    @property
    def dim(self) -> int:
        return len(self.vertices[0])


class Polytope(_Frozen):
    """
    Bounded polytope {x : A x <= b} with nonempty interior.
    """

    type: Literal["polytope"] = "polytope"
    A: List[List[float]] = Field(..., description="Constraint rows a_i")
    b: List[float] = Field(..., description="Right-hand sides b_i")

    @model_validator(mode="after")
    def _check_interior(self) -> "Polytope":
        a = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] != b.shape[0] or a.shape[0] == 0:
            raise ValueError("polytope rows and right-hand sides disagree")
        n = a.shape[1]
        norms = np.linalg.norm(a, axis=1)
        if np.any(norms == 0):
            raise ValueError("polytope has a zero constraint row")
        # Chebyshev center: maximize rho subject to a_i x + rho |a_i| <= b_i
        res = linprog(
            c=np.r_[np.zeros(n), -1.0],
            A_ub=np.c_[a, norms],
            b_ub=b,
            bounds=[(None, None)] * n + [(0, None)],
            method="highs",
        )
        if res.status != 0 or -res.fun <= 1e-12:
            raise ValueError("polytope has no strictly feasible point")
        for sign in (1.0, -1.0):
            for i in range(n):
                extent = linprog(
                    c=-sign * np.eye(n)[i],
                    A_ub=a,
                    b_ub=b,
                    bounds=[(None, None)] * n,
                    method="highs",
                )
                if extent.status == 3:
                    raise ValueError("polytope is unbounded")
        return self

    @property
    def dim(self) -> int:
        return len(self.A[0])


ConvexBody = Annotated[Union[Ball, Box, Simplex, Polytope], Field(discriminator="type")]


class ChainConfig(_Frozen):
    """
    Hit-and-run chain settings.

    ``burn_in`` and ``thinning`` default to ``100 n^2`` and ``n`` for a body
    in R^n when left unset.
    """

    burn_in: Optional[int] = Field(None, ge=0, description="Steps discarded before sampling")
    thinning: Optional[int] = Field(None, ge=1, description="Keep every k-th step")
    seed: int = Field(0, ge=0, description="Chain seed")
    start: Optional[List[float]] = Field(None, description="Interior start point")
    n_chains: int = Field(1, ge=1, description="Independent chains, concatenated by index")


class GaussianSampler(_Frozen):
    type: Literal["gaussian"] = "gaussian"
    dim: int = Field(1, ge=1, description="Dimension")


class ExponentialSampler(_Frozen):
    """Product of independent Exp(1) coordinates."""

    type: Literal["exponential"] = "exponential"
    dim: int = Field(1, ge=1, description="Dimension")


class BodySampler(_Frozen):
    type: Literal["body"] = "body"
    body: ConvexBody = Field(..., description="Convex body to sample uniformly")
    chain: ChainConfig = Field(default_factory=ChainConfig, description="Chain settings")

    @property
    def dim(self) -> int:
        return self.body.dim


Sampler = Annotated[
    Union[GaussianSampler, ExponentialSampler, BodySampler], Field(discriminator="type")
]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _parse_inf(value: Any) -> Any:
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if token in ("-inf", "-infinity"):
            return -INF
    return value


class IneqReport(_Report):
    """
    Both sides of one inequality instance and the witness ratio lhs/rhs_core.
    """

    lhs: float = Field(..., ge=0.0, description="Left side")
    rhs_core: float = Field(..., ge=0.0, description="Right side with its constant stripped")
    witness_ratio: float = Field(..., ge=0.0, description="lhs / rhs_core, or inf")
    infinite: bool = Field(False, description="rhs_core = 0 < lhs")
    tag: str = Field(..., description="Inequality identifier")
    instance: Dict[str, Any] = Field(default_factory=dict, description="Serialized inputs")
    extras: Dict[str, Any] = Field(default_factory=dict, description="Auxiliary quantities")
    sub_reports: List["IneqReport"] = Field(default_factory=list, description="Component reports")
    log_lhs: Optional[float] = Field(None, description="Natural log of lhs, when computed in log space")
    log_rhs_core: Optional[float] = Field(None, description="Natural log of rhs_core")
    lhs_stderr: Optional[float] = Field(None, description="Monte Carlo stderr of lhs")
    rhs_stderr: Optional[float] = Field(None, description="Monte Carlo stderr of rhs_core")
    ratio_stderr: Optional[float] = Field(None, description="Delta-method stderr of the ratio")

    @field_validator("witness_ratio", mode="before")
    @classmethod
    def _read_ratio(cls, value: Any) -> Any:
        return _parse_inf(value)

    @field_serializer("witness_ratio")
    def _write_ratio(self, value: float) -> Union[float, str]:
        return "inf" if math.isinf(value) else value


class MCEstimate(_Report):
    value: float = Field(..., description="Point estimate")
    stderr: float = Field(..., ge=0.0, description="Sample std / sqrt(n_samples)")
    n_samples: int = Field(..., ge=1, description="Sample count")
    seed: int = Field(..., description="Seed of the sample stream")


class SmallBallRow(_Report):
    s: float = Field(..., gt=0.0, le=0.5, description="Scale s")
    estimate: MCEstimate
    profile: float = Field(..., gt=0.0, description="s |ln s|^(-d/2)")
    ratio: float = Field(..., description="estimate / profile")


class SmallBallScan(_Report):
    degree: int = Field(..., ge=1, description="Polynomial degree d")
    mean: float = Field(..., description="m_f used for centering")
    sigma: float = Field(..., description="sigma_f used for scaling")
    sigma_exact: bool = Field(..., description="sigma_f from exact moments (degree <= 2)")
    sigma_stderr: float = Field(0.0, description="Pilot stderr of sigma_f")
    rows: List[SmallBallRow] = Field(default_factory=list)
    min_ratio: float = Field(..., description="Empirical lower witness for L(d)")


class TailRow(_Report):
    t: float = Field(..., ge=1.0, description="Tail parameter")
    p_hat: float = Field(..., ge=0.0, le=1.0, description="Exceedance frequency")
    stderr: float = Field(..., ge=0.0)
    rate: Optional[float] = Field(None, description="-ln(p_hat) / t^2")
    flagged: bool = Field(False, description="p_hat < 10/N; excluded from the rate estimate")
    upper_bound: Optional[float] = Field(None, description="1/N bound when no exceedance was seen")


class TailTable(_Report):
    degree: int
    norm2: float = Field(..., description="||f||_2 used in the threshold")
    norm2_exact: bool
    n_samples: int
    seed: int
    rows: List[TailRow] = Field(default_factory=list)
    r_hat: Optional[float] = Field(None, description="Smallest unflagged rate")


class DerivativeNormReport(_Report):
    m: int = Field(..., ge=1)
    estimate: MCEstimate
    exact: Optional[float] = Field(None, description="Exact integral of |D^m f|^2 when deg f <= 2")
    sigma2: float = Field(..., description="sigma_f^2")
    ratio: float = Field(..., description="estimate / sigma_f^2")
    exact_ratio: Optional[float] = None


class CheegerRow(_Report):
    y: float
    cdf: float
    perimeter: float
    profile: float


class CheegerReport(_Report):
    label: str = "half-line Cheeger witness"
    alpha_f: float = Field(..., gt=0.0)
    delta_hat: float = Field(..., description="Infimum of the half-line profile")
    argmin_y: float
    two_interval_delta: Optional[float] = Field(None, description="Infimum over the (a, b) scan")
    two_interval_argmin: Optional[List[float]] = None
    rows: List[CheegerRow] = Field(default_factory=list)


class PoincareReport(_Report):
    lambda1: float = Field(..., gt=0.0, description="Smallest nonzero Neumann eigenvalue")
    best_constant: float = Field(..., description="1 / sqrt(lambda1)")
    alpha_f: float = Field(..., description="Mean absolute deviation of the grid distribution")
    ratio: float = Field(..., description="best_constant / alpha_f")
    cells: int


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


class SearchSpace(_Frozen):
    """
    Box-bounded instance space for the product small-ball search.

    Instances are monic polynomials given by their roots. ``exp`` places
    e^{-t} on [0, s] (s = inf when ``s_range`` is unset); ``power`` places
    t^n on [s, s + 1]; ``exp-shifted`` is ``exp`` with a searched shift r.
    """

    degree: int = Field(2, ge=1, le=12, description="Polynomial degree d")
    root_box: float = Field(5.0, gt=0.0, description="Roots range over [-R, R]")
    eps_range: Tuple[float, float] = Field((1e-3, 10.0), description="Log-scale eps range")
    s_range: Optional[Tuple[float, float]] = Field(None, description="Domain placement range")
    weight_family: Literal["exp", "power", "exp-shifted"] = Field("exp")
    power_n: int = Field(0, ge=0, description="Exponent n for the power family")
    r_range: Optional[Tuple[float, float]] = Field(None, description="Shift range; None fixes r = 0")

    @model_validator(mode="after")
    def _check_ranges(self) -> "SearchSpace":
        lo, hi = self.eps_range
        if not 0 < lo <= hi:
            raise ValueError("eps_range needs 0 < eps_lo <= eps_hi")
        if self.s_range is not None and not self.s_range[0] <= self.s_range[1]:
            raise ValueError("s_range must be ordered")
        if self.weight_family == "power" and self.s_range is not None and self.s_range[0] < 0:
            raise ValueError("power family needs s >= 0")
        if self.r_range is not None and not self.r_range[0] <= self.r_range[1]:
            raise ValueError("r_range must be ordered")
        return self


class SearchResult(_Report):
    best_ratio: float = Field(..., description="Largest finite witness ratio found")
    witness: Dict[str, Any] = Field(default_factory=dict, description="Instance attaining best_ratio")
    trials: int
    seed: int
    budget: int
    trajectory: List[float] = Field(default_factory=list, description="Best-so-far after each start")
    infinite_witnesses: List[Dict[str, Any]] = Field(
        default_factory=list, description="Instances with rhs_core = 0 < lhs"
    )


class DivergenceRow(_Report):
    a: float
    eps_star: float
    witness_ratio: float


class DivergenceTable(_Report):
    degree: int
    trunc: Optional[float] = None
    rows: List[DivergenceRow] = Field(default_factory=list)
    increasing: bool


class ProfileTable(_Report):
    degrees: List[int]
    powers: List[int]
    budget: int
    seed: int
    cells: List[List[float]] = Field(..., description="cells[i][j]: best ratio at degrees[i], powers[j]")
    nondecreasing_in_d: List[bool] = Field(default_factory=list, description="Per n, trend in d")


class RootPairReport(_Report):
    infimum: float
    argmin: Tuple[float, float]
    grid_points: int


# ---------------------------------------------------------------------------
# run configuration and envelope
# ---------------------------------------------------------------------------

Command = Literal["check", "search", "smallball", "tail", "isoperimetry", "divergence", "profile"]
IneqName = Literal[
    "product-smallball",
    "carbery-wright",
    "nsv-tail",
    "restricted-mass",
    "khinchin",
    "reverse-poincare",
    "mean-deviation",
    "mean-deviation-scan",
    "vanishing-l1",
    "shifted-exp-smallball",
    "sup-derivative",
    "sup-l2",
    "cor28",
    "derivative-norm",
    "taylor",
]


class RunConfig(_Report):
    """
    Fully resolved run configuration; echoed verbatim in every report.
    """

    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="strings")

    command: Command = Field(..., description="Command to run")
    seed: int = Field(0, ge=0, description="Master seed")
    output: Optional[str] = Field(None, description="JSON report path")
    csv: bool = Field(False, description="Write CSV tables next to the report")

    poly: Optional[str] = Field(None, description="Polynomial expression in t, or x1..xn")
    poly_roots: Optional[List[float]] = Field(None, description="Roots of a monic polynomial")
    poly_coeffs: Optional[List[float]] = Field(None, description="Ascending coefficients")

    weight: Literal["exp", "power", "affine-power"] = Field("exp", description="Weight family")
    c0: float = Field(0.0, description="exp weight: constant of the exponent")
    c1: float = Field(-1.0, description="exp weight: slope of the exponent")
    lo: float = Field(0.0, description="Weight domain left end")
    hi: float = Field(INF, description="Weight domain right end")
    power_n: int = Field(0, ge=0, description="power / affine-power exponent parameter")
    alpha_w: float = Field(1.0, description="affine-power slope")
    beta_w: float = Field(0.0, description="affine-power offset")

    body: Literal["ball", "box", "simplex"] = Field("box", description="Convex body kind")
    dim: int = Field(1, ge=1, description="Dimension of the body or Gaussian space")
    sampler: Literal["gaussian", "exponential", "body"] = Field("gaussian", description="cor28 sampler")
    j1: Tuple[float, float] = Field((-INF, 0.25), description="J1 interval")
    j3: Tuple[float, float] = Field((0.75, INF), description="J3 interval")

    ineq: IneqName = Field("product-smallball", description="Inequality for the check command")
    eps: float = Field(0.05, gt=0.0, description="Level eps")
    r: float = Field(0.0, description="Shift r")
    q: float = Field(2.0, ge=1.0, description="Norm exponent q")
    alpha: float = Field(0.01, gt=0.0, description="Carbery-Wright level alpha")
    t: float = Field(1.0, ge=1.0, description="Tail parameter t")
    eps_frac: float = Field(0.0, ge=0.0, description="Mean-deviation fraction of alpha_f")
    u: Optional[Tuple[float, float]] = Field(None, description="Restricted-mass set U")
    m: int = Field(1, ge=1, description="Derivative order")
    N: int = Field(100000, ge=1, description="Monte Carlo sample count")
    budget: int = Field(100, ge=1, description="Search starts")
    degree: int = Field(2, ge=1, le=12, description="Search degree")
    family: Literal["exp", "power", "exp-shifted"] = Field("exp", description="Search family")
    root_box: float = Field(5.0, gt=0.0, description="Search root box R")
    s_list: List[float] = Field([0.5, 0.1, 0.01], description="Small-ball scales")
    t_list: List[float] = Field([1.0, 2.0, 3.0], description="Tail parameters")
    a: List[float] = Field([10.0, 100.0, 1000.0], description="Divergence family parameters")
    trunc: Optional[float] = Field(None, description="Truncation of the divergence domain")
    grid_m: int = Field(1000, ge=2, description="Grid resolution M")
    max_degree: int = Field(6, ge=1, le=6, description="Profile degrees 1..max_degree")
    max_n: int = Field(8, ge=0, le=8, description="Profile powers 0..max_n")

    @field_validator("hi", "trunc", mode="before")
    @classmethod
    def _read_inf(cls, value: Any) -> Any:
        return _parse_inf(value)

    @field_validator("j1", "j3", "u", mode="before")
    @classmethod
    def _read_pair(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = value.split(",")
        if isinstance(value, (list, tuple)):
            return tuple(_parse_inf(v) for v in value)
        return value


class ReportEnvelope(_Report):
    tool_version: str
    config: RunConfig
    timestamp: str = Field(..., description="UTC timestamp, ISO 8601")
    results: List[Dict[str, Any]] = Field(default_factory=list)
    oracle: Optional[Dict[str, Any]] = Field(None, description="Independent cross-check")
