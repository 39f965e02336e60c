#!/usr/bin/env python3

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from . import __version__
from .body import hit_and_run, pushforward_samples
from .cache import ResultCache, strip_metadata
from .checkers import (
    check_carbery_wright,
    check_khinchin,
    check_mean_deviation,
    check_nsv_tail,
    check_product_smallball,
    check_restricted_mass,
    check_reverse_poincare,
    check_shifted_exp_smallball,
    check_sup_derivative,
    check_sup_l2,
    check_vanishing_L1,
    mean_deviation_scan,
)
from .errors import EXIT_OK, NumericFailure, PolyconcError, ValidationFailure
from .gauss import (
    check_cor28_mc,
    check_gauss_tail,
    check_taylor_pathwise,
    dm_l2_gaussian,
    smallball_scan,
)
from .isoperim import ThreeSets, cheeger_profile, interval_sets, poincare_gap, three_set_check, three_set_exact, to_grid
from .model import (
    AffinePowerWeight,
    Ball,
    BodySampler,
    Box,
    ChainConfig,
    ExpAffineWeight,
    ExponentialSampler,
    GaussianSampler,
    PowerWeight,
    ReportEnvelope,
    RunConfig,
    SearchSpace,
    Simplex,
)
from .poly import IntervalUnion, MultiPoly, UniPoly, parse_multipoly, parse_unipoly, restrict_to_segment
from .report import (
    build_envelope,
    emit_table,
    product_smallball_oracle,
    result_entry,
    write_envelope,
)
from .search import divergence_table, profile_constant, worst_ratio_search
from .weights import AnyWeight

logger = logging.getLogger(__name__)

COMMANDS = ["check", "search", "smallball", "tail", "isoperimetry", "divergence", "profile"]
CACHED_COMMANDS = ("search", "profile", "divergence")


def _get_log_level() -> str:
    return os.environ.get("POLYCONC_LOG_LEVEL", "WARNING").upper()


# ---------------------------------------------------------------------------
# instance builders
# ---------------------------------------------------------------------------


@contextmanager
def _building(what: str) -> Iterator[None]:
    """Pydantic failures while building a domain model are configuration errors."""
    try:
        yield
    except ValidationError as exc:
        raise ValidationFailure(f"invalid {what}: {exc}", tag="invalid-config") from exc


def build_unipoly(cfg: RunConfig) -> UniPoly:
    if cfg.poly is not None:
        return parse_unipoly(cfg.poly)
    if cfg.poly_roots is not None:
        return UniPoly.from_roots(cfg.poly_roots)
    if cfg.poly_coeffs is not None:
        return UniPoly(tuple(cfg.poly_coeffs))
    raise ValidationFailure("no polynomial given (use --poly, --poly-roots or --poly-coeffs)")


def build_multipoly(cfg: RunConfig) -> MultiPoly:
    if cfg.poly is not None:
        return parse_multipoly(cfg.poly, cfg.dim)
    if cfg.dim == 1:
        f = build_unipoly(cfg)
        return MultiPoly(1, {(k,): c for k, c in enumerate(f.coeffs) if c != 0.0})
    raise ValidationFailure("a polynomial on R^n needs --poly with variables x1..xn")


def build_weight(cfg: RunConfig) -> AnyWeight:
    with _building("weight"):
        if cfg.weight == "exp":
            return ExpAffineWeight(c0=cfg.c0, c1=cfg.c1, lo=cfg.lo, hi=cfg.hi)
        if cfg.weight == "power":
            return PowerWeight(n=cfg.power_n, lo=cfg.lo, hi=cfg.hi)
        return AffinePowerWeight(alpha=cfg.alpha_w, beta=cfg.beta_w, n=max(cfg.power_n, 1), lo=cfg.lo, hi=cfg.hi)


def build_body(cfg: RunConfig):
    n = cfg.dim
    with _building("body"):
        if cfg.body == "ball":
            return Ball(center=[0.0] * n, radius=1.0)
        if cfg.body == "box":
            return Box(lo=[0.0] * n, hi=[1.0] * n)
        vertices = [[0.0] * n] + [[1.0 if j == i else 0.0 for j in range(n)] for i in range(n)]
        return Simplex(vertices=vertices)


def build_sampler(cfg: RunConfig):
    with _building("sampler"):
        if cfg.sampler == "gaussian":
            return GaussianSampler(dim=cfg.dim)
        if cfg.sampler == "exponential":
            return ExponentialSampler(dim=cfg.dim)
        return BodySampler(body=build_body(cfg), chain=ChainConfig(seed=cfg.seed))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _check(cfg: RunConfig) -> Tuple[List[BaseModel], Optional[Dict[str, Any]]]:
    name = cfg.ineq
    if name == "cor28":
        return [check_cor28_mc(build_multipoly(cfg), build_sampler(cfg), cfg.eps, cfg.N, cfg.seed)], None
    if name == "derivative-norm":
        return [dm_l2_gaussian(build_multipoly(cfg), cfg.m, cfg.N, cfg.seed)], None
    if name == "taylor":
        return [check_taylor_pathwise(build_multipoly(cfg), cfg.N, cfg.seed)], None

    f = build_unipoly(cfg)
    w = build_weight(cfg)
    if name == "product-smallball":
        oracle = product_smallball_oracle(f, w, cfg.eps, cfg.r)
        return [check_product_smallball(f, w, cfg.eps, cfg.r)], oracle
    if name == "shifted-exp-smallball":
        return [check_shifted_exp_smallball(f, w, cfg.eps, cfg.r)], None
    if name == "carbery-wright":
        return [check_carbery_wright(f, w, cfg.alpha)], None
    if name == "nsv-tail":
        return [check_nsv_tail(f, w, cfg.t)], None
    if name == "restricted-mass":
        U = IntervalUnion.of(cfg.u if cfg.u is not None else (w.lo, w.hi))
        return [check_restricted_mass(f, w, U)], None
    if name == "khinchin":
        return [check_khinchin(f, w, cfg.q)], None
    if name == "reverse-poincare":
        return [check_reverse_poincare(f, w)], None
    if name == "mean-deviation":
        return [check_mean_deviation(f, w, cfg.eps_frac)], None
    if name == "mean-deviation-scan":
        return list(mean_deviation_scan(f, w)), None
    if name == "vanishing-l1":
        return [check_vanishing_L1(f, w, cfg.r)], None
    if name == "sup-derivative":
        return [check_sup_derivative(f, w)], None
    return [check_sup_l2(f, w)], None


def _isoperimetry(cfg: RunConfig) -> Tuple[List[BaseModel], Optional[Dict[str, Any]]]:
    K = build_body(cfg)
    f = build_multipoly(cfg)
    sets = ThreeSets.build(interval_sets([cfg.j1]), interval_sets([cfg.j3]))
    with _building("chain"):
        chain = ChainConfig(seed=cfg.seed)
    block = hit_and_run(K, cfg.N, chain)
    mc = three_set_check(K, f, sets, cfg.N, chain, block=block)
    grid = to_grid(pushforward_samples(f, block), cfg.grid_m)
    alpha = grid.mean_abs_deviation()
    results: List[BaseModel] = [mc, cheeger_profile(grid, alpha), poincare_gap(grid)]
    oracle = None
    if cfg.dim == 1 and cfg.body == "box":
        g = restrict_to_segment(f, [0.0], [1.0])
        exact = three_set_exact(g, ExpAffineWeight(c0=0.0, c1=0.0, lo=0.0, hi=1.0), sets)
        oracle = {"method": "exact-pushforward", "three_set": result_entry(exact)}
    return results, oracle


def _compute(cfg: RunConfig) -> Tuple[List[BaseModel], Optional[Dict[str, Any]]]:
    command = cfg.command
    if command == "check":
        return _check(cfg)
    if command == "search":
        with _building("search space"):
            space = SearchSpace(
                degree=cfg.degree, root_box=cfg.root_box, weight_family=cfg.family, power_n=cfg.power_n
            )
        return [worst_ratio_search(space, cfg.budget, cfg.seed)], None
    if command == "smallball":
        return [smallball_scan(build_multipoly(cfg), cfg.s_list, cfg.N, cfg.seed)], None
    if command == "tail":
        return [check_gauss_tail(build_multipoly(cfg), cfg.t_list, cfg.N, cfg.seed)], None
    if command == "isoperimetry":
        return _isoperimetry(cfg)
    if command == "divergence":
        return [divergence_table(cfg.a, cfg.degree, cfg.trunc)], None
    if command == "profile":
        return [profile_constant(cfg.max_degree, cfg.max_n, cfg.budget, cfg.seed)], None
    raise ValidationFailure(f"unknown command {command!r}")


def _command_defaults(config: RunConfig) -> RunConfig:
    """Command-specific defaults, written back so the echo shows them."""
    if config.command == "divergence" and "degree" not in config.model_fields_set:
        return config.model_copy(update={"degree": 3})
    return config


def run(config: RunConfig, cache: Optional[ResultCache] = None) -> ReportEnvelope:
    """
    Dispatch one command and build its report envelope.

    The envelope is written to ``config.output`` (with CSV tables next to it
    when ``config.csv`` is set). Deterministic commands go through ``cache``
    when one is given.
    """
    config = _command_defaults(config)
    logger.info("running %s with seed %d", config.command, config.seed)
    key_config = json.loads(config.model_dump_json(exclude={"output", "csv"}))
    payload: Optional[Dict[str, Any]] = None
    if cache is not None and config.command in CACHED_COMMANDS:
        hit = cache.get(config.command, __version__, key_config)
        if hit is not None:
            payload = strip_metadata(hit)
    if payload is None:
        models, oracle = _compute(config)
        payload = {"results": [result_entry(m) for m in models], "oracle": oracle}
        if cache is not None and config.command in CACHED_COMMANDS:
            cache.set(config.command, __version__, key_config, payload)

    envelope = build_envelope(config, payload["results"], __version__, payload.get("oracle"))
    if config.output:
        path = write_envelope(envelope, Path(config.output))
        if config.csv:
            emit_table(envelope, path.parent, path.stem)
    return envelope


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _comma_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyconc",
        allow_abbrev=False,
        description="Numerical checks of polynomial inequalities under log-concave measures",
    )
    parser.add_argument("command", choices=COMMANDS, help="Command to run")
    parser.add_argument("--config", type=str, help="JSON or YAML run configuration")
    parser.add_argument("--seed", type=int, help="Master seed (default: 0)")
    parser.add_argument("--output", type=str, help="Path of the JSON report")
    parser.add_argument("--csv", action="store_true", default=None, help="Write CSV tables next to the report")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log level (default: POLYCONC_LOG_LEVEL or WARNING)",
    )
    parser.add_argument("--cache", action="store_true", help="Reuse cached search/profile/divergence results")
    parser.add_argument("--prune-cache", action="store_true", help="Remove expired cache entries first")
    parser.add_argument("--clear-cache", action="store_true", help="Empty the cache first")

    group = parser.add_argument_group("instance")
    group.add_argument("--poly", type=str, help="Polynomial expression in t (or x1..xn)")
    group.add_argument("--poly-roots", type=_comma_list, help="Comma-separated roots of a monic polynomial")
    group.add_argument("--poly-coeffs", type=_comma_list, help="Comma-separated ascending coefficients")
    group.add_argument("--weight", choices=["exp", "power", "affine-power"], help="Weight family")
    for flag in ("--c0", "--c1", "--lo", "--alpha-w", "--beta-w"):
        group.add_argument(flag, type=float)
    group.add_argument("--hi", type=str, help="Right end of the domain ('inf' allowed)")
    group.add_argument("--power-n", type=int)
    group.add_argument("--body", choices=["ball", "box", "simplex"])
    group.add_argument("--dim", type=int)
    group.add_argument("--sampler", choices=["gaussian", "exponential", "body"])
    group.add_argument("--j1", type=_comma_list, help="J1 as 'lo,hi' (use --j1=-inf,0.25)")
    group.add_argument("--j3", type=_comma_list, help="J3 as 'lo,hi'")

    group = parser.add_argument_group("numeric")
    group.add_argument("--ineq", type=str, help="Inequality for the check command")
    for flag in ("--eps", "--r", "--q", "--alpha", "--t", "--eps-frac", "--root-box"):
        group.add_argument(flag, type=float)
    group.add_argument("--u", type=_comma_list, help="Restricted-mass set U as 'lo,hi'")
    for flag in ("--m", "--N", "--budget", "--degree", "--grid-m", "--max-degree", "--max-n"):
        group.add_argument(flag, type=int)
    group.add_argument("--family", choices=["exp", "power", "exp-shifted"])
    group.add_argument("--s-list", type=_comma_list)
    group.add_argument("--t-list", type=_comma_list)
    group.add_argument("--a", type=_comma_list)
    group.add_argument("--trunc", type=str)
    return parser


def _load_config_file(path: str) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.is_file():
        raise ValidationFailure(f"config file not found: {path}")
    text = file_path.read_text(encoding="utf-8")
    try:
        if file_path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ValidationFailure(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationFailure("config file must hold a mapping")
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """File values first, then every flag that was given."""
    data: Dict[str, Any] = _load_config_file(args.config) if args.config else {}
    skip = {"config", "log_level", "cache", "prune_cache", "clear_cache"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        data[key] = value
    return RunConfig.model_validate(data)


def _print_error(exc: PolyconcError) -> int:
    error = exc.to_dict()
    print(json.dumps(error))
    return int(error["exit_code"])


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the polyconc CLI."""
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level or _get_log_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        cache = None
        if args.cache or args.prune_cache or args.clear_cache:
            cache = ResultCache()
            if args.clear_cache:
                logger.info("cache cleared: %s", cache.clear_all())
            if args.prune_cache:
                logger.info("cache pruned: %s", cache.remove_stale())
        config = resolve_config(args)
    except ValidationError as exc:
        return _print_error(ValidationFailure(str(exc), tag="invalid-config"))
    except PolyconcError as exc:
        return _print_error(exc)

    try:
        envelope = run(config, cache if args.cache else None)
    except PolyconcError as exc:
        return _print_error(exc)
    except (ValidationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        # result models reject non-finite values; arithmetic ran out of range
        logger.debug("computation failed", exc_info=True)
        return _print_error(NumericFailure(f"{type(exc).__name__}: {exc}"))

    print(envelope.model_dump_json(indent=2))
    return EXIT_OK
