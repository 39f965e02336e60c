#!/usr/bin/env python3
"""
Report envelopes, CSV tables and the trapezoid oracle.
"""

import csv
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.integrate import trapezoid

from .model import ReportEnvelope, RunConfig
from .poly import UniPoly, eval_uni
from .weights import AnyWeight, density, truncation_point

logger = logging.getLogger(__name__)

ORACLE_PANELS = 10**6

# how pydantic writes non-finite floats in JSON mode
_JSON_SPECIALS = ("Infinity", "-Infinity", "NaN")

# tabular result kind -> (file stem, header)
_TABLES: Dict[str, Tuple[str, List[str]]] = {
    "SmallBallScan": ("smallball", ["s", "estimate", "stderr", "profile", "ratio"]),
    "DivergenceTable": ("divergence", ["a", "eps_star", "witness_ratio"]),
    "TailTable": ("tail", ["t", "p_hat", "stderr", "rate", "flagged"]),
    "CheegerReport": ("cheeger", ["y", "cdf", "perimeter", "profile"]),
    "ProfileTable": ("profile", ["degree", "n", "best_ratio"]),
    "SearchResult": ("search", ["start", "best_ratio"]),
}


def _json_ready(model: BaseModel) -> Dict[str, Any]:
    # JSON mode turns infinities into strings
    return json.loads(model.model_dump_json())


def result_entry(model: BaseModel) -> Dict[str, Any]:
    """Serialized result tagged with its kind."""
    entry = {"kind": type(model).__name__}
    entry.update(_json_ready(model))
    return entry


def build_envelope(
    config: RunConfig,
    results: Sequence[Dict[str, Any]],
    version: str,
    oracle: Optional[Dict[str, Any]] = None,
) -> ReportEnvelope:
    return ReportEnvelope(
        tool_version=version,
        config=config,
        timestamp=datetime.now(timezone.utc).isoformat(),
        results=list(results),
        oracle=oracle,
    )


def results_section(envelope: ReportEnvelope) -> str:
    """Canonical JSON of everything but the timestamp."""
    payload = json.loads(envelope.model_dump_json())
    payload.pop("timestamp", None)
    return json.dumps(payload, sort_keys=True)


def write_envelope(envelope: ReportEnvelope, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(envelope.model_dump_json(indent=2), encoding="utf-8")
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str) and value not in _JSON_SPECIALS:
        return value
    x = float(value)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(value, int):
        return str(value)
    return format(x, ".17g")


def _rows(entry: Dict[str, Any]) -> List[List[Any]]:
    kind = entry["kind"]
    if kind == "SmallBallScan":
        return [
            [r["s"], r["estimate"]["value"], r["estimate"]["stderr"], r["profile"], r["ratio"]]
            for r in entry.get("rows", [])
        ]
    if kind == "DivergenceTable":
        return [[r["a"], r["eps_star"], r["witness_ratio"]] for r in entry.get("rows", [])]
    if kind == "TailTable":
        return [[r["t"], r["p_hat"], r["stderr"], r["rate"], r["flagged"]] for r in entry.get("rows", [])]
    if kind == "CheegerReport":
        return [[r["y"], r["cdf"], r["perimeter"], r["profile"]] for r in entry.get("rows", [])]
    if kind == "ProfileTable":
        return [
            [d, n, entry["cells"][i][j]]
            for i, d in enumerate(entry.get("degrees", []))
            for j, n in enumerate(entry.get("powers", []))
        ]
    return [[i, value] for i, value in enumerate(entry.get("trajectory", []))]


def emit_table(envelope: ReportEnvelope, directory: Path, stem: str = "report") -> List[Path]:
    """
    Write one CSV per tabular result.

    Files are named ``<stem>.<kind>[.<index>].csv``; numbers are written with
    17 significant digits and infinities as ``inf``. A table without rows
    gives a header-only file.

    Returns:
        Paths of the written files.
    """
    directory.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    seen: Dict[str, int] = {}
    for entry in envelope.results:
        spec = _TABLES.get(entry.get("kind", ""))
        if spec is None:
            continue
        name, header = spec
        count = seen.get(name, 0)
        seen[name] = count + 1
        suffix = f".{count}" if count else ""
        path = directory / f"{stem}.{name}{suffix}.csv"
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in _rows(entry):
                writer.writerow([_cell(v) for v in row])
        written.append(path)
        logger.debug("wrote table %s", path)
    return written


def product_smallball_oracle(
    f: UniPoly, w: AnyWeight, eps: float, r: float = 0.0, panels: int = ORACLE_PANELS
) -> Dict[str, Any]:
    """
    Trapezoid evaluation of both sides of the product small-ball check.

    Unbounded domains are cut at the truncation point of the weight.
    Densities too steep for floating point give a ``skipped`` entry instead.
    """
    hi = w.hi if math.isfinite(w.hi) else truncation_point(w, max(f.degree, 1))
    t = np.linspace(w.lo, hi, panels + 1)
    rho = np.asarray(density(w, t), dtype=float)
    if not np.all(np.isfinite(rho)):
        return {"method": "trapezoid", "panels": panels, "skipped": "weight density overflows on the grid"}
    v = np.asarray(eval_uni(f, t), dtype=float)
    neg = trapezoid(rho * (v <= -eps), t)
    pos = trapezoid(rho * (v >= eps), t)
    mid = trapezoid(rho * (np.abs(v) < eps), t)
    dev = trapezoid(rho * np.abs(v - r), t)
    lhs = eps * neg * pos
    rhs = mid * dev
    ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
    return {
        "method": "trapezoid",
        "panels": panels,
        "lhs": float(lhs),
        "rhs_core": float(rhs),
        "witness_ratio": "inf" if math.isinf(ratio) else float(ratio),
    }
