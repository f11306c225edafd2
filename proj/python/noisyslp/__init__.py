"""Python front end for the noise-tolerant SLP trust-region solver.

Configs are the same JSON documents the ``noisyslp`` CLI reads; pass a dict,
a JSON string, or a path.
"""

from __future__ import annotations

import json
import os
from typing import Any, Mapping, Optional, Union

from . import _core
from ._core import (
    ConfigError,
    InvalidArgument,
    PgmError,
    PolyhedralSpec,
    Problem,
    SolverError,
    criticality,
    eval_omega,
    parse_pgm,
    read_pgm,
    solve_lp,
    synthetic_image,
    write_pgm,
)

__all__ = [
    "ConfigError",
    "InvalidArgument",
    "PgmError",
    "PolyhedralSpec",
    "Problem",
    "SolverError",
    "criticality",
    "eval_omega",
    "load_config",
    "make_problem",
    "parse_pgm",
    "read_pgm",
    "solve",
    "solve_lp",
    "sweep",
    "synthetic_image",
    "verify",
    "write_pgm",
]

ConfigLike = Union[str, os.PathLike, Mapping[str, Any]]


def _config_text(config: ConfigLike) -> str:
    if isinstance(config, Mapping):
        return json.dumps(config)
    text = os.fspath(config)
    if text.lstrip().startswith("{"):
        return text
    try:
        with open(text, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {text}: {e}") from e


def load_config(config: ConfigLike) -> dict:
    """Validated config with every default filled in."""
    return json.loads(_core.normalize_config(_config_text(config)))


def make_problem(name: str, **params: Any) -> Problem:
    return _core.make_problem(name, json.dumps(params))


def solve(config: ConfigLike, seed: Optional[int] = None) -> dict:
    """One seeded run. Returns termination, x_final, per-iteration records and the outcome."""
    return _core.solve_json(_config_text(config), seed)


def sweep(config: ConfigLike, jobs: int = 1) -> dict:
    """Runs the config's sweep grid; the result has the same layout as the CLI's JSON file."""
    out = _core.sweep_json(_config_text(config), jobs)
    result = json.loads(out["json"])
    result["runs_csv"] = out["runs_csv"]
    result["summary_csv"] = out["summary_csv"]
    return result


def verify(seed: int = 0, instances: int = 200, inject_m2_half: bool = False) -> list:
    return _core.verify(seed, instances, inject_m2_half)
