"""Config-file loading and object construction for the command line runner.

Run configurations are TOML or JSON documents with a ``task`` name and one
section per concern (``field``, ``weights``, plus a section named after the
task).  This module turns those dictionaries into package objects and raises
ConfigError with the offending key path on any malformed input.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .errors import ConfigError, HessianLabError
from .gridfield import read_grid_file
from .potential import (
    PolynomialPotential,
    PotentialField,
    SumPotential,
    WeightData,
    builtin_family,
)

TASKS = ("jet", "curvature", "verify", "solve", "reconstruct", "scan")


def load_config(path) -> dict:
    """Parse a .toml or .json run configuration."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    suffix = p.suffix.lower()
    try:
        if suffix == ".json":
            return json.loads(raw.decode("utf-8"))
        if suffix == ".toml":
            return _toml.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    raise ConfigError(f"config {p} must end in .toml or .json")


def require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return cfg[key]


def field_from_config(cfg: dict, base_dir: Optional[Path] = None) -> PotentialField:
    """Build a potential from a [field] table.

    ``family`` selects a certified built-in, ``polynomial`` (terms given as
    {expo, coeff} rows), ``sum`` (list of subfields), or ``grid`` (a sampled
    potential file written by this package).
    """
    if not isinstance(cfg, dict):
        raise ConfigError("[field] must be a table")
    family = require(cfg, "family", "field")
    params = {k: v for k, v in cfg.items() if k != "family"}
    try:
        if family == "polynomial":
            terms = {}
            for row in require(params, "terms", "field"):
                expo = tuple(int(t) for t in require(row, "expo", "field.terms"))
                terms[expo] = float(require(row, "coeff", "field.terms"))
            return PolynomialPotential(terms, n=int(require(params, "n", "field")))
        if family == "sum":
            subs = [
                field_from_config(sub, base_dir)
                for sub in require(params, "fields", "field")
            ]
            return SumPotential(subs)
        if family == "grid":
            path = Path(require(params, "path", "field"))
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_grid_file(str(path))
        if family == "product":
            factors = [
                {"name": require(f, "family", "field.factors"),
                 "params": {k: v for k, v in f.items() if k != "family"}}
                for f in require(params, "factors", "field")
            ]
            return builtin_family("product", {"factors": factors})
        return builtin_family(family, params)
    except ConfigError:
        raise
    except (HessianLabError, OSError) as exc:
        raise ConfigError(f"[field] family {family!r}: {exc}") from exc


def weights_from_config(cfg: Optional[dict], field: PotentialField) -> WeightData:
    """Weights from a [weights] table, defaulting to the field's own."""
    if cfg is None:
        if field.certified_weights is not None:
            return field.certified_weights
        raise ConfigError("field is not certified: a [weights] table is required")
    try:
        return WeightData(
            v=require(cfg, "v", "weights"),
            xi=require(cfg, "xi", "weights"),
            c=float(require(cfg, "c", "weights")),
        )
    except HessianLabError as exc:
        raise ConfigError(f"[weights]: {exc}") from exc
