"""Run configuration: JSON schema, loading and validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .operator import KERNEL_FORMS, OperatorParams, check_params
from .tree import (Explicit, ExplicitDiameters, LevelRegular, PAdic, RandomBounded, TreeSpec,
                   TreeSpecError, build_tree, load_explicit)

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cantorvp run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "tree": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "depth"],
            "properties": {
                "family": {"enum": ["padic", "level_regular", "explicit", "random"]},
                "depth": {"type": "integer"},
                "p": {"type": "integer"},
                "branching": {"type": "array", "items": {"type": "integer"}},
                "counts": {"type": ["array", "object"]},
                "file": {"type": "string"},
                "low": {"type": "integer"},
                "high": {"type": "integer"},
                "seed": {"type": "integer", "minimum": 0},
                "metric": {"enum": ["canonical", "baire"]},
                "diameters": {"type": ["array", "object"]},
            },
        },
        "s": {"type": "number"},
        "kernel_form": {"enum": list(KERNEL_FORMS)},
        "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "x0": {"type": "string"},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "paths": {"type": "integer", "minimum": 1},
        "zeta_levels": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "abscissa": {"type": "number", "exclusiveMinimum": 0},
                "factorisation": {"type": "number", "exclusiveMinimum": 0},
                "green_band": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "s": 3.0,
    "kernel_form": "general",
    "times": [0.1, 1.0],
    "seed": 0,
    "x0": "",
    "T": 1.0,
    "paths": 10000,
}


class ConfigError(ValueError):
    """Invalid configuration; carries a field path for the diagnostic."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class RunConfig:
    tree: TreeSpec
    s: float = 3.0
    kernel_form: str = "general"
    times: list = field(default_factory=lambda: [0.1, 1.0])
    output_dir: Optional[str] = None
    seed: int = 0
    x0: str = ""
    T: float = 1.0
    paths: int = 10000
    zeta_levels: Optional[int] = None
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def params(self) -> OperatorParams:
        return OperatorParams(self.s, self.kernel_form)

    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _tree_spec(t: dict, base: Path) -> TreeSpec:
    fam = t["family"]
    need = {"padic": ["p"], "level_regular": ["branching"], "random": ["low", "high"]}
    for key in need.get(fam, []):
        if key not in t:
            raise ConfigError(f"tree.{key}", f"required for family {fam!r}")
    if fam == "padic":
        family = PAdic(t["p"])
    elif fam == "level_regular":
        family = LevelRegular(t["branching"])
    elif fam == "random":
        family = RandomBounded(t["low"], t["high"], t.get("seed", 0))
    else:
        if "counts" in t:
            family = load_explicit(t["counts"])
        elif "file" in t:
            path = Path(t["file"])
            path = path if path.is_absolute() else base / path
            if not path.exists():
                raise ConfigError("tree.file", f"no such file {str(path)!r}")
            family = load_explicit(path)
        else:
            raise ConfigError("tree", "explicit family needs 'counts' or 'file'")
    if "diameters" in t:
        if "metric" in t:
            raise ConfigError("tree.metric", "give either 'metric' or 'diameters', not both")
        metric = ExplicitDiameters(t["diameters"])
    else:
        metric = t.get("metric", "canonical")
    return TreeSpec(family, t["depth"], metric)


def parse_config(data: dict, base: Path = Path(".")) -> RunConfig:
    """Validate ``data`` against the schema and every tree invariant, then build a RunConfig."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(where, exc.message) from None
    if "tree" not in data:
        raise ConfigError("tree", "missing tree specification")
    merged = {**DEFAULTS, **data}
    try:
        spec = _tree_spec(data["tree"], base)
        tree = build_tree(spec)
    except TreeSpecError as exc:
        raise ConfigError("tree", str(exc)) from None
    try:
        check_params(tree, OperatorParams(merged["s"], merged["kernel_form"]))
    except ValueError as exc:
        raise ConfigError("kernel_form", str(exc)) from None
    levels = merged.get("zeta_levels")
    if levels is not None and levels > spec.depth:
        raise ConfigError("zeta_levels", f"{levels} exceeds the tree depth {spec.depth}")
    return RunConfig(
        tree=spec, s=float(merged["s"]), kernel_form=merged["kernel_form"],
        times=[float(t) for t in merged["times"]], output_dir=merged.get("output_dir"),
        seed=int(merged["seed"]), x0=merged["x0"], T=float(merged["T"]),
        paths=int(merged["paths"]), zeta_levels=levels,
        tolerances=dict(merged.get("tolerances", {})), raw=merged,
    )


def load_config(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
