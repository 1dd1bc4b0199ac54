"""Shared helpers for the JSON file formats.

All formats carry a "format" tag ("rig-game/1", "rig-morphism/1",
"rig-strategy/1", "rig-reif/1", "rig-tree/1").  Rationals are encoded as
strings like "1/2" or "1".  Output files embed a run manifest so that a rerun
with identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import SchemaError

TOOL_VERSION = "0.1.0"


def frac_to_str(x: Fraction) -> str:
    return str(Fraction(x))


def frac_from_str(s, path="") -> Fraction:
    try:
        return Fraction(str(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"not a rational: {s!r}", path) from exc


def expect_dict(obj, path):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object, got {type(obj).__name__}", path)
    return obj


def expect_list(obj, path):
    if not isinstance(obj, list):
        raise SchemaError(f"expected an array, got {type(obj).__name__}", path)
    return obj


def expect_str(obj, path):
    if not isinstance(obj, str):
        raise SchemaError(f"expected a string, got {type(obj).__name__}", path)
    return obj


def expect_format(data, tag, path="format"):
    expect_dict(data, "")
    got = data.get("format")
    if got != tag:
        raise SchemaError(f"expected format {tag!r}, got {got!r}", path)


def get_field(data, key, path_prefix=""):
    if key not in data:
        raise SchemaError("missing field", f"{path_prefix}{key}")
    return data[key]


def load_json_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", str(path)) from exc


def dump_json(data) -> str:
    """Canonical serialization: sorted keys, fixed separators, newline at end."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json_file(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(data))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance block embedded in every output produced by the CLI.

    Timing is measured per run and reported on stderr only; it is excluded
    from embedded manifests so reruns with equal inputs stay byte-identical.
    """

    command: str
    inputs: dict = field(default_factory=dict)
    seed: int | None = None
    options: dict = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    def add_input(self, name, path, fmt):
        self.inputs[name] = {
            "path": str(path),
            "sha256": sha256_file(path),
            "format": fmt,
        }

    def to_json(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "options": self.options,
            "tool_version": self.tool_version,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out
