"""Data tables, run configuration and JSON-lines logs.

Tables are two-column whitespace-separated text (``x value``), ascending x,
with ``#`` comment lines; every file written by the CLI carries a header
recording the config hash and truncation order.  Run configuration is flat
``key = value`` text with dotted section names, no nesting.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .grid import GridFunction, GridSpec

__all__ = ["read_table", "write_table", "grid_function_from_table",
           "parse_config", "load_config", "config_hash", "ConfigError",
           "write_jsonl"]


class ConfigError(Exception):
    """Invalid or missing configuration; the message names the key."""


def write_table(path, x: np.ndarray, values: np.ndarray, meta: dict | None = None):
    path = Path(path)
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key} = {val}")
    for xi, vi in zip(x, values):
        lines.append(f"{xi:.16g} {vi:.16g}")
    path.write_text("\n".join(lines) + "\n")


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    xs, vs = [], []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"malformed table line: {raw!r}")
        xs.append(float(parts[0]))
        vs.append(float(parts[1]))
    x = np.asarray(xs)
    if np.any(np.diff(x) <= 0):
        raise ValueError("table abscissae must be strictly ascending")
    return x, np.asarray(vs)


def grid_function_from_table(spec: GridSpec, x: np.ndarray,
                             values: np.ndarray) -> GridFunction:
    """Interpolate a table onto the grid, mirroring half-line data."""
    if x[0] >= 0.0:
        x = np.concatenate([-x[::-1], x])
        values = np.concatenate([values[::-1], values])
    vals = np.interp(spec.x, x, values, left=values[0], right=values[-1])
    return GridFunction(spec, 0.5 * (vals + vals[::-1]))


# ---------------------------------------------------------------------------
# flat key-value configuration

def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for idx, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {idx}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_config(path) -> dict[str, str]:
    try:
        return parse_config(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")


def cfg_get(cfg: dict, key: str, kind=str, default=None, required: bool = False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required config key: {key}")
        return default
    raw = cfg[key]
    try:
        if kind is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return kind(raw)
    except ValueError:
        raise ConfigError(f"config key {key}: cannot parse {raw!r} as {kind.__name__}")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def write_jsonl(path, records):
    with Path(path).open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
