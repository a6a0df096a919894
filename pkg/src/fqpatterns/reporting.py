"""Output plumbing: config files, config hashes and stamped JSON/CSV writers."""

from __future__ import annotations

import ast
import csv
import hashlib
import io
import json
import math
from importlib import metadata
from pathlib import Path

import numpy as np

from .pattern_counter import _fmt

TOOL = "fqpatterns"
# keys that change how a run executes but not what it computes
VOLATILE_KEYS = frozenset({"threads", "out", "config", "budget"})


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def jsonable(x):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return _fmt(x) if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [jsonable(x.real), jsonable(x.imag)]
    return x


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; values are Python literals (numbers, lists, quoted strings) or bare words."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key.replace("_", "").replace("-", "").isalnum():
            raise ValueError(f"config line {n}: bad key {key!r}")
        try:
            out[key.replace("-", "_")] = ast.literal_eval(val)
        except (ValueError, SyntaxError):
            out[key.replace("-", "_")] = val
    return out


def config_hash(config: dict) -> str:
    stable = {k: v for k, v in config.items() if k not in VOLATILE_KEYS and v is not None}
    blob = json.dumps(jsonable(stable), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def stamp(config: dict) -> dict:
    return {"tool": TOOL, "version": tool_version(), "config_hash": config_hash(config)}


def json_text(result, config: dict) -> str:
    stable = {k: v for k, v in config.items() if k not in VOLATILE_KEYS and v is not None}
    doc = {**stamp(config), "config": jsonable(stable), "result": jsonable(result)}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def csv_text(header, rows, config: dict) -> str:
    buf = io.StringIO()
    st = stamp(config)
    buf.write(f"# {st['tool']} {st['version']} config_hash={st['config_hash']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([jsonable(v) for v in r])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
