"""Deterministic CSV and JSON writers for command output."""

from __future__ import annotations

import json
import math
from pathlib import Path


def fmt(x) -> str:
    if x is None:
        return "inf"
    if isinstance(x, str):
        return x
    if isinstance(x, (bool,)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def write_csv(path: str | Path, header, rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(path: str | Path, record: dict) -> Path:
    Path(path).write_text(json.dumps(_clean(record), indent=2, sort_keys=True) + "\n")
    return Path(path)
