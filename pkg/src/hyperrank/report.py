"""Deterministic JSON and CSV output.

Floats are written with 17 significant digits so a rerun with the same
config and seed reproduces the file byte for byte.  Non-finite floats
become ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"  # keep floats distinguishable from integers
    return text


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(path, command: str, body: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **body}
    text = dumps(doc) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def pairs_csv(pairs) -> str:
    """CSV table of pair records (dicts as in ``BilipschitzReport.to_dict()``)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "p", "q", "d_x", "d_y", "ratio", "method", "error"])
    for rec in pairs:
        w.writerow([
            rec["index"],
            " ".join(format_float(v) for v in rec["p"]),
            " ".join(format_float(v) for v in rec["q"]),
            format_float(rec["d_x"]),
            "" if rec["d_y"] is None else format_float(rec["d_y"]),
            "" if rec["ratio"] is None else format_float(rec["ratio"]),
            rec.get("method", ""),
            rec.get("error") or "",
        ])
    return buf.getvalue()
