"""Result tables: flat row dicts to CSV or JSON and back.

Columns are the union of row keys, canonical names first; accuracy-like
fields are fixed to 4 decimals so reports diff cleanly across runs.
"""
from __future__ import annotations

import csv
import json
from typing import Dict, List, Sequence

from ..errors import ValidationError

__all__ = ["emit_report", "load_report", "FORMATS"]

FORMATS = ("csv", "json")

_CANONICAL = (
    "experiment",
    "configuration",
    "train_on",
    "holdout",
    "mode",
    "seed",
    "lam",
    "mu",
    "accuracy",
    "n",
)
_FLOAT4 = ("accuracy", "lam", "mu")


def _columns(rows: Sequence[Dict]) -> List[str]:
    seen = []
    for key in _CANONICAL:
        if any(key in r for r in rows):
            seen.append(key)
    extras = sorted({k for r in rows for k in r} - set(seen))
    return seen + extras


def emit_report(rows: Sequence[Dict], path: str, fmt: str = "csv") -> None:
    if fmt not in FORMATS:
        raise ValidationError(f"unknown report format {fmt!r}; pick from {FORMATS}")
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(list(rows), fh, indent=2)
            fh.write("\n")
        return
    cols = _columns(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            out = []
            for c in cols:
                v = r.get(c, "")
                if c in _FLOAT4 and v != "":
                    v = f"{float(v):.4f}"
                out.append(v)
            w.writerow(out)


def load_report(path: str) -> List[Dict]:
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    with open(path, newline="") as fh:
        return [dict(r) for r in csv.DictReader(fh)]
