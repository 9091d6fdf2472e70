"""Dataset files: rasters in panels.bin, symbolic truth in manifest.json.

panels.bin layout (little endian):

    magic   4 bytes  b"RPM1"
    count   u32      number of instances
    height  u16
    width   u16
    data    count * 16 * height * width bytes, uint8 grayscale;
            per instance the 8 context panels (row-major, missing panel
            excluded) then the 8 candidate panels

manifest.json holds one record per instance: configuration name, generator
seed, answer label, the annotation as [slot, attribute, family, params]
entries, and the 18 meta-target bits.  Loading re-derives every instance
from (config, seed) and cross-checks label/annotation/meta so a stale or
edited manifest cannot silently mislabel images.
"""
from __future__ import annotations

import json
import os
import struct
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import FormatError
from .generator import generate_puzzle
from .types import Attribute, Config, Puzzle, Rule, RuleFamily, RuleSpec

__all__ = [
    "save_dataset",
    "load_dataset",
    "write_panels",
    "read_panels",
    "annotation_to_json",
    "annotation_from_json",
]

MAGIC = b"RPM1"


def write_panels(path: str, rasters: np.ndarray) -> None:
    """rasters: uint8 array of shape (count, 16, H, W)."""
    if rasters.ndim != 4 or rasters.shape[1] != 16 or rasters.dtype != np.uint8:
        raise FormatError(f"expected (n, 16, h, w) uint8, got {rasters.shape} {rasters.dtype}")
    n, _, h, w = rasters.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IHH", n, h, w))
        fh.write(np.ascontiguousarray(rasters).tobytes())


def read_panels(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != MAGIC:
            raise FormatError(f"bad magic in {path!r}")
        n, h, w = struct.unpack("<IHH", head[4:12])
        body = fh.read()
    expected = n * 16 * h * w
    if len(body) != expected:
        raise FormatError(
            f"{path!r}: payload is {len(body)} bytes, header implies {expected}"
        )
    return np.frombuffer(body, dtype=np.uint8).reshape(n, 16, h, w).copy()


def _rule_params_json(rule: Rule) -> Dict:
    f = rule.family
    if f is RuleFamily.PROGRESSION:
        return {"delta": rule.param}
    if f is RuleFamily.ARITHMETIC:
        return {"sign": "plus" if rule.param == 1 else "minus"}
    if f is RuleFamily.DISTRIBUTE_THREE:
        return {"perm": rule.param}
    return {}


def _rule_from_json(family: str, params: Dict) -> Rule:
    fam = RuleFamily[family.upper()]
    if fam is RuleFamily.PROGRESSION:
        return Rule(fam, int(params["delta"]))
    if fam is RuleFamily.ARITHMETIC:
        return Rule(fam, 1 if params["sign"] == "plus" else -1)
    if fam is RuleFamily.DISTRIBUTE_THREE:
        return Rule(fam, int(params["perm"]))
    return Rule(fam)


def annotation_to_json(puzzle: Puzzle) -> List:
    return [
        [s.slot, s.attribute.label, s.rule.family.label, _rule_params_json(s.rule)]
        for s in puzzle.annotation.rules
    ]


def annotation_from_json(entries: Sequence) -> Tuple[RuleSpec, ...]:
    return tuple(
        RuleSpec(int(slot), Attribute[attr.upper()], _rule_from_json(fam, params))
        for slot, attr, fam, params in entries
    )


def save_dataset(dirpath: str, puzzles: Sequence[Puzzle], rasters: np.ndarray) -> None:
    if len(puzzles) != rasters.shape[0]:
        raise FormatError(
            f"{len(puzzles)} instances but {rasters.shape[0]} raster stacks"
        )
    os.makedirs(dirpath, exist_ok=True)
    write_panels(os.path.join(dirpath, "panels.bin"), rasters)
    records = [
        {
            "config": p.config.value,
            "seed": p.seed,
            "label": p.label,
            "annotation": annotation_to_json(p),
            "meta": list(p.meta.bits),
        }
        for p in puzzles
    ]
    manifest = {
        "format": "ravenlab-dataset",
        "count": len(puzzles),
        "image_size": int(rasters.shape[2]),
        "instances": records,
    }
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh)


def load_dataset(dirpath: str) -> Tuple[List[Puzzle], np.ndarray]:
    """Re-derive instances from (config, seed); verify manifest consistency."""
    rasters = read_panels(os.path.join(dirpath, "panels.bin"))
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "ravenlab-dataset":
        raise FormatError("manifest.json is not a dataset manifest")
    records = manifest["instances"]
    if len(records) != rasters.shape[0]:
        raise FormatError(
            f"manifest lists {len(records)} instances, panels.bin holds {rasters.shape[0]}"
        )
    puzzles: List[Puzzle] = []
    for i, rec in enumerate(records):
        p = generate_puzzle(Config(rec["config"]), int(rec["seed"]))
        if p.label != rec["label"]:
            raise FormatError(f"instance {i}: label mismatch against regeneration")
        if annotation_from_json(rec["annotation"]) != p.annotation.rules:
            raise FormatError(f"instance {i}: annotation mismatch against regeneration")
        if tuple(rec["meta"]) != p.meta.bits:
            raise FormatError(f"instance {i}: meta-target mismatch against regeneration")
        puzzles.append(p)
    return puzzles, rasters
