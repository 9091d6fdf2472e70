"""Procedural puzzle generation.

generate_puzzle(config, seed) is deterministic in (config, seed).  The flow:

1. sample an annotation: per component, exactly one of Number/Position is
   governed (capacity permitting), plus rules for Type, Size and Color;
2. sample the 3x3 value grid per governed group and assemble 9 panels;
3. build 7 distractors by mutating governed groups of the answer so that
   each mutated group breaks *every* rule inferable from the first two
   context rows, not just the annotated one;
4. verify with the symbolic solver that the answer is the unique strict
   argmax; otherwise resample from scratch.

Step 4 makes oracle correctness a construction invariant rather than a
statistical hope: rule-consistent distractors or ties can momentarily arise
from the unconstrained attributes (e.g. free positions when Number is
governed) and are simply rejected.
"""
from __future__ import annotations

from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from ..errors import DomainExhausted, GenerationRetryExceeded
from .rules import (
    cyclic_shift,
    feasible_rules,
    rule_satisfied,
    sample_value_grid,
    value_bounds,
)
from .types import (
    Annotation,
    Attribute,
    Config,
    Entity,
    MetaTarget,
    Panel,
    Puzzle,
    Rule,
    RuleFamily,
    RuleSpec,
    component_capacity,
    component_layout,
    group_value,
)

__all__ = [
    "generate_puzzle",
    "generate_candidates",
    "sample_rule_annotation",
    "encode_meta_target",
    "decode_meta_target",
    "MAX_ATTEMPTS",
]

MAX_ATTEMPTS = 1000

_PAIR = (Attribute.NUMBER, Attribute.POSITION)
_STYLE = (Attribute.TYPE, Attribute.SIZE, Attribute.COLOR)


def _sample_rule(attr: Attribute, cap: int, rng: np.random.Generator) -> Rule:
    """Family first (uniform over feasible families), then a uniform parameter."""
    rules = feasible_rules(attr, cap)
    fams = sorted({r.family for r in rules})
    fam = fams[int(rng.integers(len(fams)))]
    of_fam = [r for r in rules if r.family is fam]
    return of_fam[int(rng.integers(len(of_fam)))]


def sample_rule_annotation(config: Config, rng: np.random.Generator) -> Annotation:
    """Draw one rule per governed group of every component."""
    specs: List[RuleSpec] = []
    for slot in range(len(component_layout(config))):
        cap = component_capacity(config, slot)
        if cap == 1:
            # single slot: occupancy is fixed, record it as Number constant
            specs.append(RuleSpec(slot, Attribute.NUMBER, Rule(RuleFamily.CONSTANT)))
        else:
            attr = _PAIR[int(rng.integers(2))]
            specs.append(RuleSpec(slot, attr, _sample_rule(attr, cap, rng)))
        for attr in _STYLE:
            specs.append(RuleSpec(slot, attr, _sample_rule(attr, cap, rng)))
    return Annotation(tuple(specs))


def encode_meta_target(annotation: Annotation) -> MetaTarget:
    bits = [0] * 18
    for spec in annotation.rules:
        base = 9 * spec.slot
        bits[base + int(spec.attribute)] = 1
        bits[base + 5 + int(spec.rule.family)] = 1
    return MetaTarget(tuple(bits))


def decode_meta_target(meta: MetaTarget):
    """Per-component (attributes, families) sets recovered from the bits."""
    out = []
    for slot in range(2):
        base = 9 * slot
        attrs = frozenset(
            Attribute(a) for a in range(5) if meta.bits[base + a]
        )
        fams = frozenset(
            RuleFamily(f) for f in range(4) if meta.bits[base + 5 + f]
        )
        out.append((attrs, fams))
    return tuple(out)


def _sample_occupancy_grids(
    pair_spec: RuleSpec, cap: int, rng: np.random.Generator
) -> List[List[FrozenSet[int]]]:
    """3x3 grid of occupied-slot sets for one component."""
    if pair_spec.attribute is Attribute.POSITION:
        grid = sample_value_grid(pair_spec, cap, rng)
        return [list(row) for row in grid]
    # Number governed: counts obey the rule, slot choices are free per panel
    count_grid = sample_value_grid(pair_spec, cap, rng)
    out: List[List[FrozenSet[int]]] = []
    for row in count_grid:
        out.append(
            [
                frozenset(int(i) for i in rng.choice(cap, size=n, replace=False))
                for n in row
            ]
        )
    return out


def _component_grids(
    config: Config, annotation: Annotation, rng: np.random.Generator
):
    """Per component: occupancy sets and style values for all 9 panels."""
    comps = []
    for slot in range(len(component_layout(config))):
        cap = component_capacity(config, slot)
        by_attr = {s.attribute: s for s in annotation.rules if s.slot == slot}
        pair_spec = by_attr.get(Attribute.NUMBER) or by_attr[Attribute.POSITION]
        occ = _sample_occupancy_grids(pair_spec, cap, rng)
        style = {
            attr: sample_value_grid(by_attr[attr], cap, rng) for attr in _STYLE
        }
        comps.append((occ, style))
    return comps


def _build_panel(comps, r: int, c: int) -> Panel:
    parts = []
    for occ, style in comps:
        slots = sorted(occ[r][c])
        t = style[Attribute.TYPE][r][c]
        s = style[Attribute.SIZE][r][c]
        k = style[Attribute.COLOR][r][c]
        parts.append(tuple(Entity(i, t, s, k) for i in slots))
    return Panel(tuple(parts))


def _replace_group(panel: Panel, slot: int, attr: Attribute, value) -> Panel:
    """Return a copy of the panel with one attribute of one component changed."""
    comp = panel.components[slot]
    if attr is Attribute.POSITION:
        t, s, k = comp[0].type, comp[0].size, comp[0].color
        new = tuple(Entity(i, t, s, k) for i in sorted(value))
    elif attr is Attribute.NUMBER:
        raise ValueError("number mutations go through positions")
    else:
        field = attr.label  # "type" / "size" / "color"
        new = tuple(
            Entity(
                e.slot,
                value if field == "type" else e.type,
                value if field == "size" else e.size,
                value if field == "color" else e.color,
            )
            for e in comp
        )
    comps = list(panel.components)
    comps[slot] = new
    return Panel(tuple(comps))


def _fails_all(
    inferred: Sequence[RuleSpec], prefix, value, cap: int
) -> bool:
    v1, v2 = prefix
    return all(
        not rule_satisfied(spec, (v1, v2, value), cap) for spec in inferred
    )


def _mutate_group(
    panel: Panel,
    slot: int,
    attr: Attribute,
    inferred: Sequence[RuleSpec],
    prefix,
    cap: int,
    rng: np.random.Generator,
):
    """Mutated panel whose (slot, attr) value breaks every inferred rule.

    Returns None when no breaking value exists (caller picks another group).
    """
    current = group_value(panel, slot, attr)
    if attr is Attribute.NUMBER:
        lo, hi = value_bounds(attr, cap)
        opts = [
            n for n in range(lo, hi + 1)
            if n != current and _fails_all(inferred, prefix, n, cap)
        ]
        if not opts:
            return None
        n = int(rng.choice(opts))
        slots = frozenset(int(i) for i in rng.choice(cap, size=n, replace=False))
        return _replace_group(panel, slot, Attribute.POSITION, slots)
    if attr is Attribute.POSITION:
        for _ in range(60):
            size = int(rng.integers(1, cap + 1))
            cand = frozenset(
                int(i) for i in rng.choice(cap, size=size, replace=False)
            )
            if cand != current and _fails_all(inferred, prefix, cand, cap):
                return _replace_group(panel, slot, attr, cand)
        return None
    lo, hi = value_bounds(attr, cap)
    opts = [
        v for v in range(lo, hi + 1)
        if v != current and _fails_all(inferred, prefix, v, cap)
    ]
    if not opts:
        return None
    return _replace_group(panel, slot, attr, int(rng.choice(opts)))


def generate_candidates(
    answer: Panel,
    context: Sequence[Panel],
    config: Config,
    annotation: Annotation,
    rng: np.random.Generator,
) -> Tuple[Tuple[Panel, ...], int]:
    """Answer plus 7 mutation distractors, shuffled; returns (candidates, label).

    Each distractor differs from the answer in 1..3 governed groups, and every
    touched group violates all rules consistent with the first two context
    rows, so no distractor can tie with the answer on those groups.
    """
    from ..oracle import infer_rules  # local import to avoid a cycle

    inferred = infer_rules(context[0:3], context[3:6], config)
    groups = list(annotation.groups())
    # prefix values (row 3, panels 1 and 2) per group
    prefixes = {
        (slot, attr): (
            group_value(context[6], slot, attr),
            group_value(context[7], slot, attr),
        )
        for slot, attr in groups
    }
    # number mutations need >= 2 possible counts; position needs >= 2 subsets
    pool = []
    for slot, attr in groups:
        cap = component_capacity(config, slot)
        if attr is Attribute.NUMBER and cap < 2:
            continue
        pool.append((slot, attr))
    if not pool:
        raise GenerationRetryExceeded("no mutable groups in annotation")

    distractors: List[Panel] = []
    attempts = 0
    while len(distractors) < 7:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise GenerationRetryExceeded(
                f"candidate generation exceeded {MAX_ATTEMPTS} attempts"
            )
        k = int(rng.integers(1, min(3, len(pool)) + 1))
        idx = rng.choice(len(pool), size=k, replace=False)
        panel = answer
        ok = True
        for i in idx:
            slot, attr = pool[int(i)]
            cap = component_capacity(config, slot)
            panel = _mutate_group(
                panel, slot, attr, inferred[(slot, attr)],
                prefixes[(slot, attr)], cap, rng,
            )
            if panel is None:
                ok = False
                break
        if not ok or panel == answer or panel in distractors:
            continue
        distractors.append(panel)

    label = int(rng.integers(8))
    candidates = distractors[:label] + [answer] + distractors[label:]
    return tuple(candidates), label


def generate_puzzle(config: Config, seed: int) -> Puzzle:
    """Deterministically generate one solvable, uniquely-answerable puzzle."""
    from ..oracle import score_candidates as oracle_scores

    rng = np.random.Generator(np.random.PCG64(seed))
    last_err = None
    for _ in range(MAX_ATTEMPTS):
        try:
            annotation = sample_rule_annotation(config, rng)
            comps = _component_grids(config, annotation, rng)
            panels = [
                _build_panel(comps, r, c) for r in range(3) for c in range(3)
            ]
            context = tuple(panels[:8])
            answer = panels[8]
            candidates, label = generate_candidates(
                answer, context, config, annotation, rng
            )
        except (DomainExhausted, GenerationRetryExceeded) as err:
            last_err = err
            continue
        scores = oracle_scores(context, candidates, config)
        top = max(scores)
        if scores[label] == top and scores.count(top) == 1:
            return Puzzle(
                config=config,
                context=context,
                candidates=candidates,
                label=label,
                annotation=annotation,
                meta=encode_meta_target(annotation),
                seed=seed,
            )
        last_err = GenerationRetryExceeded("oracle tie or mismatch, resampling")
    raise GenerationRetryExceeded(
        f"gave up on {config.value} seed {seed} after {MAX_ATTEMPTS} attempts"
    ) from last_err
