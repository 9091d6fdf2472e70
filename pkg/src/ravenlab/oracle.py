"""Symbolic solver: infer rules from two complete rows, score candidates.

The solver never sees the annotation.  For every (component, attribute)
group it enumerates the instantiated rules that both context rows satisfy;
a candidate's score is the number of groups for which at least one of those
inferred rules also holds on the completed third row.  solve() demands a
strict argmax and raises AmbiguousTie otherwise.
"""
from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from .errors import AmbiguousTie
from .puzzles.rules import feasible_rules, rule_satisfied
from .puzzles.types import (
    Attribute,
    Config,
    Panel,
    Puzzle,
    RuleSpec,
    component_capacity,
    component_layout,
    group_value,
)

__all__ = ["infer_rules", "score_candidates", "solve"]

Group = Tuple[int, Attribute]


def _row_values(row: Sequence[Panel], slot: int, attr: Attribute):
    return tuple(group_value(p, slot, attr) for p in row)


def infer_rules(
    row1: Sequence[Panel], row2: Sequence[Panel], config: Config
) -> Dict[Group, Tuple[RuleSpec, ...]]:
    """All instantiated rules satisfied by both rows, per group."""
    out: Dict[Group, Tuple[RuleSpec, ...]] = {}
    for slot in range(len(component_layout(config))):
        cap = component_capacity(config, slot)
        for attr in Attribute:
            keep = []
            t1 = _row_values(row1, slot, attr)
            t2 = _row_values(row2, slot, attr)
            for rule in feasible_rules(attr, cap):
                spec = RuleSpec(slot, attr, rule)
                if rule_satisfied(spec, t1, cap) and rule_satisfied(spec, t2, cap):
                    keep.append(spec)
            out[(slot, attr)] = tuple(keep)
    return out


def score_candidates(
    context: Sequence[Panel], candidates: Sequence[Panel], config: Config
) -> List[int]:
    """Per candidate: how many groups keep an inferred rule alive in row 3."""
    inferred = infer_rules(context[0:3], context[3:6], config)
    scores = []
    for cand in candidates:
        row3 = (context[6], context[7], cand)
        score = 0
        for (slot, attr), specs in inferred.items():
            if not specs:
                continue
            cap = component_capacity(config, slot)
            triple = _row_values(row3, slot, attr)
            if any(rule_satisfied(s, triple, cap) for s in specs):
                score += 1
        scores.append(score)
    return scores


def solve(puzzle: Puzzle) -> int:
    """Index of the unique best-scoring candidate; AmbiguousTie if shared."""
    scores = score_candidates(puzzle.context, puzzle.candidates, puzzle.config)
    top = max(scores)
    winners = [i for i, s in enumerate(scores) if s == top]
    if len(winners) != 1:
        raise AmbiguousTie(
            f"top score {top} shared by candidates {winners}"
        )
    return winners[0]
