"""Solver: rule inference from two rows, candidate scoring, strict argmax.

The inference expectations below are derived by hand from the rule
semantics; each case lists the reasoning next to the assertion.
"""
import pytest

from ravenlab.errors import AmbiguousTie
from ravenlab.oracle import infer_rules, score_candidates, solve
from ravenlab.puzzles import (
    Attribute,
    Config,
    Entity,
    Panel,
    Rule,
    RuleFamily,
)

C, P, A, D = (
    RuleFamily.CONSTANT,
    RuleFamily.PROGRESSION,
    RuleFamily.ARITHMETIC,
    RuleFamily.DISTRIBUTE_THREE,
)


def center_panel(type=0, size=0, color=0):
    return Panel(((Entity(0, type, size, color),),))


def center_row(sizes, type=0, color=0):
    return tuple(center_panel(type=type, size=s, color=color) for s in sizes)


def rules_of(inferred, slot, attr):
    return {(s.rule.family, s.rule.param) for s in inferred[(slot, attr)]}


def test_inference_on_increasing_sizes():
    # rows (2,3,4) and (1,2,3):
    #   constant: values differ in a row               -> out
    #   progression +1: both rows step by one          -> in
    #   progression -1/+-2: wrong step                 -> out
    #   arithmetic +: 2+3 != 4 in row one              -> out (1+2=3 alone
    #                 would pass row two, both needed)
    #   arithmetic -: 2-3 < 0, 1-2 < 0                 -> out
    #   distribute-three: both rows hold 3 distinct
    #                 values, both directions          -> in
    inferred = infer_rules(
        center_row((2, 3, 4)), center_row((1, 2, 3)), Config.CENTER
    )
    assert rules_of(inferred, 0, Attribute.SIZE) == {(P, 1), (D, 0), (D, 1)}


def test_inference_on_constant_rows():
    # rows (5,5,5) twice: only constant survives; distribute-three is out
    # because the values are not distinct, arithmetic because 5-5=0 != 5.
    inferred = infer_rules(
        center_row((5, 5, 5)), center_row((5, 5, 5)), Config.CENTER
    )
    assert rules_of(inferred, 0, Attribute.SIZE) == {(C, 0)}


def test_inference_on_arithmetic_rows():
    # color rows (1,2,3) and (4,5,9): 1+2=3 and 4+5=9 -> arithmetic(+) in.
    # progression: steps 1,1 in row one but 1,4 in row two -> out.
    # distribute-three: both rows distinct -> in (both directions).
    row1 = tuple(center_panel(color=c) for c in (1, 2, 3))
    row2 = tuple(center_panel(color=c) for c in (4, 5, 9))
    inferred = infer_rules(row1, row2, Config.CENTER)
    assert rules_of(inferred, 0, Attribute.COLOR) == {(A, 1), (D, 0), (D, 1)}


def test_inference_covers_every_group():
    inferred = infer_rules(
        center_row((5, 5, 5)), center_row((5, 5, 5)), Config.CENTER
    )
    assert set(inferred) == {(0, a) for a in Attribute}
    # capacity-one component: number and position can only be constant
    assert rules_of(inferred, 0, Attribute.NUMBER) == {(C, 0)}
    assert rules_of(inferred, 0, Attribute.POSITION) == {(C, 0)}


def test_scoring_counts_alive_groups():
    # all attributes constant at fixed values; candidates vary only in size
    context = center_row((2, 2, 2)) + center_row((2, 2, 2)) + center_row((2, 2))
    candidates = tuple(center_panel(size=s) for s in (2, 0, 1, 3, 4, 5, 2, 2))
    scores = score_candidates(context, candidates, Config.CENTER)
    # groups: number, position, type, color stay constant for everyone (4);
    # size-2 candidates additionally keep the size group alive (5)
    assert scores == [5, 4, 4, 4, 4, 4, 5, 5]


def test_solve_picks_strict_argmax(puzzle_bank):
    for puzzles in puzzle_bank.values():
        for p in puzzles:
            assert solve(p) == p.label


def test_solve_raises_on_tie():
    context = center_row((2, 2, 2)) + center_row((2, 2, 2)) + center_row((2, 2))
    candidates = tuple(center_panel(size=s) for s in (2, 0, 1, 3, 4, 5, 2, 2))
    puzzle_like = type(
        "T", (), dict(context=context, candidates=candidates, config=Config.CENTER)
    )
    with pytest.raises(AmbiguousTie):
        solve(puzzle_like)


def test_answer_is_the_unique_top_scorer(puzzle_bank):
    for puzzles in puzzle_bank.values():
        for p in puzzles:
            scores = score_candidates(p.context, p.candidates, p.config)
            top = max(scores)
            assert scores[p.label] == top
            assert scores.count(top) == 1
