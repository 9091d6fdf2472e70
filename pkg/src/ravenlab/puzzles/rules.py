"""Rule semantics: satisfaction checks, feasibility, and row sampling.

Values are plain ints for Number/Type/Size/Color and frozensets of slot
indices for Position.  A "triple" is the value of one attribute across the
three panels of a row.

Semantics per family:

    constant          all three values identical (rows are independent)
    progression(d)    common difference d; Type wraps modulo 5, Position
                      shifts every slot index cyclically by d
    arithmetic(s)     v3 = v1 + s*v2 with s in {+1,-1}; for Position the
                      set union (s=+1) or difference (s=-1); third value
                      must stay inside the attribute domain
    distribute_three(p)  the three values in a row are pairwise distinct;
                      across rows the generator uses one fixed triple and
                      rotates it, p selecting the rotation direction

Satisfaction is checked per row, so distribute_three accepts any row of
three distinct values; the cross-row Latin structure is imposed only at
generation time.
"""
from __future__ import annotations

from typing import FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..errors import DomainExhausted
from .types import Attribute, Rule, RuleFamily, RuleSpec

__all__ = [
    "value_bounds",
    "allowed_families",
    "cyclic_shift",
    "rule_satisfied",
    "feasible_rules",
    "sample_row_values",
    "sample_value_grid",
]

Value = Union[int, FrozenSet[int]]
Triple = Tuple[Value, Value, Value]

# Inclusive value bounds for the scalar attributes; Number depends on the
# component capacity and Position is set-valued, see value_bounds().
_SCALAR_BOUNDS = {
    Attribute.TYPE: (0, 4),
    Attribute.SIZE: (0, 5),
    Attribute.COLOR: (0, 9),
}

# Which families may govern which attribute.  Type has no meaningful
# arithmetic, everything else supports all four families (subject to
# capacity feasibility for Number/Position).
_ALLOWED = {
    Attribute.NUMBER: (
        RuleFamily.CONSTANT,
        RuleFamily.PROGRESSION,
        RuleFamily.ARITHMETIC,
        RuleFamily.DISTRIBUTE_THREE,
    ),
    Attribute.POSITION: (
        RuleFamily.CONSTANT,
        RuleFamily.PROGRESSION,
        RuleFamily.ARITHMETIC,
        RuleFamily.DISTRIBUTE_THREE,
    ),
    Attribute.TYPE: (
        RuleFamily.CONSTANT,
        RuleFamily.PROGRESSION,
        RuleFamily.DISTRIBUTE_THREE,
    ),
    Attribute.SIZE: (
        RuleFamily.CONSTANT,
        RuleFamily.PROGRESSION,
        RuleFamily.ARITHMETIC,
        RuleFamily.DISTRIBUTE_THREE,
    ),
    Attribute.COLOR: (
        RuleFamily.CONSTANT,
        RuleFamily.PROGRESSION,
        RuleFamily.ARITHMETIC,
        RuleFamily.DISTRIBUTE_THREE,
    ),
}


def allowed_families(attribute: Attribute) -> Tuple[RuleFamily, ...]:
    return _ALLOWED[attribute]


def value_bounds(attribute: Attribute, capacity: int = 1) -> Tuple[int, int]:
    """Inclusive (lo, hi) for scalar attributes; Number needs the capacity."""
    if attribute is Attribute.NUMBER:
        return (1, capacity)
    if attribute is Attribute.POSITION:
        raise ValueError("position is set-valued; no scalar bounds")
    return _SCALAR_BOUNDS[attribute]


def cyclic_shift(slots: FrozenSet[int], delta: int, capacity: int) -> FrozenSet[int]:
    """Shift every occupied slot index by delta, wrapping modulo capacity."""
    return frozenset((s + delta) % capacity for s in slots)


def _in_bounds(attribute: Attribute, v: int, capacity: int) -> bool:
    lo, hi = value_bounds(attribute, capacity)
    return lo <= v <= hi


def rule_satisfied(spec: RuleSpec, triple: Triple, capacity: int = 1) -> bool:
    """Does this row triple satisfy the rule on its attribute?"""
    attr, rule = spec.attribute, spec.rule
    fam, p = rule.family, rule.param
    v1, v2, v3 = triple

    if attr is Attribute.POSITION:
        if fam is RuleFamily.CONSTANT:
            return v1 == v2 == v3
        if fam is RuleFamily.PROGRESSION:
            return (
                v2 == cyclic_shift(v1, p, capacity)
                and v3 == cyclic_shift(v2, p, capacity)
            )
        if fam is RuleFamily.ARITHMETIC:
            target = (v1 | v2) if p == 1 else (v1 - v2)
            return len(target) > 0 and v3 == target
        return len({v1, v2, v3}) == 3

    if fam is RuleFamily.CONSTANT:
        return v1 == v2 == v3
    if fam is RuleFamily.PROGRESSION:
        if attr is Attribute.TYPE:
            m = _SCALAR_BOUNDS[Attribute.TYPE][1] + 1
            return v2 == (v1 + p) % m and v3 == (v2 + p) % m
        return (v2 - v1) == p and (v3 - v2) == p
    if fam is RuleFamily.ARITHMETIC:
        if attr is Attribute.TYPE:
            return False
        return v3 == v1 + p * v2 and _in_bounds(attr, v3, capacity)
    return len({v1, v2, v3}) == 3


def _scalar_domain(attribute: Attribute, capacity: int) -> range:
    lo, hi = value_bounds(attribute, capacity)
    return range(lo, hi + 1)


def _progression_starts(attribute: Attribute, delta: int, capacity: int) -> List[int]:
    if attribute is Attribute.TYPE:
        return list(_scalar_domain(attribute, capacity))
    lo, hi = value_bounds(attribute, capacity)
    return [v for v in range(lo, hi + 1) if lo <= v + 2 * delta <= hi]


def _arithmetic_pairs(attribute: Attribute, sign: int, capacity: int) -> List[Tuple[int, int]]:
    lo, hi = value_bounds(attribute, capacity)
    return [
        (a, b)
        for a in range(lo, hi + 1)
        for b in range(lo, hi + 1)
        if lo <= a + sign * b <= hi
    ]


def feasible_rules(attribute: Attribute, capacity: int) -> List[Rule]:
    """Every instantiated rule with at least one satisfiable row triple."""
    out: List[Rule] = []
    for fam in allowed_families(attribute):
        for p in _rule_params(fam):
            rule = Rule(fam, p)
            if _rule_feasible(attribute, rule, capacity):
                out.append(rule)
    return out


def _rule_params(fam: RuleFamily) -> Tuple[int, ...]:
    return {
        RuleFamily.CONSTANT: (0,),
        RuleFamily.PROGRESSION: (-2, -1, 1, 2),
        RuleFamily.ARITHMETIC: (1, -1),
        RuleFamily.DISTRIBUTE_THREE: (0, 1),
    }[fam]


def _rule_feasible(attribute: Attribute, rule: Rule, capacity: int) -> bool:
    fam, p = rule.family, rule.param
    if attribute is Attribute.POSITION:
        if fam is RuleFamily.ARITHMETIC:
            return capacity >= 2
        if fam is RuleFamily.DISTRIBUTE_THREE:
            # need three distinct equal-size nonempty proper-or-full subsets
            return capacity >= 3
        if fam is RuleFamily.PROGRESSION:
            # a shift must move something: need a set not fixed by the shift
            return capacity >= 2 and p % capacity != 0
        return True
    if attribute is Attribute.NUMBER:
        if fam is RuleFamily.PROGRESSION:
            return len(_progression_starts(attribute, p, capacity)) > 0
        if fam is RuleFamily.ARITHMETIC:
            return len(_arithmetic_pairs(attribute, p, capacity)) > 0
        if fam is RuleFamily.DISTRIBUTE_THREE:
            return capacity >= 3
        return True
    # type/size/color domains are fixed and generous
    if fam is RuleFamily.PROGRESSION:
        return len(_progression_starts(attribute, p, capacity)) > 0
    return True


def _sample_subset(capacity: int, size: int, rng: np.random.Generator) -> FrozenSet[int]:
    return frozenset(int(i) for i in rng.choice(capacity, size=size, replace=False))


def _sample_nonempty_subset(capacity: int, rng: np.random.Generator) -> FrozenSet[int]:
    size = int(rng.integers(1, capacity + 1))
    return _sample_subset(capacity, size, rng)


def sample_row_values(
    spec: RuleSpec, capacity: int, rng: np.random.Generator
) -> Triple:
    """Sample one row triple satisfying the rule, uniformly where cheap."""
    attr, rule = spec.attribute, spec.rule
    fam, p = rule.family, rule.param

    if attr is Attribute.POSITION:
        if fam is RuleFamily.CONSTANT:
            s = _sample_nonempty_subset(capacity, rng)
            return (s, s, s)
        if fam is RuleFamily.PROGRESSION:
            # start from a set the shift actually moves
            for _ in range(100):
                s1 = _sample_nonempty_subset(capacity, rng)
                if cyclic_shift(s1, p, capacity) != s1:
                    break
            else:
                raise DomainExhausted(f"no shiftable subset for {rule.describe()}")
            s2 = cyclic_shift(s1, p, capacity)
            return (s1, s2, cyclic_shift(s2, p, capacity))
        if fam is RuleFamily.ARITHMETIC:
            for _ in range(100):
                s1 = _sample_nonempty_subset(capacity, rng)
                s2 = _sample_nonempty_subset(capacity, rng)
                s3 = (s1 | s2) if p == 1 else (s1 - s2)
                if len(s3) > 0:
                    return (s1, s2, s3)
            raise DomainExhausted(f"position {rule.describe()} on capacity {capacity}")
        # distribute_three: three distinct equal-size sets
        return _distribute_position_triple(capacity, rng)

    if fam is RuleFamily.CONSTANT:
        v = int(rng.choice(list(_scalar_domain(attr, capacity))))
        return (v, v, v)
    if fam is RuleFamily.PROGRESSION:
        starts = _progression_starts(attr, p, capacity)
        if not starts:
            raise DomainExhausted(f"{attr.label} {rule.describe()} on capacity {capacity}")
        v1 = int(rng.choice(starts))
        if attr is Attribute.TYPE:
            m = _SCALAR_BOUNDS[Attribute.TYPE][1] + 1
            return (v1, (v1 + p) % m, (v1 + 2 * p) % m)
        return (v1, v1 + p, v1 + 2 * p)
    if fam is RuleFamily.ARITHMETIC:
        pairs = _arithmetic_pairs(attr, p, capacity)
        if not pairs:
            raise DomainExhausted(f"{attr.label} {rule.describe()} on capacity {capacity}")
        a, b = pairs[int(rng.integers(len(pairs)))]
        return (a, b, a + p * b)
    # distribute_three on a scalar attribute
    domain = list(_scalar_domain(attr, capacity))
    if len(domain) < 3:
        raise DomainExhausted(f"{attr.label} domain too small for distribute_three")
    vals = rng.choice(domain, size=3, replace=False)
    return tuple(int(v) for v in vals)


def _distribute_position_triple(
    capacity: int, rng: np.random.Generator
) -> Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]:
    if capacity < 3:
        raise DomainExhausted("position distribute_three needs capacity >= 3")
    for _ in range(200):
        size = int(rng.integers(1, capacity + 1))
        sets = {_sample_subset(capacity, size, rng) for _ in range(8)}
        if len(sets) >= 3:
            picks = sorted(sets, key=lambda s: tuple(sorted(s)))
            idx = rng.choice(len(picks), size=3, replace=False)
            return tuple(picks[int(i)] for i in idx)
    raise DomainExhausted("could not find three distinct equal-size subsets")


def sample_value_grid(
    spec: RuleSpec, capacity: int, rng: np.random.Generator
) -> List[Triple]:
    """Sample the 3x3 value grid for one (component, attribute) group.

    Rows are independent draws except for distribute_three, where one value
    triple is fixed and rotated across rows (a Latin square); the rule
    parameter picks the rotation direction.
    """
    fam = spec.rule.family
    if fam is not RuleFamily.DISTRIBUTE_THREE:
        return [sample_row_values(spec, capacity, rng) for _ in range(3)]
    a, b, c = sample_row_values(spec, capacity, rng)
    if spec.rule.param == 0:
        return [(a, b, c), (b, c, a), (c, a, b)]
    return [(a, b, c), (c, a, b), (b, c, a)]
