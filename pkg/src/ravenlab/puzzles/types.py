"""Symbolic vocabulary for the puzzles: attributes, rules, panels, layouts.

A puzzle instance is a 3x3 grid of panels with the bottom-right panel removed
and replaced by 8 candidate completions.  Panels hold one or two components;
each component owns a set of slots (fixed boxes in the unit square) and every
occupied slot carries an entity with a shape type, a size level and a color
level.  Row-wise rules govern five attributes per component:

    Number    how many slots are occupied          (1 .. capacity)
    Position  which slots are occupied             (nonempty subset)
    Type      shape class, shared by the component (0 .. 4)
    Size      size level, shared                   (0 .. 5)
    Color     color level, shared                  (0 .. 9)

Number and Position are two views of the same occupancy set, so exactly one
of them is governed per component; the other follows along.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from typing import FrozenSet, Tuple

__all__ = [
    "Attribute",
    "RuleFamily",
    "Rule",
    "RuleSpec",
    "Annotation",
    "Entity",
    "Panel",
    "Config",
    "Box",
    "MetaTarget",
    "Puzzle",
    "component_layout",
    "component_capacity",
    "group_value",
]


class Attribute(IntEnum):
    """The five governed attributes, with stable integer codes."""

    NUMBER = 0
    POSITION = 1
    TYPE = 2
    SIZE = 3
    COLOR = 4

    @property
    def label(self) -> str:
        return self.name.lower()


class RuleFamily(IntEnum):
    """The four row-rule families, with stable integer codes."""

    CONSTANT = 0
    PROGRESSION = 1
    ARITHMETIC = 2
    DISTRIBUTE_THREE = 3

    @property
    def label(self) -> str:
        return self.name.lower()


# Parameter domains per family.  CONSTANT carries no parameter (kept at 0);
# PROGRESSION is the common difference; ARITHMETIC is +1 (add) or -1
# (subtract); DISTRIBUTE_THREE selects one of the two cyclic orders of the
# value triple across rows.
_PARAM_DOMAIN = {
    RuleFamily.CONSTANT: (0,),
    RuleFamily.PROGRESSION: (-2, -1, 1, 2),
    RuleFamily.ARITHMETIC: (1, -1),
    RuleFamily.DISTRIBUTE_THREE: (0, 1),
}


@dataclass(frozen=True)
class Rule:
    """A fully instantiated rule: family plus its parameter."""

    family: RuleFamily
    param: int = 0

    def __post_init__(self):
        if self.param not in _PARAM_DOMAIN[self.family]:
            raise ValueError(
                f"bad parameter {self.param!r} for {self.family.label}"
            )

    def describe(self) -> str:
        f = self.family
        if f is RuleFamily.CONSTANT:
            return "constant"
        if f is RuleFamily.PROGRESSION:
            return f"progression({self.param:+d})"
        if f is RuleFamily.ARITHMETIC:
            return "arithmetic(+)" if self.param == 1 else "arithmetic(-)"
        return f"distribute_three({self.param})"


@dataclass(frozen=True)
class RuleSpec:
    """A rule bound to one (component slot, attribute) group."""

    slot: int
    attribute: Attribute
    rule: Rule


@dataclass(frozen=True)
class Annotation:
    """The complete per-instance rule assignment (4 groups per component)."""

    rules: Tuple[RuleSpec, ...]

    def rule_for(self, slot: int, attribute: Attribute) -> Rule | None:
        for spec in self.rules:
            if spec.slot == slot and spec.attribute is attribute:
                return spec.rule
        return None

    def groups(self) -> Tuple[Tuple[int, Attribute], ...]:
        return tuple((s.slot, s.attribute) for s in self.rules)


@dataclass(frozen=True)
class Entity:
    """One occupied slot: which box it sits in and how it is drawn."""

    slot: int
    type: int   # 0..4 -> triangle, square, pentagon, hexagon, circle
    size: int   # 0..5 size level
    color: int  # 0..9 color level (fill intensity)


@dataclass(frozen=True)
class Panel:
    """One cell of the 3x3 grid: a tuple of entity tuples per component."""

    components: Tuple[Tuple[Entity, ...], ...]

    def occupancy(self, comp: int) -> FrozenSet[int]:
        return frozenset(e.slot for e in self.components[comp])


def group_value(panel: Panel, slot: int, attribute: Attribute):
    """Read one attribute of one component: an int, or a frozenset for Position."""
    comp = panel.components[slot]
    if attribute is Attribute.NUMBER:
        return len(comp)
    if attribute is Attribute.POSITION:
        return frozenset(e.slot for e in comp)
    if attribute is Attribute.TYPE:
        return comp[0].type
    if attribute is Attribute.SIZE:
        return comp[0].size
    return comp[0].color


class Config(Enum):
    """The seven panel layouts."""

    CENTER = "center"
    GRID_2X2 = "grid_2x2"
    GRID_3X3 = "grid_3x3"
    LEFT_RIGHT = "left_right"
    UP_DOWN = "up_down"
    OUT_IN_CENTER = "out_in_center"
    OUT_IN_GRID = "out_in_grid"


@dataclass(frozen=True)
class Box:
    """Axis-aligned slot box in the unit square, exact rational coordinates."""

    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    @property
    def half_extent(self) -> Fraction:
        return min(self.x1 - self.x0, self.y1 - self.y0) / 2

    @property
    def center(self) -> Tuple[Fraction, Fraction]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)


def _box(x0, y0, x1, y1) -> Box:
    return Box(Fraction(x0), Fraction(y0), Fraction(x1), Fraction(y1))


def _grid_boxes(n: int, x0=Fraction(0), y0=Fraction(0), x1=Fraction(1), y1=Fraction(1)):
    """Row-major n x n subdivision of the given rectangle."""
    w, h = (x1 - x0) / n, (y1 - y0) / n
    return tuple(
        Box(x0 + c * w, y0 + r * h, x0 + (c + 1) * w, y0 + (r + 1) * h)
        for r in range(n)
        for c in range(n)
    )


_LAYOUTS = {
    Config.CENTER: (( _box(0, 0, 1, 1), ),),
    Config.GRID_2X2: (_grid_boxes(2),),
    Config.GRID_3X3: (_grid_boxes(3),),
    Config.LEFT_RIGHT: (
        (_box(0, 0, Fraction(1, 2), 1),),
        (_box(Fraction(1, 2), 0, 1, 1),),
    ),
    Config.UP_DOWN: (
        (_box(0, 0, 1, Fraction(1, 2)),),
        (_box(0, Fraction(1, 2), 1, 1),),
    ),
    Config.OUT_IN_CENTER: (
        (_box(0, 0, 1, 1),),
        (_box(Fraction(3, 10), Fraction(3, 10), Fraction(7, 10), Fraction(7, 10)),),
    ),
    Config.OUT_IN_GRID: (
        (_box(0, 0, 1, 1),),
        _grid_boxes(2, Fraction(1, 4), Fraction(1, 4), Fraction(3, 4), Fraction(3, 4)),
    ),
}


def component_layout(config: Config) -> Tuple[Tuple[Box, ...], ...]:
    """Slot boxes per component, slot index = position in the tuple."""
    return _LAYOUTS[config]


def component_capacity(config: Config, slot: int) -> int:
    """Number of slots available to component ``slot``."""
    return len(_LAYOUTS[config][slot])


@dataclass(frozen=True)
class MetaTarget:
    """18-bit rule summary: per component, 5 attribute bits + 4 family bits.

    Bit layout is component-major: bits[9*c + a] flag attribute ``a`` as
    governed in component ``c``; bits[9*c + 5 + f] flag family ``f`` as used.
    Single-component configurations leave the second block all zero.
    """

    bits: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != 18 or any(b not in (0, 1) for b in self.bits):
            raise ValueError("meta-target must be 18 bits of 0/1")


@dataclass(frozen=True)
class Puzzle:
    """A complete instance: context panels, candidates, answer, annotation."""

    config: Config
    context: Tuple[Panel, ...]      # 8 panels, row-major, bottom-right absent
    candidates: Tuple[Panel, ...]   # 8 completions for the missing panel
    label: int                      # index of the correct candidate
    annotation: Annotation
    meta: MetaTarget
    seed: int

    def rows(self) -> Tuple[Tuple[Panel, ...], ...]:
        c = self.context
        return ((c[0], c[1], c[2]), (c[3], c[4], c[5]), (c[6], c[7]))
