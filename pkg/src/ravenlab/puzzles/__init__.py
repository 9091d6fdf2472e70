"""Symbolic puzzle layer: types, rules, generator, dataset IO."""
from .types import (
    Annotation,
    Attribute,
    Box,
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
from .rules import (
    allowed_families,
    cyclic_shift,
    feasible_rules,
    rule_satisfied,
    sample_row_values,
    sample_value_grid,
    value_bounds,
)
from .generator import (
    MAX_ATTEMPTS,
    decode_meta_target,
    encode_meta_target,
    generate_candidates,
    generate_puzzle,
    sample_rule_annotation,
)

__all__ = [
    "Annotation", "Attribute", "Box", "Config", "Entity", "MetaTarget",
    "Panel", "Puzzle", "Rule", "RuleFamily", "RuleSpec",
    "component_capacity", "component_layout", "group_value",
    "allowed_families", "cyclic_shift", "feasible_rules", "rule_satisfied",
    "sample_row_values", "sample_value_grid", "value_bounds",
    "MAX_ATTEMPTS", "decode_meta_target", "encode_meta_target",
    "generate_candidates", "generate_puzzle", "sample_rule_annotation",
]
