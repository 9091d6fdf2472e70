"""Multi-granularity modular network on the autograd engine."""
from .params import D_ATTR, D_FEAT, ENC_CHANNELS, init_params, module_param_names, orthonormal_rows
from .network import (
    MODES,
    BatchScores,
    ScoreVector,
    active_groups,
    batch_loss,
    encode_overall,
    encode_panelwise,
    encode_rowwise,
    forward_scores,
    frozen_module_names,
    inactive_param_names,
    infer_rule,
    ink_image,
    loss,
    module_transform,
    predict,
    score_candidates,
)

__all__ = [
    "D_ATTR", "D_FEAT", "ENC_CHANNELS", "init_params", "module_param_names",
    "orthonormal_rows",
    "MODES", "BatchScores", "ScoreVector", "active_groups", "batch_loss",
    "encode_overall", "encode_panelwise", "encode_rowwise", "forward_scores",
    "frozen_module_names", "inactive_param_names", "infer_rule", "ink_image",
    "loss", "module_transform", "predict", "score_candidates",
]
