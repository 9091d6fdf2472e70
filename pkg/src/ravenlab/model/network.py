"""The multi-granularity modular network.

Score assembly per candidate k (B instances batched throughout):

    M_p  panel granularity: enc1 per panel, then a pair-sum relation head
         over each row's three panel features.
    M_r  row granularity: enc3 over the row stacked as 3 image channels.
    M_o  overall granularity: enc6 over two rows stacked as 6 channels;
         one candidate-independent stack c(r1, r2) plus, per candidate,
         c(r2, r3k) and c(r1, r3k).

    e3k = M_p(r3k) + M_r(r3k) + M_o(r1, r2)      (and analogously e1k, e2k)

Ten attribute modules (2 component slots x 5 attributes) map each e to a
32-dim attribute vector; their sum is tau.  The base score is
cos(tau3k, (tau1k + tau2k)/2).  Per attribute j the rule term is the cosine
between the module's row-3 output and either the embedding of the
annotated rule family (meta mode) or the average of its row-1/row-2
outputs (plain mode).  Scores sum the base once per scored attribute plus
the attribute terms; training minimizes cross-entropy plus a margin that
pushes the answer's score above the distractors', and meta mode adds an
alignment pull of row vectors toward the annotated rule embedding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..autograd import (
    Tensor,
    add,
    backward,
    bias_add,
    broadcast_to,
    concat,
    conv2d_nhwc,
    cosine_similarity,
    gather,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    scale,
    select_index,
    softmax_cross_entropy,
    sub,
)
from ..errors import MissingMeta, ShapeMismatch
from ..puzzles.types import (
    Annotation,
    Attribute,
    Config,
    MetaTarget,
    component_layout,
)
from .params import D_ATTR, D_FEAT, module_param_names

__all__ = [
    "MODES",
    "active_groups",
    "forward_scores",
    "batch_loss",
    "BatchScores",
    "ScoreVector",
    "score_candidates",
    "predict",
    "loss",
    "infer_rule",
    "module_transform",
    "encode_panelwise",
    "encode_rowwise",
    "encode_overall",
    "ink_image",
    "inactive_param_names",
    "frozen_module_names",
]

MODES = ("plain", "meta")

# panel indices (within the 16-stack) for the ten row features:
# row1, row2, then row3 completed by each of the eight candidates
_ROW_PANELS = [[0, 1, 2], [3, 4, 5]] + [[6, 7, 8 + k] for k in range(8)]
# six-channel stacks: c(r1,r2), then c(r2,r3k) x8, then c(r1,r3k) x8
_OVERALL_PANELS = (
    [[0, 1, 2, 3, 4, 5]]
    + [[3, 4, 5, 6, 7, 8 + k] for k in range(8)]
    + [[0, 1, 2, 6, 7, 8 + k] for k in range(8)]
)
# ordered pairs within a 3-panel row, for the relation head
_PAIR_U = [0, 0, 1, 1, 2, 2]
_PAIR_V = [1, 2, 0, 2, 0, 1]


def n_components(config: Config) -> int:
    return len(component_layout(config))


def active_groups(config: Config) -> Tuple[Tuple[int, Attribute], ...]:
    """Modules that participate for this layout, in fixed order."""
    return tuple(
        (slot, attr)
        for slot in range(n_components(config))
        for attr in Attribute
    )


def ink_image(x: np.ndarray) -> np.ndarray:
    """uint8 grayscale -> float64 ink in [0,1] (background maps to 0)."""
    if x.dtype == np.uint8:
        return (255.0 - x) / 255.0
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# input assembly (numpy; images are untracked leaves)
# ---------------------------------------------------------------------------

def _panel_stack(x: np.ndarray) -> np.ndarray:
    b, n, h, w = x.shape
    return np.ascontiguousarray(x.reshape(b * n, h, w, 1))


def _row_stack(x: np.ndarray) -> np.ndarray:
    b, _, h, w = x.shape
    y = x[:, np.asarray(_ROW_PANELS)]          # (B,10,3,H,W)
    y = y.transpose(0, 1, 3, 4, 2)             # (B,10,H,W,3)
    return np.ascontiguousarray(y.reshape(b * 10, h, w, 3))


def _overall_stack(x: np.ndarray) -> np.ndarray:
    b, _, h, w = x.shape
    y = x[:, np.asarray(_OVERALL_PANELS)]      # (B,17,6,H,W)
    y = y.transpose(0, 1, 3, 4, 2)             # (B,17,H,W,6)
    return np.ascontiguousarray(y.reshape(b * 17, h, w, 6))


# ---------------------------------------------------------------------------
# shared sub-networks
# ---------------------------------------------------------------------------

def _encode(params: Dict[str, Tensor], enc: str, x_np: np.ndarray) -> Tensor:
    """Conv-relu-conv-relu, global mean pool, linear: (N,H,W,C) -> (N,D)."""
    x = Tensor(x_np)
    h = relu(conv2d_nhwc(x, params[f"{enc}.c1.w"], params[f"{enc}.c1.b"], stride=2, pad=1))
    h = relu(conv2d_nhwc(h, params[f"{enc}.c2.w"], params[f"{enc}.c2.b"], stride=2, pad=1))
    h = reduce_mean(h, axis=(1, 2))
    return bias_add(matmul(h, params[f"{enc}.fc.w"]), params[f"{enc}.fc.b"])


def _relation(params: Dict[str, Tensor], feats: Tensor, b: int) -> Tensor:
    """Pair-sum head: feats (B,10,3,D) -> (B,10,D)."""
    u = gather(feats, _PAIR_U, axis=2)
    v = gather(feats, _PAIR_V, axis=2)
    pairs = reshape(concat([u, v], axis=3), (b * 10 * 6, 2 * D_FEAT))
    h = relu(bias_add(matmul(pairs, params["rel.g1.w"]), params["rel.g1.b"]))
    h = bias_add(matmul(h, params["rel.g2.w"]), params["rel.g2.b"])
    summed = reduce_sum(reshape(h, (b, 10, 6, D_FEAT)), axis=2)
    flat = reshape(summed, (b * 10, D_FEAT))
    out = bias_add(matmul(flat, params["rel.f.w"]), params["rel.f.b"])
    return reshape(out, (b, 10, D_FEAT))


def _module_apply(params: Dict[str, Tensor], slot: int, attr: Attribute, flat: Tensor) -> Tensor:
    """One attribute head on flattened features: (N,D) -> (N,DT)."""
    w1, b1, w2, b2 = module_param_names(slot, attr)
    h = relu(bias_add(matmul(flat, params[w1]), params[b1]))
    return bias_add(matmul(h, params[w2]), params[b2])


def _slice_rows(t: Tensor, lo: int, hi: int) -> Tensor:
    return gather(t, list(range(lo, hi)), axis=1)


# ---------------------------------------------------------------------------
# batched forward
# ---------------------------------------------------------------------------

@dataclass
class BatchScores:
    """Graph handles for one batched forward pass."""

    s: Tensor                                   # (B,8) candidate scores
    base: Tensor                                # (B,8) tau-agreement term
    outs: Tuple[Dict, Dict, Dict]               # per row: {(slot,attr): (B,8,DT)}
    targets: Optional[Dict]                     # meta: {(slot,attr): (B,DT)}
    mask: Optional[np.ndarray]                  # (B, n_groups) 0/1
    groups: Tuple[Tuple[int, Attribute], ...]


def _meta_arrays(
    annotations: Sequence[Annotation],
    groups: Tuple[Tuple[int, Attribute], ...],
) -> Tuple[np.ndarray, np.ndarray]:
    """Per instance and group: annotated? and which family index."""
    b, g = len(annotations), len(groups)
    mask = np.zeros((b, g))
    fam = np.zeros((b, g), dtype=np.int64)
    for i, ann in enumerate(annotations):
        for j, (slot, attr) in enumerate(groups):
            rule = ann.rule_for(slot, attr)
            if rule is not None:
                mask[i, j] = 1.0
                fam[i, j] = int(rule.family)
    return mask, fam


def forward_scores(
    params: Dict[str, Tensor],
    x: np.ndarray,
    config: Config,
    mode: str = "plain",
    annotations: Optional[Sequence[Annotation]] = None,
) -> BatchScores:
    """x: (B,16,H,W) uint8 or ink floats -> candidate scores (B,8)."""
    if mode not in MODES:
        raise ValueError(f"mode {mode!r} not in {MODES}")
    if x.ndim != 4 or x.shape[1] != 16:
        raise ShapeMismatch(f"expected (B,16,H,W) panels, got {x.shape}")
    if mode == "meta":
        if annotations is None:
            raise MissingMeta("meta mode needs per-instance annotations")
        if len(annotations) != x.shape[0]:
            raise ShapeMismatch(
                f"{len(annotations)} annotations for batch of {x.shape[0]}"
            )
    xi = ink_image(x)
    b = xi.shape[0]
    groups = active_groups(config)

    pf = _encode(params, "enc1", _panel_stack(xi))          # (16B, D)
    feats = reshape(pf, (b, 16, D_FEAT))
    row_feats = reshape(
        gather(feats, [i for row in _ROW_PANELS for i in row], axis=1),
        (b, 10, 3, D_FEAT),
    )
    m_p = _relation(params, row_feats, b)                   # (B,10,D)
    m_r = reshape(_encode(params, "enc3", _row_stack(xi)), (b, 10, D_FEAT))
    m_o = reshape(_encode(params, "enc6", _overall_stack(xi)), (b, 17, D_FEAT))

    pr = add(m_p, m_r)                                      # (B,10,D)
    e1 = add(
        broadcast_to(_slice_rows(pr, 0, 1), (b, 8, D_FEAT)),
        _slice_rows(m_o, 1, 9),
    )
    e2 = add(
        broadcast_to(_slice_rows(pr, 1, 2), (b, 8, D_FEAT)),
        _slice_rows(m_o, 9, 17),
    )
    e3 = add(
        _slice_rows(pr, 2, 10),
        broadcast_to(_slice_rows(m_o, 0, 1), (b, 8, D_FEAT)),
    )

    outs: Tuple[Dict, Dict, Dict] = ({}, {}, {})
    taus: List[Optional[Tensor]] = [None, None, None]
    for r, e in enumerate((e1, e2, e3)):
        flat = reshape(e, (b * 8, D_FEAT))
        for slot, attr in groups:
            o = reshape(_module_apply(params, slot, attr, flat), (b, 8, D_ATTR))
            outs[r][(slot, attr)] = o
            taus[r] = o if taus[r] is None else add(taus[r], o)

    base = cosine_similarity(taus[2], scale(add(taus[0], taus[1]), 0.5))  # (B,8)

    if mode == "plain":
        s = scale(base, float(len(groups)))
        for slot, attr in groups:
            avg = scale(add(outs[0][(slot, attr)], outs[1][(slot, attr)]), 0.5)
            s = add(s, cosine_similarity(outs[2][(slot, attr)], avg))
        return BatchScores(s, base, outs, None, None, groups)

    mask, fam = _meta_arrays(annotations, groups)
    coef = Tensor(np.repeat(mask.sum(axis=1, keepdims=True), 8, axis=1))
    s = mul(base, coef)
    targets: Dict = {}
    for j, (slot, attr) in enumerate(groups):
        tgt = gather(params["rule_table"], fam[:, j], axis=0)     # (B,DT)
        targets[(slot, attr)] = tgt
        tgt8 = broadcast_to(reshape(tgt, (b, 1, D_ATTR)), (b, 8, D_ATTR))
        term = cosine_similarity(outs[2][(slot, attr)], tgt8)     # (B,8)
        mcol = Tensor(np.repeat(mask[:, j : j + 1], 8, axis=1))
        s = add(s, mul(term, mcol))
    return BatchScores(s, base, outs, targets, mask, groups)


def batch_loss(
    params: Dict[str, Tensor],
    x: np.ndarray,
    labels: np.ndarray,
    config: Config,
    mode: str = "plain",
    lam: float = 0.0,
    mu: float = 0.0,
    annotations: Optional[Sequence[Annotation]] = None,
) -> Tuple[Tensor, BatchScores]:
    """Mean cross-entropy + lam * margin (+ mu * alignment in meta mode)."""
    bs = forward_scores(params, x, config, mode, annotations)
    labels = np.asarray(labels, dtype=np.int64)
    b = x.shape[0]
    total = reduce_mean(softmax_cross_entropy(bs.s, labels))
    if lam != 0.0:
        # sum_{i != y} s_i - s_y  ==  sum_i s_i - 2 * s_y
        margin = sub(reduce_sum(bs.s, axis=1), scale(select_index(bs.s, labels), 2.0))
        total = add(total, scale(reduce_mean(margin), lam))
    if mode == "meta" and mu != 0.0:
        acc: Optional[Tensor] = None
        denom = 0.0
        for j, key in enumerate(bs.groups):
            mcol = Tensor(bs.mask[:, j])
            for r in (0, 1):
                picked = select_index(bs.outs[r][key], labels)    # (B,DT)
                gap = sub(1.0, cosine_similarity(picked, bs.targets[key]))
                term = reduce_sum(mul(gap, mcol))
                acc = term if acc is None else add(acc, term)
            denom += 2.0 * float(bs.mask[:, j].sum())
        if acc is not None and denom > 0:
            total = add(total, scale(acc, mu / denom))
    return total, bs


# ---------------------------------------------------------------------------
# masking
# ---------------------------------------------------------------------------

def inactive_param_names(config: Config, mode: str) -> frozenset:
    """Parameters structurally outside the graph for this config/mode."""
    names = set()
    for slot in range(n_components(config), 2):
        for attr in Attribute:
            names.update(module_param_names(slot, attr))
    if mode == "plain":
        names.add("rule_table")
    return frozenset(names)


def frozen_module_names(
    config: Config, metas: Sequence[MetaTarget]
) -> frozenset:
    """Module params whose attribute bit is absent from every meta-target."""
    names = set()
    for slot, attr in active_groups(config):
        bit = 9 * slot + int(attr)
        if not any(m.bits[bit] for m in metas):
            names.update(module_param_names(slot, attr))
    return frozenset(names)


# ---------------------------------------------------------------------------
# per-instance surface
# ---------------------------------------------------------------------------

@dataclass
class ScoreVector:
    """Scores plus the interpretable pieces for one instance."""

    config: Config
    mode: str
    scores: Tensor                                  # (8,)
    base: np.ndarray                                # (8,)
    attr_vectors: Dict                              # {(slot,attr): (3,8,DT)}
    rule_sims: Dict                                 # {(slot,attr): (8,4)}
    rule_choice: Dict                               # {(slot,attr): (8,) int}


def _cos_rows(v: np.ndarray, table: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Cosine of each row of v against each row of table."""
    vn = np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), eps)
    tn = np.maximum(np.linalg.norm(table, axis=-1, keepdims=True), eps)
    return (v / vn) @ (table / tn).T


def infer_rule(params: Dict[str, Tensor], vec) -> Tuple[int, np.ndarray]:
    """Nearest rule-family embedding by cosine; ties break to the lowest index."""
    v = vec.data if isinstance(vec, Tensor) else np.asarray(vec, dtype=np.float64)
    sims = _cos_rows(v[None, :], params["rule_table"].data)[0]
    return int(np.argmax(sims)), sims


def score_candidates(
    params: Dict[str, Tensor],
    rasters: np.ndarray,
    config: Config,
    mode: str = "plain",
    annotation: Optional[Annotation] = None,
) -> ScoreVector:
    """rasters: (16,H,W) one instance -> per-candidate scores and evidence."""
    if rasters.ndim != 3:
        raise ShapeMismatch(f"expected (16,H,W), got {rasters.shape}")
    anns = [annotation] if annotation is not None else None
    bs = forward_scores(params, rasters[None], config, mode, anns)
    table = params["rule_table"].data
    attr_vectors = {}
    rule_sims = {}
    rule_choice = {}
    for key in bs.groups:
        rows = np.stack([bs.outs[r][key].data[0] for r in range(3)])  # (3,8,DT)
        attr_vectors[key] = rows
        sims = _cos_rows(rows[2], table)                              # (8,4)
        rule_sims[key] = sims
        rule_choice[key] = sims.argmax(axis=1)
    return ScoreVector(
        config=config,
        mode=mode,
        scores=reshape(bs.s, (8,)),
        base=bs.base.data[0].copy(),
        attr_vectors=attr_vectors,
        rule_sims=rule_sims,
        rule_choice=rule_choice,
    )


def predict(sv: ScoreVector) -> int:
    """Highest score wins; ties break to the lowest index."""
    return int(np.argmax(sv.scores.data))


def loss(sv: ScoreVector, label: int, lam: float = 0.0) -> Tensor:
    """Cross-entropy on the 8 scores plus lam * (sum_{i!=y} s_i - s_y)."""
    if not 0 <= label < 8:
        raise ValueError(f"label {label} out of range")
    ce = softmax_cross_entropy(sv.scores, label)
    if lam == 0.0:
        return ce
    picked = reduce_sum(gather(sv.scores, [label], axis=0))
    margin = sub(reduce_sum(sv.scores), scale(picked, 2.0))
    return add(ce, scale(margin, lam))


def module_transform(params: Dict[str, Tensor], e: Tensor, slot: int, attr: Attribute) -> Tensor:
    """One attribute head on a single feature vector: (D,) -> (DT,)."""
    if e.shape != (D_FEAT,):
        raise ShapeMismatch(f"expected ({D_FEAT},), got {e.shape}")
    return reshape(_module_apply(params, slot, attr, reshape(e, (1, D_FEAT))), (D_ATTR,))


def encode_panelwise(params: Dict[str, Tensor], row: np.ndarray) -> Tensor:
    """Panel-granularity feature of one 3-panel row: (3,H,W) -> (D,)."""
    if row.ndim != 3 or row.shape[0] != 3:
        raise ShapeMismatch(f"expected (3,H,W), got {row.shape}")
    xi = ink_image(row)
    pf = _encode(params, "enc1", xi[..., None])              # (3,D)
    u = gather(pf, _PAIR_U, axis=0)
    v = gather(pf, _PAIR_V, axis=0)
    pairs = concat([u, v], axis=1)                           # (6,2D)
    h = relu(bias_add(matmul(pairs, params["rel.g1.w"]), params["rel.g1.b"]))
    h = bias_add(matmul(h, params["rel.g2.w"]), params["rel.g2.b"])
    summed = reshape(reduce_sum(h, axis=0), (1, D_FEAT))
    out = bias_add(matmul(summed, params["rel.f.w"]), params["rel.f.b"])
    return reshape(out, (D_FEAT,))


def encode_rowwise(params: Dict[str, Tensor], row: np.ndarray) -> Tensor:
    """Row-granularity feature: the row's 3 panels as image channels."""
    if row.ndim != 3 or row.shape[0] != 3:
        raise ShapeMismatch(f"expected (3,H,W), got {row.shape}")
    xi = ink_image(row)
    x = np.ascontiguousarray(xi.transpose(1, 2, 0)[None])    # (1,H,W,3)
    return reshape(_encode(params, "enc3", x), (D_FEAT,))


def encode_overall(params: Dict[str, Tensor], row_a: np.ndarray, row_b: np.ndarray) -> Tensor:
    """Two-row feature: six panels as image channels."""
    if row_a.shape != row_b.shape or row_a.ndim != 3 or row_a.shape[0] != 3:
        raise ShapeMismatch(f"expected two (3,H,W) rows, got {row_a.shape} / {row_b.shape}")
    xi = np.concatenate([ink_image(row_a), ink_image(row_b)], axis=0)
    x = np.ascontiguousarray(xi.transpose(1, 2, 0)[None])    # (1,H,W,6)
    return reshape(_encode(params, "enc6", x), (D_FEAT,))
