"""Modular network: shapes, masking, equivariance, loss identities."""
import math

import numpy as np
import pytest

from ravenlab.autograd import AdamState, Tape, adam_step, backward, zero_grads
from ravenlab.errors import MissingMeta, ShapeMismatch
from ravenlab.model import (
    D_ATTR,
    D_FEAT,
    active_groups,
    batch_loss,
    forward_scores,
    frozen_module_names,
    inactive_param_names,
    infer_rule,
    init_params,
    ink_image,
    loss,
    module_param_names,
    module_transform,
    predict,
    score_candidates,
)
from ravenlab.puzzles import Attribute, Config, generate_puzzle
from ravenlab.render import render_puzzle


@pytest.fixture(scope="module")
def params():
    return init_params(0)


@pytest.fixture(scope="module")
def center_batch():
    puzzles = [generate_puzzle(Config.CENTER, s) for s in range(6)]
    x = np.stack([render_puzzle(p, 40) for p in puzzles])
    y = np.array([p.label for p in puzzles])
    anns = [p.annotation for p in puzzles]
    metas = [p.meta for p in puzzles]
    return puzzles, x, y, anns, metas


def test_parameter_inventory(params):
    assert len(params) == 65
    assert sum(p.data.size for p in params.values()) == 113200
    assert params["rule_table"].shape == (4, D_ATTR)
    for name, p in params.items():
        assert p.requires_grad and p.name == name
        assert p.data.dtype == np.float64


def test_init_is_deterministic_and_seed_sensitive():
    a, b, c = init_params(3), init_params(3), init_params(4)
    for k in a:
        np.testing.assert_array_equal(a[k].data, b[k].data)
    assert any((a[k].data != c[k].data).any() for k in a)


def test_rule_table_rows_are_orthonormal(params):
    table = params["rule_table"].data
    np.testing.assert_allclose(table @ table.T, np.eye(4), atol=1e-10)


def test_ink_image_maps_background_to_zero():
    img = np.full((2, 2), 255, dtype=np.uint8)
    np.testing.assert_array_equal(ink_image(img), np.zeros((2, 2)))
    img[0, 0] = 0
    assert ink_image(img)[0, 0] == 1.0
    floats = np.full((2, 2), 0.25)
    np.testing.assert_array_equal(ink_image(floats), floats)


def test_active_groups_follow_component_count():
    assert len(active_groups(Config.CENTER)) == 5
    assert len(active_groups(Config.LEFT_RIGHT)) == 10
    assert active_groups(Config.CENTER)[0] == (0, Attribute.NUMBER)


def test_forward_shapes(params, center_batch):
    _, x, _, anns, _ = center_batch
    for mode, a in (("plain", None), ("meta", anns)):
        bs = forward_scores(params, x, Config.CENTER, mode, a)
        assert bs.s.shape == (6, 8)
        assert bs.base.shape == (6, 8)
        assert np.isfinite(bs.s.data).all()


def test_meta_mode_requires_annotations(params, center_batch):
    _, x, _, _, _ = center_batch
    with pytest.raises(MissingMeta):
        forward_scores(params, x, Config.CENTER, "meta")


def test_bad_mode_and_shape_rejected(params, center_batch):
    _, x, _, _, _ = center_batch
    with pytest.raises(ValueError):
        forward_scores(params, x, Config.CENTER, "other")
    with pytest.raises(ShapeMismatch):
        forward_scores(params, x[:, :10], Config.CENTER)


def test_candidate_permutation_equivariance(params, center_batch):
    puzzles, x, _, anns, _ = center_batch
    rng = np.random.default_rng(0)
    for i in range(3):
        base = forward_scores(params, x[i : i + 1], Config.CENTER).s.data[0]
        for _ in range(4):
            perm = rng.permutation(8)
            xp = x[i : i + 1].copy()
            xp[0, 8:] = xp[0, 8:][perm]
            permuted = forward_scores(params, xp, Config.CENTER).s.data[0]
            np.testing.assert_array_equal(permuted, base[perm])


def test_equivariance_in_meta_mode(params, center_batch):
    _, x, _, anns, _ = center_batch
    base = forward_scores(params, x[:1], Config.CENTER, "meta", anns[:1]).s.data[0]
    perm = np.array([5, 3, 7, 0, 2, 6, 1, 4])
    xp = x[:1].copy()
    xp[0, 8:] = xp[0, 8:][perm]
    permuted = forward_scores(params, xp, Config.CENTER, "meta", anns[:1]).s.data[0]
    np.testing.assert_array_equal(permuted, base[perm])


def test_loss_reduces_to_cross_entropy_when_lambda_zero(params, center_batch):
    _, x, y, _, _ = center_batch
    total, bs = batch_loss(params, x, y, Config.CENTER, lam=0.0)
    z = bs.s.data
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    ce = -logp[np.arange(len(y)), y].mean()
    assert abs(float(total.data) - ce) < 1e-12


def test_identical_candidates_give_log8_loss(params, center_batch):
    _, x, y, _, _ = center_batch
    xx = x[:2].copy()
    xx[:, 9:] = xx[:, 8:9]          # clone candidate 0 into all slots
    total, _ = batch_loss(params, xx, np.zeros(2, dtype=int), Config.CENTER)
    assert abs(float(total.data) - math.log(8.0)) < 1e-9


def test_margin_term_changes_loss(params, center_batch):
    _, x, y, _, _ = center_batch
    a, _ = batch_loss(params, x, y, Config.CENTER, lam=0.0)
    b, _ = batch_loss(params, x, y, Config.CENTER, lam=0.5)
    assert abs(float(a.data) - float(b.data)) > 1e-9


def test_inactive_params_single_component():
    inactive = inactive_param_names(Config.CENTER, "plain")
    assert "rule_table" in inactive
    assert "mod1.size.w1" in inactive
    assert "mod0.size.w1" not in inactive
    meta_inactive = inactive_param_names(Config.CENTER, "meta")
    assert "rule_table" not in meta_inactive
    assert not inactive_param_names(Config.OUT_IN_GRID, "meta")


def test_frozen_modules_follow_meta_bits(center_batch):
    puzzles, _, _, _, metas = center_batch
    frozen = frozen_module_names(Config.CENTER, metas)
    # a single-slot layout never governs position, so both halves of the
    # position head stay frozen; number/type/size/color all occur
    assert set(module_param_names(0, Attribute.POSITION)) <= frozen
    assert not set(module_param_names(0, Attribute.TYPE)) & frozen


def _train_step(params, x, y, config, mode, anns, metas):
    state = AdamState(lr=1e-3)
    skip = set(inactive_param_names(config, mode))
    if mode == "meta":
        skip |= frozen_module_names(config, metas)
    with Tape() as tape:
        total, _ = batch_loss(
            params, x, y, config, mode,
            lam=0.01, mu=0.1,
            annotations=anns if mode == "meta" else None,
        )
        backward(total, tape)
    adam_step(params, state, skip=skip)
    zero_grads(params.values())
    return skip


def test_masked_step_is_bit_identical_on_absent_attribute(center_batch):
    _, x, y, anns, metas = center_batch
    params = init_params(1)
    watched = [
        name
        for slot in (0, 1)
        for name in module_param_names(slot, Attribute.POSITION)
    ]
    before = {n: params[n].data.tobytes() for n in watched}
    _train_step(params, x, y, Config.CENTER, "meta", anns, metas)
    for n in watched:
        assert params[n].data.tobytes() == before[n], n
    # a governed attribute must move
    assert params["mod0.size.w1"].data.tobytes() != init_params(1)["mod0.size.w1"].data.tobytes()


def test_plain_step_trains_position_module_but_not_rule_table(center_batch):
    _, x, y, _, _ = center_batch
    params = init_params(2)
    before_pos = params["mod0.position.w1"].data.tobytes()
    before_table = params["rule_table"].data.tobytes()
    _train_step(params, x, y, Config.CENTER, "plain", None, None)
    assert params["mod0.position.w1"].data.tobytes() != before_pos
    assert params["rule_table"].data.tobytes() == before_table


def test_score_candidates_surface(params, center_batch):
    puzzles, x, _, anns, _ = center_batch
    sv = score_candidates(params, x[0], Config.CENTER, "meta", anns[0])
    assert sv.scores.shape == (8,)
    assert sv.base.shape == (8,)
    assert set(sv.rule_sims) == set(active_groups(Config.CENTER))
    for key, sims in sv.rule_sims.items():
        assert sims.shape == (8, 4)
        assert (np.abs(sims) <= 1 + 1e-9).all()
        assert sv.rule_choice[key].shape == (8,)
    assert 0 <= predict(sv) < 8
    per_batch = forward_scores(params, x[:1], Config.CENTER, "meta", anns[:1])
    np.testing.assert_array_equal(sv.scores.data, per_batch.s.data[0])


def test_per_instance_loss_matches_manual_ce(params, center_batch):
    _, x, _, anns, _ = center_batch
    sv = score_candidates(params, x[0], Config.CENTER)
    z = sv.scores.data - sv.scores.data.max()
    ce = -(z[3] - np.log(np.exp(z).sum()))
    assert abs(float(loss(sv, 3).data) - ce) < 1e-12


def test_infer_rule_recovers_table_rows(params):
    table = params["rule_table"].data
    for fam in range(4):
        choice, sims = infer_rule(params, table[fam] * 2.5)
        assert choice == fam
        assert abs(sims[fam] - 1.0) < 1e-9


def test_module_transform_shape(params):
    from ravenlab.autograd import Tensor

    e = Tensor(np.random.default_rng(0).standard_normal(D_FEAT))
    out = module_transform(params, e, 0, Attribute.COLOR)
    assert out.shape == (D_ATTR,)


def test_training_gradients_cover_all_live_params(center_batch):
    _, x, y, anns, metas = center_batch
    params = init_params(5)
    with Tape() as tape:
        total, _ = batch_loss(
            params, x, y, Config.CENTER, "meta", lam=0.01, mu=0.1, annotations=anns
        )
        backward(total, tape)
    skip = set(inactive_param_names(Config.CENTER, "meta"))
    skip |= frozen_module_names(Config.CENTER, metas)
    for name, p in params.items():
        if name in skip:
            continue
        assert p.grad is not None, name
