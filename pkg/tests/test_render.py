"""Rasterizer: determinism, intensity coding, size behavior."""
import numpy as np
import pytest

from ravenlab.errors import UnsupportedSize
from ravenlab.puzzles import Config, Entity, Panel, generate_puzzle
from ravenlab.render import (
    SUPPORTED_SIZES,
    fill_intensity,
    render_panel,
    render_puzzle,
)


def one_shape(type=0, size=3, color=0):
    return Panel(((Entity(0, type, size, color),),))


def test_supported_sizes():
    assert SUPPORTED_SIZES == (40, 80)
    for n in SUPPORTED_SIZES:
        img = render_panel(one_shape(), Config.CENTER, n)
        assert img.shape == (n, n) and img.dtype == np.uint8
    with pytest.raises(UnsupportedSize):
        render_panel(one_shape(), Config.CENTER, 64)


def test_background_is_white_and_outline_black():
    img = render_panel(one_shape(type=1, color=0), Config.CENTER, 80)
    assert img[0, 0] == 255 and img[-1, -1] == 255
    assert (img == 0).any()          # outline pixels
    assert (img == 230).any()        # fill at color level 0


def test_fill_intensity_scale():
    # darker fill for higher color level, 20 counts per step from 230
    assert [fill_intensity(c) for c in range(10)] == [
        230, 210, 190, 170, 150, 130, 110, 90, 70, 50
    ]


def test_color_level_sets_fill_pixels():
    for c in (0, 4, 9):
        img = render_panel(one_shape(type=1, size=4, color=c), Config.CENTER, 80)
        assert (img == fill_intensity(c)).sum() > 0


def test_every_type_draws_ink_in_every_layout_slot():
    from ravenlab.puzzles import component_layout

    for config in Config:
        layout = component_layout(config)
        for comp in range(len(layout)):
            for slot in range(len(layout[comp])):
                for type in range(5):
                    comps = [() for _ in layout]
                    comps[comp] = (Entity(slot, type, 0, 0),)
                    img = render_panel(Panel(tuple(comps)), config, 40)
                    assert (img < 255).sum() > 0, (config, comp, slot, type)


def test_rendering_is_deterministic():
    p = generate_puzzle(Config.OUT_IN_GRID, 5)
    a = render_puzzle(p, 40)
    b = render_puzzle(p, 40)
    assert a.shape == (16, 40, 40) and a.dtype == np.uint8
    np.testing.assert_array_equal(a, b)


def test_ink_grows_with_size_level():
    # at 80x80 the six size levels of every shape are strictly ordered by
    # ink coverage in the full-square slot
    for type in range(5):
        counts = [
            (render_panel(one_shape(type=type, size=s), Config.CENTER, 80) < 255).sum()
            for s in range(6)
        ]
        assert all(a < b for a, b in zip(counts, counts[1:])), (type, counts)


def test_two_component_panels_draw_both_components():
    inner = Entity(0, 4, 2, 5)
    outer = Entity(0, 1, 5, 0)
    panel = Panel(((outer,), (inner,)))
    img = render_panel(panel, Config.OUT_IN_CENTER, 80)
    # inner circle fill present in the middle, outer square outline at edges
    assert (img == fill_intensity(5)).sum() > 0
    mid = img[30:50, 30:50]
    assert (mid < 255).sum() > 0


def test_grid_slots_do_not_overlap():
    # one entity per 2x2 slot, each drawn inside its quarter
    for slot in range(4):
        panel = Panel(((Entity(slot, 1, 5, 0),),))
        img = render_panel(panel, Config.GRID_2X2, 80)
        ys, xs = np.nonzero(img < 255)
        assert ys.size > 0
        r, c = divmod(slot, 2)
        assert ys.min() >= 40 * r and ys.max() < 40 * (r + 1)
        assert xs.min() >= 40 * c and xs.max() < 40 * (c + 1)


def test_render_puzzle_stacks_context_then_candidates():
    p = generate_puzzle(Config.CENTER, 9)
    stack = render_puzzle(p, 40)
    for i in range(8):
        np.testing.assert_array_equal(
            stack[i], render_panel(p.context[i], p.config, 40)
        )
        np.testing.assert_array_equal(
            stack[8 + i], render_panel(p.candidates[i], p.config, 40)
        )
