from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ramsey_forge.core import (
    UNCOLORED,
    AlreadyColored,
    AvailabilityViolation,
    ColoringFileError,
    PaletteSpec,
    ProcessConfig,
    assign_color,
    available_at_edge,
    available_at_vertex,
    edge_available_mask,
    forbidden_by_path,
    format_coloring,
    init_state,
    parse_coloring,
    recolor,
    recompute_hit,
    special_probability,
)


@pytest.mark.parametrize("n,total,phase1", [(30, 28, 27), (60, 56, 53), (100, 94, 89)])
def test_palette_sizes(n, total, phase1):
    pal = PaletteSpec.for_run(n, 0.1)
    assert (pal.total, pal.phase1) == (total, phase1)
    assert pal.reserved == total - phase1


@given(st.integers(4, 2000), st.floats(0.001, 0.99))
def test_palette_keeps_a_reserved_color(n, eps):
    pal = PaletteSpec.for_run(n, eps)
    assert pal.reserved >= 1
    assert pal.phase1 >= 5 * n / 6


def test_special_probability():
    assert special_probability(0.1) == pytest.approx(0.05 / (5 / 6 + 0.05))


@pytest.mark.parametrize("kw", [{"n": 3}, {"n": 10, "epsilon": 0}, {"n": 10, "epsilon": 1.5},
                                {"n": 10, "on_no_pair": "retry"}, {"n": 10, "max_steps": -1}])
def test_config_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        ProcessConfig(**kw)


def test_special_sets_have_expected_density():
    st_ = init_state(ProcessConfig(n=300, epsilon=0.1), np.random.default_rng(0))
    sizes = [m.bit_count() for m in st_.special]
    mean = sum(sizes) / len(sizes)
    assert mean == pytest.approx(st_.palette.phase1 * special_probability(0.1), rel=0.05)
    assert all(m < (1 << st_.palette.phase1) for m in st_.special)


def fresh(n=8):
    state = init_state(ProcessConfig(n=n, epsilon=0.5), np.random.default_rng(5))
    state.special = [0] * n
    state._vertex_ok = [state.phase1_mask] * n
    return state


def test_vertex_availability_tracks_hits_and_special_sets():
    s = fresh()
    s.special[0] = 1 << 3
    s._vertex_ok[0] &= ~(1 << 3)
    assert not available_at_vertex(s, 0, 3)
    assert available_at_vertex(s, 0, 2)
    assign_color(s, 0, 1, 2)
    assert not available_at_vertex(s, 0, 2) and not available_at_vertex(s, 1, 2)
    assert s.hit == recompute_hit(s)


def test_alternating_path_forbids_color():
    s = fresh()
    # u=0, v=3; path 0-1-2-3 with 01 ~ 23 (color 4) and 12 colored 5
    assign_color(s, 0, 1, 4)
    assign_color(s, 2, 3, 4)
    assign_color(s, 1, 2, 5)
    assert forbidden_by_path(s, 0, 3) == 1 << 5
    assert not available_at_edge(s, 0, 3, 5)
    assert available_at_edge(s, 0, 3, 6)
    assert not (edge_available_mask(s, 0, 3) >> 5) & 1


def test_assign_checks_availability_and_double_coloring():
    s = fresh()
    assign_color(s, 0, 1, 4)
    with pytest.raises(AlreadyColored):
        assign_color(s, 1, 0, 2)
    with pytest.raises(AvailabilityViolation):
        assign_color(s, 0, 2, 4)


def test_recolor_keeps_hit_sets_consistent():
    s = fresh()
    assign_color(s, 0, 1, 4)
    assign_color(s, 0, 2, 6)
    recolor(s, 0, 1, 7)
    assert s.hit == recompute_hit(s)
    assert s.partners[0] == {6: [2], 7: [1]}


def test_triangle_store_follows_coloring():
    s = fresh(6)
    assign_color(s, 0, 1, 0)
    assert (0, 1, 2) not in s.triangles
    assert len(s.triangles) == 20 - 4


def test_coloring_file_roundtrip():
    rng = np.random.default_rng(0)
    c = rng.integers(0, 9, (7, 7))
    c = np.triu(c, 1)
    c = c + c.T
    np.fill_diagonal(c, UNCOLORED)
    back, total = parse_coloring(format_coloring(c, 9))
    assert total == 9 and np.array_equal(back, c)


@pytest.mark.parametrize("text", [
    "", "n 4 colours 6\n", "n 4 colors 6\n0 1 2\n1 0 3\n", "n 4 colors 6\n0 0 1\n",
    "n 4 colors 6\n0 1 9\n", "n 4 colors 6\n0 1\n", "n 4 colors 6\n0 x 1\n",
])
def test_parse_rejects_corrupt_files(text):
    with pytest.raises(ColoringFileError):
        parse_coloring(text)
