"""The randomized triangle-coloring process that colors most of K_n."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    UNCOLORED,
    AvailabilityViolation,
    ColoringState,
    ProcessConfig,
    _set_color,
    forbidden_by_path,
)
from .rng import bits, choose_bit

COLORED = "Colored"
NO_PAIR = "NoPairAvailable"
NO_TRIANGLES = "NoTriangles"


@dataclass
class StepOutcome:
    tag: str
    triangle: tuple[int, int, int] | None = None
    pair: tuple[int, int] | None = None
    c1_size: int = 0
    c2_size: int = 0


@dataclass
class Phase1Report:
    steps: int
    edges_colored: int
    termination: str
    skips: int
    colors_used: int
    seconds: float
    stalled: list[tuple[int, int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "edges_colored": self.edges_colored,
            "termination": self.termination,
            "skips": self.skips,
            "colors_used": self.colors_used,
            "seconds": round(self.seconds, 6),
        }


def sample_oriented_triangle(state: ColoringState, rng: np.random.Generator):
    """Uniform uncolored triangle and uniform apex; None if none remain.

    Returns (u, u1, u2) with u the apex and u1 < u2.
    """
    store = state.triangles
    if len(store) == 0:
        return None
    a, b, c = store.decode(store.sample(rng))
    slot = int(rng.integers(3))
    return _orient((a, b, c), slot)


def _orient(tri: tuple[int, int, int], slot: int) -> tuple[int, int, int]:
    rest = [x for i, x in enumerate(tri) if i != slot]
    return tri[slot], rest[0], rest[1]


def enumerate_candidates(state: ColoringState, u: int, u1: int, u2: int) -> tuple[int, int]:
    """(C1, C2) bitsets: 1-available and 2-available colors at the triple."""
    color = state.color
    if color[u][u1] != UNCOLORED or color[u][u2] != UNCOLORED or color[u1][u2] != UNCOLORED:
        raise AvailabilityViolation(f"triple ({u}, {u1}, {u2}) has a colored edge")
    ok = state._vertex_ok
    c1 = state.special[u] & ok[u1] & ok[u2]
    if c1:
        c1 &= ~forbidden_by_path(state, u1, u2, restrict=None)
    c2 = ok[u] & ok[u1] & ok[u2]
    if c2:
        c2 &= ~forbidden_by_path(state, u, u1)
    if c2:
        c2 &= ~forbidden_by_path(state, u, u2)
    return c1, c2


def color_triangle(state: ColoringState, u: int, u1: int, u2: int, k: int, k1: int) -> None:
    """Give uu1, uu2 color k and u1u2 color k1 after checking availability."""
    c1, c2 = enumerate_candidates(state, u, u1, u2)
    if not (c1 >> k1) & 1 or not (c2 >> k) & 1:
        raise AvailabilityViolation(f"pair ({k}, {k1}) is not available at ({u}, {u1}, {u2})")
    _color_unchecked(state, u, u1, u2, k, k1)


def _color_unchecked(state, u, u1, u2, k, k1):
    _set_color(state, u, u1, k)
    _set_color(state, u, u2, k)
    _set_color(state, u1, u2, k1)
    state.step_index += 1


def step(state: ColoringState, rng: np.random.Generator, skip: bool = False) -> StepOutcome:
    """One step of the process.

    With ``skip`` set, a starved orientation is marked and reported as
    NoPairAvailable but the state stays usable; orientations already marked
    are never drawn again.
    """
    if state.phase != "phase1":
        raise RuntimeError("step() called outside Phase 1")
    store = state.triangles
    if skip:
        if store.live_count == 0:
            return StepOutcome(NO_TRIANGLES)
        tid, slot = store.sample_live(rng)
    else:
        if len(store) == 0:
            return StepOutcome(NO_TRIANGLES)
        tid = store.sample(rng)
        slot = int(rng.integers(3))
    tri = store.decode(tid)
    u, u1, u2 = _orient(tri, slot)
    c1, c2 = enumerate_candidates(state, u, u1, u2)
    n1, n2 = c1.bit_count(), c2.bit_count()
    if not n1 or not n2:
        if skip:
            store.mark_dead(tid, slot)
        return StepOutcome(NO_PAIR, (u, u1, u2), None, n1, n2)
    k1 = choose_bit(c1, rng)
    k = choose_bit(c2, rng)
    _color_unchecked(state, u, u1, u2, k, k1)
    return StepOutcome(COLORED, (u, u1, u2), (k, k1), n1, n2)


def colors_used(state: ColoringState) -> int:
    mask = 0
    for h in state.hit:
        mask |= h
    return mask.bit_count()


def run_phase1(
    state: ColoringState,
    rng: np.random.Generator,
    config: ProcessConfig,
    on_checkpoint: Callable[[ColoringState], None] | None = None,
    on_step: Callable[[ColoringState, StepOutcome], None] | None = None,
) -> Phase1Report:
    """Iterate ``step`` until the process stops.

    ``on_checkpoint`` fires at step 0 and every ``config.checkpoint_every``
    colored steps; ``on_step`` fires after every colored step.
    """
    skip = config.on_no_pair == "skip"
    every = config.checkpoint_every
    start = time.perf_counter()
    skips = 0
    stalled = []
    termination = "no_triangles"
    if on_checkpoint is not None and every:
        on_checkpoint(state)
    while True:
        if config.max_steps is not None and state.step_index >= config.max_steps:
            termination = "max_steps"
            break
        out = step(state, rng, skip=skip)
        if out.tag == COLORED:
            if on_step is not None:
                on_step(state, out)
            if on_checkpoint is not None and every and state.step_index % every == 0:
                on_checkpoint(state)
            continue
        if out.tag == NO_TRIANGLES:
            termination = "no_triangles"
            break
        stalled.append(out.triangle)
        if not skip:
            termination = "no_pair"
            break
        skips += 1
    return Phase1Report(
        steps=state.step_index,
        edges_colored=state.colored,
        termination=termination,
        skips=skips,
        colors_used=colors_used(state),
        seconds=time.perf_counter() - start,
        stalled=stalled,
    )


def candidate_lists(state: ColoringState, u: int, u1: int, u2: int) -> tuple[list[int], list[int]]:
    c1, c2 = enumerate_candidates(state, u, u1, u2)
    return bits(c1), bits(c2)
