"""Coloring state of K_n and the availability queries of the Phase-1 process.

Color sets (special sets, hit sets, candidate sets) are Python ints used as
bitsets over color indices. Colors ``0 .. palette.phase1 - 1`` form the
Phase-1 palette; the rest are reserved for Phase 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .rng import bits
from .triangles import RejectionTriangleSampler, TriangleStore

UNCOLORED = -1
STORE_MAX_N = 600


class ColoringError(Exception):
    pass


class AlreadyColored(ColoringError):
    pass


class AvailabilityViolation(ColoringError):
    pass


class ColoringFileError(ColoringError):
    pass


def _frac(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**9)


def special_probability(epsilon: float) -> float:
    """Probability that a given Phase-1 color lands in a given special set."""
    e = _frac(epsilon) / 2
    return float(e / (Fraction(5, 6) + e))


@dataclass(frozen=True)
class PaletteSpec:
    total: int
    phase1: int

    @property
    def reserved(self) -> int:
        return self.total - self.phase1

    @classmethod
    def for_run(cls, n: int, epsilon: float) -> PaletteSpec:
        e = _frac(epsilon)
        total = math.ceil((Fraction(5, 6) + e) * n)
        phase1 = math.ceil((Fraction(5, 6) + e / 2) * n)
        if total - phase1 < 1:
            # ceilings can collide when eps*n/2 < 1; keep one reserved color
            total = phase1 + 1
        return cls(total=total, phase1=phase1)


@dataclass(frozen=True)
class ProcessConfig:
    n: int
    epsilon: float = 0.1
    seed: int = 0
    on_no_pair: str = "terminate"
    max_steps: int | None = None
    checkpoint_every: int = 0
    phase2_budget: int = 1_000_000
    triangle_mode: str = "auto"

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"n must be at least 4, got {self.n}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.on_no_pair not in ("terminate", "skip"):
            raise ValueError(f"on_no_pair must be 'terminate' or 'skip', got {self.on_no_pair!r}")
        if self.max_steps is not None and self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")
        if self.triangle_mode not in ("auto", "store", "rejection"):
            raise ValueError(f"unknown triangle_mode {self.triangle_mode!r}")

    @property
    def s(self) -> float:
        return special_probability(self.epsilon)

    @property
    def palette(self) -> PaletteSpec:
        return PaletteSpec.for_run(self.n, self.epsilon)

    @property
    def stop(self) -> str:
        return "natural" if self.max_steps is None else f"max_steps({self.max_steps})"


@dataclass
class ColoringState:
    n: int
    palette: PaletteSpec
    color: list[list[int]]
    special: list[int]
    hit: list[int]
    partners: list[dict[int, list[int]]]
    triangles: TriangleStore | RejectionTriangleSampler
    step_index: int = 0
    phase: str = "phase1"
    colored: int = 0
    extra_colors: int = 0
    _vertex_ok: list[int] = field(default_factory=list, repr=False)

    @property
    def phase1_mask(self) -> int:
        return (1 << self.palette.phase1) - 1

    @property
    def num_colors(self) -> int:
        """Palette size including any Phase-2 fallback colors."""
        return self.palette.total + self.extra_colors

    def is_colored(self, u: int, v: int) -> bool:
        return self.color[u][v] != UNCOLORED

    def uncolored_edges(self) -> list[tuple[int, int]]:
        n = self.n
        return [(u, v) for u in range(n) for v in range(u + 1, n) if self.color[u][v] == UNCOLORED]

    def matrix(self) -> np.ndarray:
        return np.array(self.color, dtype=np.int64)

    def vertex_available_mask(self, v: int) -> int:
        """Phase-1 colors available at v."""
        return self._vertex_ok[v]


def init_state(config: ProcessConfig, rng: np.random.Generator) -> ColoringState:
    n = config.n
    palette = config.palette
    s = config.s
    draws = rng.random((n, palette.phase1)) < s
    special = []
    for v in range(n):
        mask = 0
        for k in np.flatnonzero(draws[v]):
            mask |= 1 << int(k)
        special.append(mask)
    mode = config.triangle_mode
    if mode == "auto":
        mode = "store" if n <= STORE_MAX_N else "rejection"
    triangles = TriangleStore(n) if mode == "store" else RejectionTriangleSampler(n)
    full = (1 << palette.phase1) - 1
    state = ColoringState(
        n=n,
        palette=palette,
        color=[[UNCOLORED] * n for _ in range(n)],
        special=special,
        hit=[0] * n,
        partners=[{} for _ in range(n)],
        triangles=triangles,
    )
    state._vertex_ok = [full & ~special[v] for v in range(n)]
    return state


def available_at_vertex(state: ColoringState, v: int, k: int) -> bool:
    return not ((state.special[v] >> k) & 1) and not ((state.hit[v] >> k) & 1)


def forbidden_by_path(state: ColoringState, u: int, v: int, restrict: int | None = None) -> int:
    """Colors k for which an alternating (uv, k)-path u-x-y-v exists.

    Walks only the colors shared by u and v; each contributes at most 2x2
    (x, y) candidates. ``restrict`` limits the shared colors scanned.
    """
    common = state.hit[u] & state.hit[v]
    if restrict is not None:
        common &= restrict
    if not common:
        return 0
    color = state.color
    pu = state.partners[u]
    pv = state.partners[v]
    out = 0
    while common:
        low = common & -common
        c = low.bit_length() - 1
        common ^= low
        for x in pu[c]:
            row = color[x]
            for y in pv[c]:
                if x != y:
                    k = row[y]
                    if k >= 0:
                        out |= 1 << k
    return out


def available_at_edge(state: ColoringState, u: int, v: int, k: int) -> bool:
    if u == v or state.color[u][v] != UNCOLORED:
        return False
    if not (available_at_vertex(state, u, k) and available_at_vertex(state, v, k)):
        return False
    return not (forbidden_by_path(state, u, v) >> k) & 1


def edge_available_mask(state: ColoringState, u: int, v: int) -> int:
    """All Phase-1 colors available at uv, as a bitset."""
    if state.color[u][v] != UNCOLORED:
        return 0
    return state._vertex_ok[u] & state._vertex_ok[v] & ~forbidden_by_path(state, u, v)


def _set_color(state: ColoringState, u: int, v: int, k: int) -> None:
    state.color[u][v] = k
    state.color[v][u] = k
    for a, b in ((u, v), (v, u)):
        plist = state.partners[a].get(k)
        if plist is None:
            state.partners[a][k] = [b]
            state.hit[a] |= 1 << k
            if k < state.palette.phase1:
                state._vertex_ok[a] &= ~(1 << k)
        else:
            plist.append(b)
    state.colored += 1
    state.triangles.discard_edge(u, v)


def assign_color(state: ColoringState, u: int, v: int, k: int, check: bool = True) -> None:
    """Color the uncolored edge uv with k.

    In Phase 1 the assignment must respect edge availability; pass
    ``check=False`` only when the caller has already verified it.
    """
    if u == v:
        raise ValueError("loops are not edges")
    if state.color[u][v] != UNCOLORED:
        raise AlreadyColored(f"edge {min(u, v)}-{max(u, v)} already has color {state.color[u][v]}")
    if check and state.phase == "phase1" and not available_at_edge(state, u, v, k):
        raise AvailabilityViolation(f"color {k} is not available at edge {u}-{v}")
    _set_color(state, u, v, k)


def recolor(state: ColoringState, u: int, v: int, k: int) -> None:
    """Replace the color of a colored edge (Phase-2 resampling only)."""
    old = state.color[u][v]
    if old == UNCOLORED:
        raise ColoringError(f"edge {u}-{v} is uncolored")
    if old == k:
        return
    for a, b in ((u, v), (v, u)):
        plist = state.partners[a][old]
        plist.remove(b)
        if not plist:
            del state.partners[a][old]
            state.hit[a] &= ~(1 << old)
        nl = state.partners[a].get(k)
        if nl is None:
            state.partners[a][k] = [b]
            state.hit[a] |= 1 << k
        else:
            nl.append(b)
    state.color[u][v] = k
    state.color[v][u] = k


def recompute_hit(state: ColoringState) -> list[int]:
    """Hit sets rebuilt from scratch out of the edge colors."""
    hit = [0] * state.n
    for u in range(state.n):
        for v in range(state.n):
            k = state.color[u][v]
            if u != v and k >= 0:
                hit[u] |= 1 << k
    return hit


def colors_of(mask: int) -> list[int]:
    return bits(mask)


# --- coloring file format -------------------------------------------------

def write_coloring(path: str | Path, colors: np.ndarray, total: int) -> None:
    Path(path).write_text(format_coloring(colors, total))


def format_coloring(colors: np.ndarray, total: int) -> str:
    n = colors.shape[0]
    lines = [f"n {n} colors {total}"]
    iu, ju = np.triu_indices(n, 1)
    vals = colors[iu, ju]
    keep = vals >= 0
    for u, v, k in zip(iu[keep], ju[keep], vals[keep]):
        lines.append(f"{u} {v} {k}")
    return "\n".join(lines) + "\n"


def parse_coloring(text: str) -> tuple[np.ndarray, int]:
    """Parse the text coloring format into (n x n color matrix, palette size)."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ColoringFileError("empty coloring file")
    head = rows[0]
    if len(head) != 4 or head[0] != "n" or head[2] != "colors":
        raise ColoringFileError(f"bad header: {' '.join(head)!r}")
    try:
        n, total = int(head[1]), int(head[3])
    except ValueError as exc:
        raise ColoringFileError(f"bad header: {' '.join(head)!r}") from exc
    if n < 1 or total < 0:
        raise ColoringFileError("header values out of range")
    colors = np.full((n, n), UNCOLORED, dtype=np.int64)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ColoringFileError(f"line {lineno}: expected 'u v k'")
        try:
            u, v, k = (int(x) for x in row)
        except ValueError as exc:
            raise ColoringFileError(f"line {lineno}: non-integer field") from exc
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ColoringFileError(f"line {lineno}: bad edge {u} {v}")
        if not 0 <= k < total:
            raise ColoringFileError(f"line {lineno}: color {k} outside palette of {total}")
        if colors[u, v] != UNCOLORED:
            raise ColoringFileError(f"line {lineno}: duplicate edge {min(u, v)} {max(u, v)}")
        colors[u, v] = colors[v, u] = k
    return colors, total


def read_coloring(path: str | Path) -> tuple[np.ndarray, int]:
    return parse_coloring(Path(path).read_text())
