"""Random completion with the reserved palette, repaired by resampling.

Every edge Phase 1 left uncolored gets an independent uniform reserved color.
Three kinds of bad configuration can then break (4,5)-validity:

* B1: two adjacent Phase-2 edges with the same color;
* B2: a 4-cycle of Phase-2 edges whose opposite edges agree pairwise;
* B3: a 4-cycle whose two Phase-2 edges share a color and whose other two
  edges share a Phase-1 color.

``resample`` re-randomizes the Phase-2 edges of the lowest bad event until
none remain (Moser-Tardos style). When repair stalls, runs out of rounds, or
is impossible because some vertex has more Phase-2 edges than there are
reserved colors, the reserved palette grows by 10% and resampling continues.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import UNCOLORED, ColoringState, _set_color, recolor

KIND_ORDER = {"B1": 1, "B2": 2, "B3": 3}

Edge = tuple[int, int]


class EmptyReservedPalette(Exception):
    pass


class BudgetExceeded(Exception):
    def __init__(self, report: Phase2Report):
        super().__init__(f"{report.final_bad_events} bad events left after {report.rounds} rounds")
        self.report = report


def _e(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, order=True)
class BadEvent:
    kind: str
    edges: tuple[Edge, ...]
    witness: tuple[Edge, ...] = ()
    colors: tuple[int, ...] = field(default=(), compare=False)

    def key(self) -> tuple:
        return (KIND_ORDER[self.kind], self.edges, self.witness)

    def to_json(self) -> dict:
        return {"kind": self.kind, "edges": [list(e) for e in self.edges],
                "witness": [list(e) for e in self.witness], "colors": list(self.colors)}


@dataclass
class Phase2Report:
    uncolored_at_start: int
    rounds: int = 0
    final_bad_events: int = 0
    enlargements: int = 0
    initial_bad_events: int = 0
    reserved_colors: int = 0
    seconds: float = 0.0
    max_phase2_degree: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.final_bad_events == 0

    def to_json(self) -> dict:
        return {
            "uncolored_at_start": self.uncolored_at_start,
            "rounds": self.rounds,
            "final_bad_events": self.final_bad_events,
            "enlargements": self.enlargements,
            "initial_bad_events": self.initial_bad_events,
            "reserved_colors": self.reserved_colors,
            "max_phase2_degree": self.max_phase2_degree,
            "success": self.success,
            "seconds": round(self.seconds, 6),
            "diagnostics": self.diagnostics,
        }


def _draw(state: ColoringState, rng: np.random.Generator) -> int:
    return int(rng.integers(state.palette.phase1, state.num_colors))


def random_complete(state: ColoringState, rng: np.random.Generator) -> list[Edge]:
    """Switch to Phase 2 and give every uncolored edge a uniform reserved color."""
    if state.num_colors - state.palette.phase1 < 1:
        raise EmptyReservedPalette("no reserved colors to complete with")
    state.phase = "phase2"
    edges = state.uncolored_edges()
    if not edges:
        return edges
    draws = rng.integers(state.palette.phase1, state.num_colors, size=len(edges))
    for (u, v), k in zip(edges, draws):
        _set_color(state, u, v, int(k))
    return edges


def color_classes(state: ColoringState) -> dict[int, set[Edge]]:
    """Phase-2 color -> set of edges carrying it."""
    classes: dict[int, set[Edge]] = {}
    for a, b in phase2_edges(state):
        classes.setdefault(state.color[a][b], set()).add((a, b))
    return classes


def events_at_edge(state: ColoringState, a: int, b: int,
                   classes: dict[int, set[Edge]] | None = None) -> list[BadEvent]:
    """All bad events that involve the Phase-2 edge ab."""
    color = state.color
    c = color[a][b]
    p1 = state.palette.phase1
    if c < p1:
        return []
    if classes is None:
        classes = color_classes(state)
    out = []
    e = _e(a, b)
    partners = state.partners
    for end, other in ((a, b), (b, a)):
        for w in partners[end][c]:
            if w != other:
                out.append(BadEvent("B1", tuple(sorted((e, _e(end, w)))), (), (c,)))
    # 4-cycles through ab whose opposite edge xy also has color c
    ra, rb = color[a], color[b]
    for x, y in classes.get(c, ()):
        if x == a or x == b or y == a or y == b:
            continue
        for s, t in ((x, y), (y, x)):
            # cycle a-b-t-s-a: ab opp st, bt opp sa
            d = ra[s]
            if d < 0 or rb[t] != d:
                continue
            if d >= p1:
                cyc = tuple(sorted((e, (x, y), _e(b, t), _e(s, a))))
                out.append(BadEvent("B2", cyc, (), (c, d)))
            else:
                out.append(BadEvent("B3", tuple(sorted((e, (x, y)))),
                                    tuple(sorted((_e(b, t), _e(s, a)))), (c, d)))
    return out


def phase2_edges(state: ColoringState) -> list[Edge]:
    p1 = state.palette.phase1
    n = state.n
    return [(u, v) for u in range(n) for v in range(u + 1, n) if state.color[u][v] >= p1]


def find_bad_events(state: ColoringState) -> list[BadEvent]:
    """Every bad event of the current (complete) coloring, sorted."""
    classes = color_classes(state)
    found = set()
    for a, b in phase2_edges(state):
        found.update(events_at_edge(state, a, b, classes))
    return sorted(found)


def phase2_degrees(state: ColoringState) -> list[int]:
    deg = [0] * state.n
    for a, b in phase2_edges(state):
        deg[a] += 1
        deg[b] += 1
    return deg


class _EventIndex:
    def __init__(self, events):
        self.live: set[BadEvent] = set()
        self.by_edge: dict[Edge, set[BadEvent]] = {}
        self.heap: list = []
        for ev in events:
            self.add(ev)

    def add(self, ev: BadEvent) -> None:
        if ev in self.live:
            return
        self.live.add(ev)
        for e in ev.edges:
            self.by_edge.setdefault(e, set()).add(ev)
        heapq.heappush(self.heap, (ev.key(), ev))

    def drop_edge(self, e: Edge) -> None:
        for ev in self.by_edge.pop(e, ()):
            self.live.discard(ev)
            for f in ev.edges:
                if f != e:
                    s = self.by_edge.get(f)
                    if s is not None:
                        s.discard(ev)

    def lowest(self) -> BadEvent | None:
        while self.heap:
            _, ev = self.heap[0]
            if ev in self.live:
                return ev
            heapq.heappop(self.heap)
        return None


def lll_diagnostic(state: ColoringState, epsilon: float) -> dict:
    """Numeric value of the local-lemma condition at this run's size.

    Reports each event type's probability against x_j * prod(1 - x)^deg with
    the dependency counts measured on the actual Phase-2 graph. Informational.
    """
    n = state.n
    reserved = state.num_colors - state.palette.phase1
    deg = phase2_degrees(state)
    dmax = max(deg) if deg else 0
    en = epsilon * n
    x1 = 10 / en
    x2 = 10 / en**2
    x3 = 10 / en
    # per-edge dependency counts: adjacent Phase-2 edges, 4-cycles, B3 partners
    b1_dep = 2 * dmax
    b2_dep = 2 * dmax * dmax
    b3_dep = 0
    p1 = state.palette.phase1
    for a, b in phase2_edges(state):
        common = state.hit[a] & state.hit[b] & ((1 << p1) - 1)
        cnt = 0
        while common:
            low = common & -common
            d = low.bit_length() - 1
            common ^= low
            for x in state.partners[a][d]:
                for y in state.partners[b][d]:
                    if x != y and state.color[x][y] >= p1:
                        cnt += 1
        b3_dep = max(b3_dep, cnt)
    factor = (1 - x1) ** b1_dep * (1 - x2) ** b2_dep * (1 - x3) ** b3_dep if x1 < 1 else 0.0
    probs = {"B1": 1 / reserved, "B2": 1 / reserved**2, "B3": 1 / reserved} if reserved else {}
    rhs = {"B1": x1 * factor, "B2": x2 * factor, "B3": x3 * factor}
    return {
        "max_phase2_degree": dmax,
        "max_b3_partners": b3_dep,
        "probabilities": probs,
        "lll_rhs": rhs,
        "condition_holds": bool(probs) and all(probs[k] <= rhs[k] for k in probs),
    }


def resample(
    state: ColoringState,
    rng: np.random.Generator,
    budget: int = 1_000_000,
    max_enlargements: int | None = None,
    growth: float = 0.1,
    uncolored_at_start: int | None = None,
    patience: int | None = None,
) -> Phase2Report:
    """Repair bad events by resampling; grow the reserved palette on exhaustion.

    ``budget`` counts rounds per palette size. ``max_enlargements`` caps the
    fallback (None: unbounded, 0: disabled, raising BudgetExceeded). When some
    vertex has more Phase-2 edges than there are reserved colors, B1 events
    cannot all be avoided, so the palette is enlarged without spending rounds.
    ``patience`` ends a palette early once that many rounds pass without a
    new low in the live bad-event count (default: half a round per Phase-2
    edge, at least 500).
    """
    start = time.perf_counter()
    p2 = phase2_edges(state)
    report = Phase2Report(uncolored_at_start=len(p2) if uncolored_at_start is None else uncolored_at_start)
    deg = phase2_degrees(state)
    dmax = max(deg) if deg else 0
    report.max_phase2_degree = dmax
    classes = color_classes(state)
    index = _EventIndex(find_bad_events(state))
    report.initial_bad_events = len(index.live)
    if patience is None:
        patience = max(500, len(p2) // 2)
    spent = 0
    best = len(index.live)
    since_best = 0

    def enlarge() -> None:
        nonlocal spent
        if max_enlargements is not None and report.enlargements >= max_enlargements:
            report.final_bad_events = len(index.live)
            report.reserved_colors = state.num_colors - state.palette.phase1
            report.seconds = time.perf_counter() - start
            raise BudgetExceeded(report)
        nonlocal best, since_best
        reserved = state.num_colors - state.palette.phase1
        state.extra_colors += max(1, math.ceil(growth * reserved))
        report.enlargements += 1
        spent = 0
        best = len(index.live)
        since_best = 0

    while index.live:
        if state.num_colors - state.palette.phase1 < dmax:
            enlarge()
            continue
        if spent >= budget or since_best >= patience:
            enlarge()
            continue
        ev = index.lowest()
        for e in ev.edges:
            index.drop_edge(e)
        for a, b in ev.edges:
            old = state.color[a][b]
            k = _draw(state, rng)
            classes[old].discard((a, b))
            classes.setdefault(k, set()).add((a, b))
            recolor(state, a, b, k)
        for a, b in ev.edges:
            for new in events_at_edge(state, a, b, classes):
                index.add(new)
        spent += 1
        report.rounds += 1
        if len(index.live) < best:
            best = len(index.live)
            since_best = 0
        else:
            since_best += 1
    report.final_bad_events = 0
    report.reserved_colors = state.num_colors - state.palette.phase1
    report.seconds = time.perf_counter() - start
    return report


def phase1_colors_unchanged(before: np.ndarray, state: ColoringState) -> bool:
    after = state.matrix()
    mask = before != UNCOLORED
    return bool(np.array_equal(before[mask], after[mask]))
