"""Tracked random variables of the Phase-1 process, measured on a live state.

Each ``measure_*`` is the fast path used at checkpoints; the matching
``brute_*`` enumerates the definition directly and exists as a test oracle.
Only Phase-1 colors are counted. All counts of vertex pairs are over ordered
pairs of distinct vertices outside the fixed ones.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    UNCOLORED,
    ColoringState,
    available_at_edge,
    edge_available_mask,
    forbidden_by_path,
)
from .phase1 import enumerate_candidates
from .trajectories import TrajectoryParams, log_err, p_of, traj

Z_PATTERNS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1))
Z_FAMILIES = {"Z" + "".join(map(str, a)): a for a in Z_PATTERNS}
CRUDE = ("Xi", "Phi", "Psi", "Lambda")
FAMILIES = ("Q", "Y", "A", "B", "C1", "C2", "D", "E", "F", *Z_FAMILIES, *CRUDE, "degree")
EXPENSIVE = frozenset({"D", "E", "F", "Z000"})
CSV_FIELDS = ("step", "t", "family", "args", "empirical", "predicted", "rel_dev", "window", "in_window")


def _pc(mask: int) -> int:
    return mask.bit_count()


def _uncolored(state: ColoringState, a: int, b: int) -> bool:
    return a != b and state.color[a][b] == UNCOLORED


def _spec(state: ColoringState, v: int, k: int) -> bool:
    return bool((state.special[v] >> k) & 1)


# --- Q, Y -------------------------------------------------------------------

def measure_Q(state: ColoringState) -> int:
    return len(state.triangles)


def brute_Q(state: ColoringState) -> int:
    n = state.n
    return sum(1 for a in range(n) for b in range(a + 1, n) for c in range(b + 1, n)
               if _uncolored(state, a, b) and _uncolored(state, a, c) and _uncolored(state, b, c))


def measure_Y(state: ColoringState, u: int, u1: int) -> int:
    ru, r1 = state.color[u], state.color[u1]
    return sum(1 for w in range(state.n)
               if w != u and w != u1 and ru[w] == UNCOLORED and r1[w] == UNCOLORED)


brute_Y = measure_Y


# --- A, B -------------------------------------------------------------------

def measure_A(state: ColoringState, u1: int, u2: int, k1: int) -> int:
    """#(u, k): k available at uu1 and uu2, k1 in S_u."""
    total = 0
    for u in range(state.n):
        if u in (u1, u2) or not _spec(state, u, k1):
            continue
        if not (_uncolored(state, u, u1) and _uncolored(state, u, u2)):
            continue
        total += _pc(edge_available_mask(state, u, u1) & edge_available_mask(state, u, u2))
    return total


def brute_A(state: ColoringState, u1: int, u2: int, k1: int) -> int:
    return sum(1 for u in range(state.n) if u not in (u1, u2) and _spec(state, u, k1)
               for k in range(state.palette.phase1)
               if available_at_edge(state, u, u1, k) and available_at_edge(state, u, u2, k))


def measure_B(state: ColoringState, u: int, u1: int, k: int) -> int:
    """#(u2, k1): k available at u u2, k1 available at u1 u2, k1 in S_u."""
    total = 0
    su = state.special[u]
    for u2 in range(state.n):
        if u2 in (u, u1) or not (_uncolored(state, u, u2) and _uncolored(state, u1, u2)):
            continue
        if (edge_available_mask(state, u, u2) >> k) & 1:
            total += _pc(su & edge_available_mask(state, u1, u2))
    return total


def brute_B(state: ColoringState, u: int, u1: int, k: int) -> int:
    return sum(1 for u2 in range(state.n) if u2 not in (u, u1)
               for k1 in range(state.palette.phase1)
               if available_at_edge(state, u, u2, k) and available_at_edge(state, u1, u2, k1)
               and _spec(state, u, k1))


# --- C1, C2 -----------------------------------------------------------------

def measure_C1(state: ColoringState, u: int, u1: int, u2: int) -> int:
    return _pc(enumerate_candidates(state, u, u1, u2)[0])


def measure_C2(state: ColoringState, u: int, u1: int, u2: int) -> int:
    return _pc(enumerate_candidates(state, u, u1, u2)[1])


def brute_C1(state: ColoringState, u: int, u1: int, u2: int) -> int:
    return sum(1 for k in range(state.palette.phase1)
               if _spec(state, u, k) and available_at_edge(state, u1, u2, k))


def brute_C2(state: ColoringState, u: int, u1: int, u2: int) -> int:
    return sum(1 for k in range(state.palette.phase1)
               if available_at_edge(state, u, u1, k) and available_at_edge(state, u, u2, k))


# --- D, E, F ----------------------------------------------------------------

class _EdgeMasks:
    """Memoized edge_available_mask for one frozen state."""

    def __init__(self, state: ColoringState):
        self.state = state
        self.cache: dict[tuple[int, int], int] = {}

    def __call__(self, a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        m = self.cache.get(key)
        if m is None:
            m = edge_available_mask(self.state, a, b) if a != b else 0
            self.cache[key] = m
        return m


def measure_D(state: ColoringState, u: int, k: int, masks: _EdgeMasks | None = None) -> int:
    """#(u1, u2, k1) with (k, k1) available at (u, u1, u2)."""
    m = masks or _EdgeMasks(state)
    bit = 1 << k
    arms = [x for x in range(state.n) if x != u and m(u, x) & bit]
    su = state.special[u]
    total = 0
    for i, x in enumerate(arms):
        for y in arms[i + 1:]:
            total += 2 * _pc(su & m(x, y))
    return total


def measure_E(state: ColoringState, u2: int, k: int, masks: _EdgeMasks | None = None) -> int:
    """#(u, u1, k1) with (k, k1) available at (u, u1, u2)."""
    m = masks or _EdgeMasks(state)
    bit = 1 << k
    total = 0
    for u in range(state.n):
        if u == u2 or not m(u, u2) & bit:
            continue
        su = state.special[u]
        for u1 in range(state.n):
            if u1 != u and u1 != u2 and m(u, u1) & bit:
                total += _pc(su & m(u1, u2))
    return total


def measure_F(state: ColoringState, u2: int, k1: int, masks: _EdgeMasks | None = None) -> int:
    """#(u, u1, k) with (k, k1) available at (u, u1, u2)."""
    m = masks or _EdgeMasks(state)
    bit = 1 << k1
    ends = [x for x in range(state.n) if x != u2 and m(x, u2) & bit]
    total = 0
    for u in range(state.n):
        if u == u2 or not _spec(state, u, k1) or not _uncolored(state, u, u2):
            continue
        mu2 = m(u, u2)
        if not mu2:
            continue
        for u1 in ends:
            if u1 != u:
                total += _pc(mu2 & m(u, u1))
    return total


def _pair_available(state, u, u1, u2, k, k1) -> bool:
    return (_spec(state, u, k1) and available_at_edge(state, u1, u2, k1)
            and available_at_edge(state, u, u1, k) and available_at_edge(state, u, u2, k))


def _triples_brute(state, fixed, fn) -> int:
    n, c = state.n, state.palette.phase1
    return sum(1 for x in range(n) for y in range(n)
               if len({x, y, *fixed}) == 2 + len(fixed)
               for kk in range(c) if fn(x, y, kk))


def brute_D(state: ColoringState, u: int, k: int) -> int:
    return _triples_brute(state, (u,), lambda x, y, k1: _pair_available(state, u, x, y, k, k1))


def brute_E(state: ColoringState, u2: int, k: int) -> int:
    return _triples_brute(state, (u2,), lambda x, y, k1: _pair_available(state, x, y, u2, k, k1))


def brute_F(state: ColoringState, u2: int, k1: int) -> int:
    return _triples_brute(state, (u2,), lambda x, y, k: _pair_available(state, x, y, u2, k, k1))


# --- Z ----------------------------------------------------------------------

def _check_pattern(a) -> tuple[int, int, int]:
    a = tuple(int(x) for x in a)
    if len(a) != 3 or any(x not in (0, 1) for x in a) or a == (1, 1, 1):
        raise ValueError(f"invalid Z pattern {a}")
    return a


def measure_Z(state: ColoringState, u: int, v: int, k: int, a1: int, a2: int, a3: int,
              masks: _EdgeMasks | None = None) -> int:
    """#(x, y, k1) along u-x-y-v with e1, e3 matching k1 and e2 matching k.

    A 1 in the pattern means the edge is colored with its color, a 0 that the
    color is available there.
    """
    a1, a2, a3 = _check_pattern((a1, a2, a3))
    m = masks or _EdgeMasks(state)
    color = state.color
    n = state.n
    bit = 1 << k
    if a2:
        middles = [(x, y) for x in range(n) if x not in (u, v)
                   for y in state.partners[x].get(k, ()) if y not in (u, v)]
    else:
        xs = [x for x in range(n) if x not in (u, v)]
        middles = [(x, y) for x in xs for y in xs if x != y and m(x, y) & bit]
    total = 0
    for x, y in middles:
        if a1:
            c1 = color[u][x]
            s1 = (1 << c1) if 0 <= c1 < state.palette.phase1 else 0
        else:
            s1 = m(u, x)
        if not s1:
            continue
        if a3:
            c3 = color[y][v]
            s3 = (1 << c3) if 0 <= c3 < state.palette.phase1 else 0
        else:
            s3 = m(y, v)
        total += _pc(s1 & s3)
    return total


def brute_Z(state: ColoringState, u: int, v: int, k: int, a1: int, a2: int, a3: int) -> int:
    a = _check_pattern((a1, a2, a3))

    def ok(e, kk, aj):
        x, y = e
        return state.color[x][y] == kk if aj else available_at_edge(state, x, y, kk)

    return _triples_brute(state, (u, v), lambda x, y, k1: all(
        ok(e, kk, aj) for e, kk, aj in (((u, x), k1, a[0]), ((x, y), k, a[1]), ((y, v), k1, a[2]))))


# --- crude counts ------------------------------------------------------------

def measure_Xi(state: ColoringState, u: int, v: int, k: int) -> int:
    """Number of alternating (uv, k)-paths."""
    color = state.color
    total = 0
    common = state.hit[u] & state.hit[v]
    while common:
        low = common & -common
        c = low.bit_length() - 1
        common ^= low
        for x in state.partners[u][c]:
            for y in state.partners[v][c]:
                if x != y and x != v and y != u and color[x][y] == k:
                    total += 1
    return total


def _colored_eq(color, a, b, c, d) -> bool:
    x = color[a][b]
    return x != UNCOLORED and x == color[c][d]


def brute_Xi(state: ColoringState, u: int, v: int, k: int) -> int:
    n, color = state.n, state.color
    return sum(1 for x in range(n) for y in range(n)
               if len({u, v, x, y}) == 4 and color[x][y] == k and _colored_eq(color, u, x, v, y))


def measure_Phi(state: ColoringState, u: int, u1: int, v: int, v1: int) -> int:
    """#(x, y): ux ~ u1y and vx ~ v1y (same color)."""
    color = state.color
    fixed = {u, u1, v, v1}
    total = 0
    for x, cx in enumerate(color[u]):
        if cx == UNCOLORED or x in fixed:
            continue
        cv = color[v][x]
        if cv == UNCOLORED:
            continue
        for y in state.partners[u1].get(cx, ()):
            if y != x and y not in fixed and color[v1][y] == cv:
                total += 1
    return total


def brute_Phi(state: ColoringState, u: int, u1: int, v: int, v1: int) -> int:
    n, color = state.n, state.color
    fixed = {u, u1, v, v1}
    return sum(1 for x in range(n) for y in range(n)
               if x != y and x not in fixed and y not in fixed
               and _colored_eq(color, u, x, u1, y) and _colored_eq(color, v, x, v1, y))


def measure_Psi(state: ColoringState, u: int, u2: int, k: int, k2: int) -> int:
    """#(x, y, z): ux ~ zu2, xy has color k, yz has color k2."""
    color = state.color
    total = 0
    for x, cx in enumerate(color[u]):
        if cx == UNCOLORED or x == u2:
            continue
        for y in state.partners[x].get(k, ()):
            if y in (u, u2):
                continue
            for z in state.partners[y].get(k2, ()):
                if z not in (u, u2, x) and color[z][u2] == cx:
                    total += 1
    return total


def brute_Psi(state: ColoringState, u: int, u2: int, k: int, k2: int) -> int:
    n, color = state.n, state.color
    return sum(1 for x in range(n) for y in range(n) for z in range(n)
               if len({u, u2, x, y, z}) == 5 and color[x][y] == k and color[y][z] == k2
               and _colored_eq(color, u, x, z, u2))


def measure_Lambda(state: ColoringState, u: int, v: int, w: int) -> int:
    """#(x, y): ux ~ vy and vx ~ wy."""
    color = state.color
    fixed = {u, v, w}
    total = 0
    for x, cx in enumerate(color[u]):
        if cx == UNCOLORED or x in fixed:
            continue
        cv = color[v][x]
        if cv == UNCOLORED:
            continue
        for y in state.partners[v].get(cx, ()):
            if y != x and y not in fixed and color[w][y] == cv:
                total += 1
    return total


def brute_Lambda(state: ColoringState, u: int, v: int, w: int) -> int:
    n, color = state.n, state.color
    fixed = {u, v, w}
    return sum(1 for x in range(n) for y in range(n)
               if x != y and x not in fixed and y not in fixed
               and _colored_eq(color, u, x, v, y) and _colored_eq(color, v, x, w, y))


def uncolored_degrees(state: ColoringState) -> list[int]:
    return [sum(1 for w, c in enumerate(row) if w != v and c == UNCOLORED)
            for v, row in enumerate(state.color)]


# --- snapshots ---------------------------------------------------------------

@dataclass
class SamplePlan:
    """How many argument tuples to draw per family at each checkpoint."""

    m: int = 32
    m_expensive: int = 8
    families: tuple[str, ...] = FAMILIES
    overrides: dict[str, int] = field(default_factory=dict)
    tries: int = 100

    def __post_init__(self):
        if self.m < 1 or self.m_expensive < 1:
            raise ValueError("sample counts must be at least 1")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown telemetry families {sorted(unknown)}")

    def count(self, family: str) -> int:
        if family in self.overrides:
            return self.overrides[family]
        return self.m_expensive if family in EXPENSIVE else self.m


@dataclass
class TelemetryRecord:
    step: int
    t: float
    family: str
    args: tuple[int, ...]
    empirical: float
    predicted: float
    window: float
    in_window: bool | None

    @property
    def rel_dev(self) -> float:
        return self.empirical / self.predicted - 1 if self.predicted > 0 else math.nan

    def row(self) -> dict:
        return {
            "step": self.step, "t": repr(self.t), "family": self.family,
            "args": ";".join(str(a) for a in self.args),
            "empirical": repr(float(self.empirical)), "predicted": repr(float(self.predicted)),
            "rel_dev": repr(self.rel_dev), "window": repr(float(self.window)),
            "in_window": "" if self.in_window is None else str(int(self.in_window)),
        }


# family -> (trajectory id, error id, power of n on the window)
_PREDICTION = {
    "Q": ("q", "g_q", 3), "Y": ("y", "g_y", 1), "A": ("a", "g_ab", 2), "B": ("b", "g_ab", 2),
    "C1": ("c1", "g_c1", 1), "C2": ("c2", "g_c2", 1),
    "D": ("d", "g_def", 3), "E": ("e", "g_def", 3), "F": ("f", "g_def", 3),
    "Z000": ("z0", "g_0", 3),
    **{f: ("z1", "g_1", 2) for f in ("Z100", "Z010", "Z001")},
    **{f: ("z2", "g_2", 1) for f in ("Z110", "Z101", "Z011")},
}


def prediction(family: str, t: float, params: TrajectoryParams) -> tuple[float, float]:
    """(predicted value, window half-width) for a family at scaled time t."""
    n = params.n
    if family in CRUDE:
        bound = n ** (4 * params.delta)
        return bound, bound
    if family == "degree":
        return n * p_of(t), math.nan
    name, gname, power = _PREDICTION[family]
    lg = power * math.log(n) + log_err(gname, t, params)
    return n ** power * traj(name, t, params.s), (math.exp(lg) if lg < 709 else math.inf)


def _draw_args(family: str, state: ColoringState, rng: np.random.Generator, tries: int):
    """A uniform valid argument tuple for the family, or None after ``tries`` rejections."""
    n = state.n
    ncol = state.palette.phase1
    for _ in range(tries):
        if family in ("C1", "C2"):
            store = state.triangles
            if len(store) == 0:
                return None
            tri = store.decode(store.sample(rng))
            slot = int(rng.integers(3))
            rest = [x for i, x in enumerate(tri) if i != slot]
            return (tri[slot], rest[0], rest[1])
        if family == "Xi":
            u, v = (int(x) for x in rng.choice(n, 2, replace=False))
            return (u, v, int(rng.integers(ncol)))
        if family == "Phi":
            return tuple(int(x) for x in rng.choice(n, 4, replace=False))
        if family == "Psi":
            u, u2 = (int(x) for x in rng.choice(n, 2, replace=False))
            return (u, u2, int(rng.integers(ncol)), int(rng.integers(ncol)))
        if family == "Lambda":
            return tuple(int(x) for x in rng.choice(n, 3, replace=False))
        if family in ("D", "E", "F"):
            v = int(rng.integers(n))
            k = int(rng.integers(ncol))
            if (state._vertex_ok[v] >> k) & 1:
                return (v, k)
            continue
        a, b = (int(x) for x in rng.choice(n, 2, replace=False))
        if not _uncolored(state, a, b):
            continue
        if family == "Y":
            return (a, b)
        k = int(rng.integers(ncol))
        if _spec(state, a, k) or _spec(state, b, k):
            continue
        if family in ("A", "B"):
            return (a, b, k)
        return (a, b, k)  # Z families
    return None


def _measure(family: str, state: ColoringState, args, masks: _EdgeMasks) -> int:
    if family == "Y":
        return measure_Y(state, *args)
    if family == "A":
        return measure_A(state, *args)
    if family == "B":
        return measure_B(state, *args)
    if family == "C1":
        return measure_C1(state, *args)
    if family == "C2":
        return measure_C2(state, *args)
    if family == "D":
        return measure_D(state, *args, masks=masks)
    if family == "E":
        return measure_E(state, *args, masks=masks)
    if family == "F":
        return measure_F(state, *args, masks=masks)
    if family in Z_FAMILIES:
        return measure_Z(state, *args, *Z_FAMILIES[family], masks=masks)
    return {"Xi": measure_Xi, "Phi": measure_Phi, "Psi": measure_Psi,
            "Lambda": measure_Lambda}[family](state, *args)


def _record(state, family, args, value, params) -> TelemetryRecord:
    t = state.step_index / state.n**2
    pred, window = prediction(family, t, params)
    if family in CRUDE:
        inside = value <= window
    elif math.isnan(window):
        inside = None
    else:
        inside = abs(value - pred) <= window
    return TelemetryRecord(state.step_index, t, family, tuple(args), value, pred, window, inside)


def snapshot(state: ColoringState, plan: SamplePlan, rng: np.random.Generator,
             epsilon: float) -> list[TelemetryRecord]:
    """Measure Q and sampled members of each enabled family on the current state."""
    params = TrajectoryParams(n=state.n, epsilon=epsilon)
    masks = _EdgeMasks(state)
    out = []
    fams = plan.families
    if "Q" in fams:
        out.append(_record(state, "Q", (), measure_Q(state), params))
    for family in fams:
        if family in ("Q", "degree"):
            continue
        for _ in range(plan.count(family)):
            args = _draw_args(family, state, rng, plan.tries)
            if args is None:
                break
            out.append(_record(state, family, args, _measure(family, state, args, masks), params))
    if "degree" in fams:
        deg = uncolored_degrees(state)
        lo = int(np.argmin(deg))
        hi = int(np.argmax(deg))
        out.append(_record(state, "degree", (lo, 0), deg[lo], params))
        out.append(_record(state, "degree", (hi, 1), deg[hi], params))
    return out


def write_csv(records, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())


def to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(text: str) -> list[TelemetryRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        args = tuple(int(a) for a in row["args"].split(";")) if row["args"] else ()
        iw = row["in_window"]
        out.append(TelemetryRecord(
            step=int(row["step"]), t=float(row["t"]), family=row["family"], args=args,
            empirical=float(row["empirical"]), predicted=float(row["predicted"]),
            window=float(row["window"]), in_window=None if iw == "" else bool(int(iw))))
    return out


def forbidden_agrees_with_xi(state: ColoringState, u: int, v: int) -> bool:
    """Xi(u, v, k) >= 1 exactly for the colors forbidden_by_path reports."""
    mask = forbidden_by_path(state, u, v)
    return all(bool((mask >> k) & 1) == (measure_Xi(state, u, v, k) >= 1)
               for k in range(state.num_colors))
