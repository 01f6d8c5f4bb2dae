"""(4,5)-validity checks and the color-class census behind the 5/6 lower bound.

A coloring here is an n x n symmetric integer matrix, -1 for uncolored.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import UNCOLORED


class IncompleteColoring(ValueError):
    pass


class CertificateError(AssertionError):
    pass


@dataclass(frozen=True, order=True)
class Violation:
    vertices: tuple[int, int, int, int]
    colors: tuple[int, ...] = field(compare=False)
    edges: tuple[tuple[int, int], ...] = field(compare=False)

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "colors": list(self.colors),
                "edges": [list(e) for e in self.edges]}


@dataclass
class ComponentCensus:
    n: int
    components: dict[int, list[tuple[int, ...]]]
    x0: int
    x1: int
    x2: int
    large: int
    colors_used: int

    def identities_hold(self) -> bool:
        n = self.n
        return (self.x0 + 2 * self.x1 + 3 * self.x2 == n * self.colors_used
                and self.x1 + 2 * self.x2 == n * (n - 1) // 2)

    def to_json(self) -> dict:
        return {"x0": self.x0, "x1": self.x1, "x2": self.x2, "large_components": self.large,
                "colors_used": self.colors_used}


def as_matrix(coloring) -> np.ndarray:
    if hasattr(coloring, "matrix"):
        return coloring.matrix()
    return np.asarray(coloring, dtype=np.int64)


def _require_complete(colors: np.ndarray) -> None:
    n = colors.shape[0]
    iu = np.triu_indices(n, 1)
    if np.any(colors[iu] == UNCOLORED):
        raise IncompleteColoring("coloring has uncolored edges")


def census(coloring) -> ComponentCensus:
    """Decompose every color class into connected components.

    x0 counts isolated vertices summed over all color graphs, x1 and x2 the
    components with one and two edges; ``large`` counts components with three
    or more edges. Uncolored edges are ignored.
    """
    colors = as_matrix(coloring)
    n = colors.shape[0]
    iu, ju = np.triu_indices(n, 1)
    vals = colors[iu, ju]
    keep = vals >= 0
    by_color: dict[int, list[tuple[int, int]]] = {}
    for u, v, k in zip(iu[keep].tolist(), ju[keep].tolist(), vals[keep].tolist()):
        by_color.setdefault(k, []).append((u, v))
    comps: dict[int, list[tuple[int, ...]]] = {}
    x0 = x1 = x2 = large = 0
    for k, edges in by_color.items():
        parent: dict[int, int] = {}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for u, v in edges:
            parent.setdefault(u, u)
            parent.setdefault(v, v)
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        groups: dict[int, list[int]] = {}
        for a in parent:
            groups.setdefault(find(a), []).append(a)
        edge_count: dict[int, int] = {}
        for u, v in edges:
            r = find(u)
            edge_count[r] = edge_count.get(r, 0) + 1
        comps[k] = []
        for r, verts in groups.items():
            m = edge_count[r]
            comps[k].append(tuple(sorted(verts)))
            if m == 1:
                x1 += 1
            elif m == 2:
                x2 += 1
            else:
                large += 1
        x0 += n - len(parent)
    return ComponentCensus(n=n, components=comps, x0=x0, x1=x1, x2=x2, large=large,
                           colors_used=len(by_color))


def _violation(colors: np.ndarray, quad) -> Violation:
    a, b, c, d = quad
    pairs = [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)]
    cols = [int(colors[x, y]) for x, y in pairs]
    repeated = {k for k in cols if cols.count(k) > 1}
    edges = tuple(p for p, k in zip(pairs, cols) if k in repeated)
    return Violation(tuple(int(x) for x in quad), tuple(sorted(set(cols))), edges)


def _distinct_counts(block: np.ndarray) -> np.ndarray:
    s = np.sort(block, axis=1)
    return 1 + np.count_nonzero(np.diff(s, axis=1), axis=1)


def verify_45_exhaustive(coloring) -> list[Violation]:
    """Every 4-set whose six edges carry fewer than 5 distinct colors."""
    colors = as_matrix(coloring)
    _require_complete(colors)
    n = colors.shape[0]
    out = []
    for a in range(n):
        for b in range(a + 1, n - 2):
            rest = np.arange(b + 1, n)
            if len(rest) < 2:
                continue
            ci, di = np.triu_indices(len(rest), 1)
            c, d = rest[ci], rest[di]
            block = np.stack([
                np.full(len(c), colors[a, b]), colors[a, c], colors[a, d],
                colors[b, c], colors[b, d], colors[c, d],
            ], axis=1)
            bad = np.flatnonzero(_distinct_counts(block) < 5)
            for i in bad:
                out.append(_violation(colors, (a, b, int(c[i]), int(d[i]))))
    return sorted(out)


def _quad_colors(colors: np.ndarray, quads: np.ndarray) -> np.ndarray:
    a, b, c, d = quads.T
    return np.stack([colors[a, b], colors[a, c], colors[a, d],
                     colors[b, c], colors[b, d], colors[c, d]], axis=1)


def verify_45_pairwise(coloring) -> list[Violation]:
    """Same answer as the exhaustive scan, driven by same-colored edge pairs.

    A deficient 4-set must contain two edges of one color, so it suffices to
    check the 4-sets spanned by each monochromatic pair: disjoint pairs give
    one 4-set, adjacent pairs give one per choice of fourth vertex.
    """
    colors = as_matrix(coloring)
    _require_complete(colors)
    n = colors.shape[0]
    iu, ju = np.triu_indices(n, 1)
    vals = colors[iu, ju]
    order = np.argsort(vals, kind="stable")
    vals_sorted = vals[order]
    starts = np.flatnonzero(np.r_[True, vals_sorted[1:] != vals_sorted[:-1]])
    ends = np.r_[starts[1:], len(vals_sorted)]
    bad = set()
    allv = np.arange(n)

    def check(q: np.ndarray) -> None:
        q = np.sort(q, axis=1)
        for row in q[_distinct_counts(_quad_colors(colors, q)) < 5]:
            bad.add(tuple(int(x) for x in row))

    for s, t in zip(starts, ends):
        if t - s < 2:
            continue
        idx = order[s:t]
        eu, ev = iu[idx], ju[idx]
        pi, pj = np.triu_indices(len(idx), 1)
        u1, v1, u2, v2 = eu[pi], ev[pi], eu[pj], ev[pj]
        shared = (u1 == u2) | (u1 == v2) | (v1 == u2) | (v1 == v2)
        if np.any(~shared):
            check(np.stack([u1[~shared], v1[~shared], u2[~shared], v2[~shared]], axis=1))
        for k in np.flatnonzero(shared):
            tri = sorted({int(u1[k]), int(v1[k]), int(u2[k]), int(v2[k])})
            w = allv[(allv != tri[0]) & (allv != tri[1]) & (allv != tri[2])]
            check(np.column_stack([np.tile(tri, (len(w), 1)), w]))
    return sorted(_violation(colors, q) for q in bad)


def verify_45_sampled(coloring, samples: int = 1_000_000, rng: np.random.Generator | None = None,
                      chunk: int = 200_000) -> list[Violation]:
    """Spot check of random 4-sets; finds violations only probabilistically."""
    colors = as_matrix(coloring)
    _require_complete(colors)
    n = colors.shape[0]
    rng = rng or np.random.default_rng(0)
    found = set()
    left = samples
    while left > 0:
        m = min(chunk, left)
        left -= m
        q = _random_quads(rng, n, m)
        for row in q[_distinct_counts(_quad_colors(colors, q)) < 5]:
            found.add(tuple(int(x) for x in row))
    return sorted(_violation(colors, qd) for qd in found)


def _random_quads(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """m uniform 4-subsets of range(n), each sorted."""
    out = np.empty((0, 4), dtype=np.int64)
    while len(out) < m:
        q = np.sort(rng.integers(0, n, size=(2 * (m - len(out)) + 16, 4)), axis=1)
        q = q[np.all(np.diff(q, axis=1) > 0, axis=1)]
        out = np.concatenate([out, q])
    return out[:m]


EXHAUSTIVE_MAX_N = 120


def verify_45(coloring, mode: str = "auto") -> list[Violation]:
    colors = as_matrix(coloring)
    if mode == "auto":
        mode = "exhaustive" if colors.shape[0] <= EXHAUSTIVE_MAX_N else "pairwise"
    if mode == "exhaustive":
        return verify_45_exhaustive(colors)
    if mode == "pairwise":
        return verify_45_pairwise(colors)
    if mode == "sampled":
        return verify_45_sampled(colors)
    raise ValueError(f"unknown validation mode {mode!r}")


@dataclass
class LowerBoundReport:
    colors_used: int
    bound: float
    slack: float
    x0: int
    x1: int
    x2: int

    def to_json(self) -> dict:
        return {"colors_used": self.colors_used, "bound": self.bound, "lb_slack": self.slack,
                "x0": self.x0, "x1": self.x1, "x2": self.x2}


def lower_bound_certificate(coloring) -> LowerBoundReport:
    """Recompute |C| from the census and check it against 5(n-1)/6.

    Raises CertificateError when any counting identity fails, which means the
    input is not a valid complete (4,5)-coloring.
    """
    colors = as_matrix(coloring)
    _require_complete(colors)
    cen = census(colors)
    n = cen.n
    if cen.large:
        raise CertificateError(f"{cen.large} color components with 3+ edges")
    if not cen.identities_hold():
        raise CertificateError(
            f"census identities fail: x0={cen.x0} x1={cen.x1} x2={cen.x2} |C|={cen.colors_used}")
    total = cen.x0 + 2 * cen.x1 + 3 * cen.x2
    if total % n:
        raise CertificateError("x0 + 2x1 + 3x2 is not a multiple of n")
    used = total // n
    if cen.x1 < cen.x2:
        raise CertificateError(f"x1={cen.x1} < x2={cen.x2}")
    bound = 5 * (n - 1) / 6
    if used < math.ceil(5 * (n - 1) / 6):
        raise CertificateError(f"|C|={used} below 5(n-1)/6={bound:.3f}")
    return LowerBoundReport(colors_used=used, bound=bound, slack=used - bound,
                            x0=cen.x0, x1=cen.x1, x2=cen.x2)


def cherry_pairing_ok(coloring) -> bool:
    """Every two-edge component's endpoints are joined by a one-edge component
    of another color."""
    colors = as_matrix(coloring)
    cen = census(colors)
    single = set()
    for k, comps in cen.components.items():
        for verts in comps:
            if len(verts) == 2:
                single.add((verts[0], verts[1], k))
    for k, comps in cen.components.items():
        for verts in comps:
            if len(verts) != 3:
                continue
            a, b, c = verts
            # the center is the vertex adjacent to both others in color k
            for center, x, y in ((a, b, c), (b, a, c), (c, a, b)):
                if colors[center, x] == k and colors[center, y] == k:
                    kk = int(colors[x, y])
                    if kk < 0 or kk == k or (min(x, y), max(x, y), kk) not in single:
                        return False
                    break
    return True


def alternating_4cycles(coloring) -> list[tuple[int, int, int, int]]:
    """4-cycles a-b-c-d whose opposite edges agree pairwise (brute force)."""
    colors = as_matrix(coloring)
    n = colors.shape[0]
    out = []
    for quad in itertools.combinations(range(n), 4):
        a, b, c, d = quad
        for p, q, r, s in ((a, b, c, d), (a, b, d, c), (a, c, b, d)):
            e1, e2, e3, e4 = colors[p, q], colors[q, r], colors[r, s], colors[s, p]
            if min(e1, e2, e3, e4) < 0:
                continue
            if e1 == e3 and e2 == e4:
                out.append((p, q, r, s))
    return out


def find_alternating_4cycles(coloring) -> list[tuple[int, int, int, int]]:
    """Same output as ``alternating_4cycles``, built from same-colored edge pairs.

    Each alternating cycle pairs two disjoint edges of one color, so only
    those pairs are inspected.
    """
    colors = as_matrix(coloring)
    n = colors.shape[0]
    by_color: dict[int, list[tuple[int, int]]] = {}
    for u in range(n):
        for v in range(u + 1, n):
            k = int(colors[u, v])
            if k >= 0:
                by_color.setdefault(k, []).append((u, v))
    found = set()
    for edges in by_color.values():
        for i, (a, b) in enumerate(edges):
            for c, d in edges[i + 1:]:
                if len({a, b, c, d}) < 4:
                    continue
                # a-b-c-d-a and a-b-d-c-a
                for x, y in ((c, d), (d, c)):
                    k1, k2 = colors[b, x], colors[y, a]
                    if k1 >= 0 and k1 == k2:
                        found.add(_canonical_cycle(a, b, x, y))
    return sorted(found)


def _canonical_cycle(p, q, r, s) -> tuple[int, int, int, int]:
    """The cycle p-q-r-s in the vertex order used by ``alternating_4cycles``."""
    a, b, c, d = sorted((p, q, r, s))
    diag = {frozenset((p, r)), frozenset((q, s))}
    if diag == {frozenset((a, c)), frozenset((b, d))}:
        return (a, b, c, d)
    if diag == {frozenset((a, d)), frozenset((b, c))}:
        return (a, b, d, c)
    return (a, c, b, d)


def phase1_invariants(state) -> list[str]:
    """Structural properties every Phase-1 state must have; empty when all hold."""
    problems = []
    for v in range(state.n):
        if state.special[v] & state.hit[v]:
            problems.append(f"vertex {v} is hit by one of its special colors")
    cen = census(state.matrix())
    if cen.large:
        problems.append(f"{cen.large} color components with 3+ edges")
    cycles = find_alternating_4cycles(state.matrix())
    if cycles:
        problems.append(f"alternating 4-cycle {cycles[0]}")
    if not cherry_pairing_ok(state.matrix()):
        problems.append("a two-edge component lacks its single-edge partner")
    return problems
