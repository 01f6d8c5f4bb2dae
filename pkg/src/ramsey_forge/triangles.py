"""Uniform samplers over the uncolored triangles of K_n.

``TriangleStore`` keeps every uncolored triangle in a dense array with a
position index, so a uniform draw is one array lookup and coloring an edge
swap-removes the triangles through it in bulk. It needs O(n^3) memory, which
caps it around n = 1500.

``RejectionTriangleSampler`` keeps only uncolored-adjacency bitsets and draws
random vertex triples until one is an uncolored triangle. Acceptance decays
like p^3, so it is for large n and early stopping only.

Both also carry the per-orientation "starved" marks used by the skip policy:
bit j of a triangle's mark means apex slot j (the j-th smallest vertex) has no
available color pair. Starvation is permanent because availability only
shrinks as the coloring grows.
"""
from __future__ import annotations

from bisect import bisect_right
from math import comb

import numpy as np

ALL_DEAD = 0b111


class TriangleStore:
    def __init__(self, n: int):
        if n < 3:
            raise ValueError("need at least 3 vertices")
        self.n = n
        total = comb(n, 3)
        dtype = np.int32 if total < 2**31 else np.int64
        self._dense = np.arange(total, dtype=dtype)
        self._pos = np.arange(total, dtype=dtype)
        self._count = total
        self._c3 = [comb(c, 3) for c in range(n + 1)]
        self._c2 = [comb(b, 2) for b in range(n + 1)]
        self._c3np = np.array(self._c3, dtype=np.int64)
        self._c2np = np.array(self._c2, dtype=np.int64)
        self._dead = np.zeros(total, dtype=np.uint8)
        self._fully_dead = 0

    def __len__(self) -> int:
        return self._count

    @property
    def live_count(self) -> int:
        """Triangles with at least one orientation not yet marked starved."""
        return self._count - self._fully_dead

    def tid(self, a: int, b: int, c: int) -> int:
        a, b, c = sorted((a, b, c))
        return self._c3[c] + self._c2[b] + a

    def decode(self, tid: int) -> tuple[int, int, int]:
        c = bisect_right(self._c3, tid) - 1
        rem = tid - self._c3[c]
        b = bisect_right(self._c2, rem) - 1
        return rem - self._c2[b], b, c

    def __contains__(self, tri) -> bool:
        t = self.tid(*tri)
        return bool(self._pos[t] >= 0)

    def triples(self) -> list[tuple[int, int, int]]:
        return [self.decode(int(t)) for t in self._dense[: self._count]]

    def _edge_tids(self, u: int, v: int) -> np.ndarray:
        if u > v:
            u, v = v, u
        w = np.arange(self.n, dtype=np.int64)
        w = w[(w != u) & (w != v)]
        lo = np.minimum(w, u)
        hi = np.maximum(w, v)
        mid = u + v + w - lo - hi
        return self._c3np[hi] + self._c2np[mid] + lo

    def discard_edge(self, u: int, v: int) -> int:
        """Remove every stored triangle containing uv; returns how many went."""
        tids = self._edge_tids(u, v)
        tids = tids[self._pos[tids] >= 0]
        m = len(tids)
        if m == 0:
            return 0
        dead = self._dead[tids]
        self._fully_dead -= int(np.count_nonzero(dead == ALL_DEAD))
        self._dead[tids] = 0
        positions = self._pos[tids].astype(np.int64)
        new_len = self._count - m
        holes = positions[positions < new_len]
        tail = np.ones(m, dtype=bool)
        tail[positions[positions >= new_len] - new_len] = False
        movers = np.arange(new_len, self._count)[tail]
        moved = self._dense[movers]
        self._dense[holes] = moved
        self._pos[moved] = holes
        self._pos[tids] = -1
        self._count = new_len
        return m

    def dead_mask(self, tid: int) -> int:
        return int(self._dead[tid])

    def mark_dead(self, tid: int, slot: int) -> None:
        before = int(self._dead[tid])
        after = before | (1 << slot)
        self._dead[tid] = after
        if after == ALL_DEAD and before != ALL_DEAD:
            self._fully_dead += 1

    def sample(self, rng: np.random.Generator) -> int:
        """Uniform stored triangle id. Caller checks emptiness."""
        return int(self._dense[rng.integers(self._count)])

    def sample_live(self, rng: np.random.Generator, tries: int = 64) -> tuple[int, int]:
        """Uniform (triangle id, apex slot) over orientations not marked starved."""
        for _ in range(tries):
            t = int(self._dense[rng.integers(self._count)])
            slot = int(rng.integers(3))
            if not (int(self._dead[t]) >> slot) & 1:
                return t, slot
        tids = self._dense[: self._count]
        d = self._dead[tids]
        live = 3 - ((d & 1) + ((d >> 1) & 1) + ((d >> 2) & 1)).astype(np.int64)
        cum = np.cumsum(live)
        r = int(rng.integers(int(cum[-1])))
        i = int(np.searchsorted(cum, r, side="right"))
        t = int(tids[i])
        skip = r - (int(cum[i - 1]) if i else 0)
        mask = int(self._dead[t])
        for slot in range(3):
            if not (mask >> slot) & 1:
                if skip == 0:
                    return t, slot
                skip -= 1
        raise AssertionError("unreachable: live count disagrees with marks")


class RejectionTriangleSampler:
    """Same interface as TriangleStore without the O(n^3) table."""

    def __init__(self, n: int):
        if n < 3:
            raise ValueError("need at least 3 vertices")
        self.n = n
        full = (1 << n) - 1
        self._unc = [full & ~(1 << v) for v in range(n)]
        self._count = comb(n, 3)
        self._c3 = [comb(c, 3) for c in range(n + 1)]
        self._c2 = [comb(b, 2) for b in range(n + 1)]
        self._dead: dict[int, int] = {}
        self._fully_dead = 0

    def __len__(self) -> int:
        return self._count

    @property
    def live_count(self) -> int:
        return self._count - self._fully_dead

    def tid(self, a: int, b: int, c: int) -> int:
        a, b, c = sorted((a, b, c))
        return self._c3[c] + self._c2[b] + a

    def decode(self, tid: int) -> tuple[int, int, int]:
        c = bisect_right(self._c3, tid) - 1
        rem = tid - self._c3[c]
        b = bisect_right(self._c2, rem) - 1
        return rem - self._c2[b], b, c

    def _uncolored(self, a: int, b: int) -> bool:
        return bool((self._unc[a] >> b) & 1)

    def __contains__(self, tri) -> bool:
        a, b, c = tri
        return self._uncolored(a, b) and self._uncolored(b, c) and self._uncolored(a, c)

    def triples(self) -> list[tuple[int, int, int]]:
        out = []
        for a in range(self.n):
            for b in range(a + 1, self.n):
                if not self._uncolored(a, b):
                    continue
                common = self._unc[a] & self._unc[b] & ~((1 << (b + 1)) - 1)
                while common:
                    low = common & -common
                    out.append((a, b, low.bit_length() - 1))
                    common ^= low
        return out

    def discard_edge(self, u: int, v: int) -> int:
        if not self._uncolored(u, v):
            return 0
        common = self._unc[u] & self._unc[v]
        m = common.bit_count()
        if self._dead:
            while common:
                low = common & -common
                w = low.bit_length() - 1
                common ^= low
                mask = self._dead.pop(self.tid(u, v, w), 0)
                if mask == ALL_DEAD:
                    self._fully_dead -= 1
        self._unc[u] &= ~(1 << v)
        self._unc[v] &= ~(1 << u)
        self._count -= m
        return m

    def dead_mask(self, tid: int) -> int:
        return self._dead.get(tid, 0)

    def mark_dead(self, tid: int, slot: int) -> None:
        before = self._dead.get(tid, 0)
        after = before | (1 << slot)
        self._dead[tid] = after
        if after == ALL_DEAD and before != ALL_DEAD:
            self._fully_dead += 1

    def sample(self, rng: np.random.Generator) -> int:
        n = self.n
        while True:
            a, b, c = (int(x) for x in rng.choice(n, size=3, replace=False))
            if (a, b, c) in self:
                return self.tid(a, b, c)

    def sample_live(self, rng: np.random.Generator, tries: int = 0) -> tuple[int, int]:
        while True:
            t = self.sample(rng)
            slot = int(rng.integers(3))
            if not (self._dead.get(t, 0) >> slot) & 1:
                return t, slot
