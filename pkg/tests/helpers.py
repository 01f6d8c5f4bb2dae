"""Shared builders for tests."""
from __future__ import annotations

import itertools

import numpy as np

from ramsey_forge.core import ProcessConfig, init_state
from ramsey_forge.phase1 import NO_TRIANGLES, step


def reachable_state(n: int, seed: int, steps: int, epsilon: float = 0.5):
    """A Phase-1 state after up to ``steps`` colored steps under the skip policy."""
    rng = np.random.default_rng(seed)
    state = init_state(ProcessConfig(n=n, epsilon=epsilon, seed=seed), rng)
    done = 0
    while done < steps:
        out = step(state, rng, skip=True)
        if out.tag == NO_TRIANGLES:
            break
        done += out.tag == "Colored"
    return state, rng


def sym(n, edges):
    """Symmetric color matrix from {(u, v): color}; -1 elsewhere."""
    c = np.full((n, n), -1, dtype=np.int64)
    for (u, v), k in edges.items():
        c[u, v] = c[v, u] = k
    return c


def rainbow(n):
    return sym(n, {e: i for i, e in enumerate(itertools.combinations(range(n), 2))})
