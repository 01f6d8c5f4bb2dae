"""Named, seed-derived random substreams.

Every random draw in a run comes from one 64-bit seed. Each consumer gets its
own child stream keyed by a fixed index, so adding draws in one phase never
shifts the draws of another.
"""
from __future__ import annotations

import numpy as np

SPECIAL_SETS = 0
PHASE1 = 1
PHASE2 = 2
TELEMETRY = 3


def substream(seed: int, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(seq))


def substream_seeds(seed: int) -> dict[str, list[int]]:
    """State words of every named substream, for the run manifest."""
    out = {}
    for name, idx in (("special_sets", SPECIAL_SETS), ("phase1", PHASE1),
                      ("phase2", PHASE2), ("telemetry", TELEMETRY)):
        seq = np.random.SeedSequence(entropy=seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(idx,))
        out[name] = [int(w) for w in seq.generate_state(2, dtype=np.uint64)]
    return out


def choose_bit(mask: int, rng: np.random.Generator) -> int:
    """Uniformly random set bit of a nonempty bitmask, as a bit index."""
    j = int(rng.integers(mask.bit_count()))
    while True:
        low = mask & -mask
        if j == 0:
            return low.bit_length() - 1
        mask ^= low
        j -= 1


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out
