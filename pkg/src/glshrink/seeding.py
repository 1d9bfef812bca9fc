"""Counter-based random streams keyed by ``(seed, stream, index...)``.

Every random quantity in the package is drawn from a Philox generator whose
key is derived from the user seed plus a fixed path of integers, so results
never depend on evaluation order or thread scheduling.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_STREAMS = {"theta": 1, "noise": 2, "importance": 3, "signs": 4}


def _seed_sequence(seed: int, stream: str, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(_STREAMS[stream], *map(int, index)))


def generator(seed: int, stream: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, stream, *index)))


def standard_normals(n: int, seed: int, stream: str, *index: int) -> np.ndarray:
    """``n`` standard normals where entry ``i`` depends only on the key and ``i``.

    Each 64-bit Philox output is mapped to one uniform on the open unit
    interval and pushed through the normal quantile function.
    """
    bitgen = np.random.Philox(_seed_sequence(seed, stream, *index))
    raw = bitgen.random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)
