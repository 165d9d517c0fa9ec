"""Wall-clock cost of the samplers."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..catalog import (
    aj_sampler,
    ccv_segment_set,
    gaffke_d_sampler,
    lh_sampler,
    rbs_sampler,
    rotation_sampler,
)
from ..sampling import draw
from ..streams import make_rng, random_permutations

TIMED = ("rbs", "ccv-segments", "aj", "gaffke-d", "rotation", "lh")


@dataclass
class TimingRow:
    construction: str
    d: int
    mean_time: float


def _prepare(name: str, d: int):
    """Return a callable (n, rng) -> samples; set-up cost is excluded from timing."""
    if name == "rbs":
        return lambda n, rng: rbs_sampler(d, n, rng)
    if name == "ccv-segments":
        # exchangeable version: same law as rbs, drawn through the segment set
        S = ccv_segment_set(d, (1,))

        def fn(n, rng):
            U = draw(S, n, rng, force=True).samples
            return np.take_along_axis(U, random_permutations(rng, n, d), axis=1)

        return fn
    if name == "aj":
        return lambda n, rng: aj_sampler(d, 2, n, rng)
    if name == "gaffke-d":
        return lambda n, rng: gaffke_d_sampler(d, n, rng)
    if name == "rotation":
        return lambda n, rng: rotation_sampler(d, n, rng)
    if name == "lh":
        return lambda n, rng: lh_sampler(d, n, rng)
    raise ValueError(f"unknown construction {name!r}; choose from {TIMED}")


def sampling_time_study(constructions, d_range, n: int, reps: int, seed: int = 0) -> list[TimingRow]:
    """Mean seconds to draw n vectors, averaged over ``reps`` repetitions."""
    if n <= 0 or reps <= 0:
        return []
    rows = []
    for name in constructions:
        for d in d_range:
            fn = _prepare(name, int(d))
            rng = make_rng(seed, int(d), f"timing:{name}")
            times = np.empty(reps)
            for r in range(reps):
                t0 = time.perf_counter()
                fn(n, rng)
                times[r] = time.perf_counter() - t0
            rows.append(TimingRow(name, int(d), float(times.mean())))
    return rows
