"""Variance of Latin hypercube averages as the number of strata grows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..catalog import aj_sampler
from ..streams import make_rng, random_permutations

CHUNK_VALUES = 2_000_000


@dataclass(frozen=True)
class Integrand:
    """Bounded integrand with known mean, residual variance and total variance."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    p: int
    mean: float
    resid_var: float
    total_var: float


PRODUCT2 = Integrand("product2", lambda u: u[..., 0] * u[..., 1], 2, 0.25, 1.0 / 144.0, 7.0 / 144.0)
ADDITIVE2 = Integrand("additive2", lambda u: u[..., 0] + u[..., 1], 2, 1.0, 0.0, 1.0 / 6.0)
INTEGRANDS = {g.name: g for g in (PRODUCT2, ADDITIVE2)}


def iid_base(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, d))


def aj2_base(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return aj_sampler(d, 2, n, rng)


BASES = {"iid": iid_base, "aj": aj2_base}


@dataclass
class CltRow:
    d: int
    base: str
    variance: float
    variance_se: float
    analytic: float
    iid_variance: float


def clt_check(f: Integrand, d_list, reps: int, base: str = "iid", seed: int = 0) -> list[CltRow]:
    """Empirical variance of sqrt(d) (mean_l f(U_l) - E f) over replications.

    Each replication builds p Latin hypercube columns of length d on the
    chosen base and averages f over the d resulting points.
    """
    sampler = BASES[base] if isinstance(base, str) else base
    name = base if isinstance(base, str) else getattr(base, "__name__", "custom")
    rows = []
    for d in d_list:
        rng = make_rng(seed, int(d), f"clt:{name}")
        per = max(1, CHUNK_VALUES // (d * f.p))
        stat = np.empty(reps)
        for r0 in range(0, reps, per):
            r1 = min(reps, r0 + per)
            m = r1 - r0
            perms = random_permutations(rng, m * f.p, d)
            V = sampler(m * f.p, d, rng)
            U = ((perms + V) / d).reshape(m, f.p, d).transpose(0, 2, 1)
            stat[r0:r1] = np.sqrt(d) * (f.f(U).mean(axis=1) - f.mean)
        var = float(stat.var(ddof=1))
        # SE of a sample variance from the fourth central moment
        c = stat - stat.mean()
        se = float(np.sqrt(max((c**4).mean() - var**2, 0.0) / reps))
        rows.append(CltRow(int(d), name, var, se, f.resid_var, f.total_var))
    return rows
