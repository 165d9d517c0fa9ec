"""Draws from segment sets, generalized Latin hypercube samples and CDFs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadIndex, EmptyEdgeSet, ValidationError
from .segments import SegmentSet, supports, uniformity_residuals
from .streams import as_rng, random_permutations

# A v-source returns an (n, d) matrix of vectors with uniform marginals.
VSource = Callable[[int, np.random.Generator], np.ndarray]


@dataclass
class DrawBatch:
    samples: np.ndarray
    construction: str = "segments"
    seed: int | None = None
    stream: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    @property
    def d(self) -> int:
        return int(self.samples.shape[1])


def _seed_of(seed_or_rng) -> int | None:
    return None if isinstance(seed_or_rng, np.random.Generator) else seed_or_rng


def _check_drawable(S: SegmentSet, force: bool) -> None:
    if S.n_edges == 0:
        raise EmptyEdgeSet("segment set has no edges")
    if not force:
        rep = uniformity_residuals(S)
        if not rep.is_uniform():
            raise ValidationError(
                "segment set fails the uniformity checks; pass force=True to sample anyway"
            )


def edge_choice(m: int, W: np.ndarray) -> np.ndarray:
    """0-based edge index from W in [0, 1]; W = 1 is clamped to the last edge."""
    return np.minimum((m * W).astype(np.int64), m - 1)


def draw(S: SegmentSet, n: int, seed=0, force: bool = False) -> DrawBatch:
    """U = x_I V + (1 - V) x_J with (I, J) a uniformly chosen edge."""
    _check_drawable(S, force)
    rng = as_rng(seed)
    VW = rng.random((n, 2))
    k = edge_choice(S.n_edges, VW[:, 1])
    XI, XJ = S.endpoints()
    V = VW[:, :1]
    U = XI[:, k].T * V + (1.0 - V) * XJ[:, k].T
    return DrawBatch(U, seed=_seed_of(seed))


def iid_source(d: int) -> VSource:
    return lambda n, rng: rng.random((n, d))


def comonotone_source(d: int) -> VSource:
    return lambda n, rng: np.repeat(rng.random((n, 1)), d, axis=1)


def draw_generalized(S: SegmentSet, v_source: VSource, n: int, seed=0, force: bool = False) -> DrawBatch:
    """U_l = x_{l,I} V_l + x_{l,J} (1 - V_l) with V from ``v_source`` and one edge per draw."""
    _check_drawable(S, force)
    rng = as_rng(seed)
    W = rng.random(n)
    k = edge_choice(S.n_edges, W)
    V = np.asarray(v_source(n, rng), dtype=float)
    if V.shape != (n, S.d):
        raise BadIndex(f"v_source returned shape {V.shape}, expected {(n, S.d)}")
    XI, XJ = S.endpoints()
    U = XI[:, k].T * V + XJ[:, k].T * (1.0 - V)
    return DrawBatch(U, seed=_seed_of(seed))


@dataclass
class GlhSample:
    """p x d matrix: row i is a Latin hypercube column of length d."""

    U: np.ndarray
    base: str
    permutations: np.ndarray | None = None


def glh_sample(p: int, d: int, base: VSource | None = None, seed=0, keep_permutations: bool = False) -> GlhSample:
    """U_l^i = ((pi_i(l) + 1)/d) V_l^i + (pi_i(l)/d)(1 - V_l^i) = (pi_i(l) + V_l^i)/d."""
    if p < 1 or d < 2:
        raise ValueError("need p >= 1 and d >= 2")
    rng = as_rng(seed)
    perms = random_permutations(rng, p, d)
    src = base if base is not None else iid_source(d)
    V = np.asarray(src(p, rng), dtype=float)
    U = (perms + V) / d
    name = "iid" if base is None else getattr(base, "__name__", "custom")
    return GlhSample(U, name, perms if keep_permutations else None)


def _edge_cdf_terms(S: SegmentSet, u: np.ndarray) -> np.ndarray:
    """Conditional CDF value at u for every edge (vector over edges)."""
    lo, hi = supports(S)
    u = np.asarray(u, dtype=float).reshape(-1, 1)
    if u.shape[0] != S.d:
        raise BadIndex(f"point has {u.shape[0]} coordinates, expected {S.d}")
    v = (np.clip(u, lo, hi) - lo) / (hi - lo)
    XI, XJ = S.endpoints()
    plus = XI - XJ >= 0
    vp = np.where(plus, v, 1.0).min(axis=0)
    vm = np.where(~plus, v, 1.0).min(axis=0)
    return np.maximum(vp + vm - 1.0, 0.0)


def conditional_cdf(S: SegmentSet, k: int, u) -> float:
    """P(U <= u | K = k) for the common-V representation, k 1-based."""
    if not 1 <= k <= S.n_edges:
        raise BadIndex(f"edge {k} outside 1..{S.n_edges}")
    return float(_edge_cdf_terms(S, u)[k - 1])


def joint_cdf(S: SegmentSet, u) -> float:
    if S.n_edges == 0:
        raise EmptyEdgeSet("segment set has no edges")
    return float(_edge_cdf_terms(S, u).mean())
