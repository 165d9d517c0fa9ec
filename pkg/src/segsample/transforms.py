"""Operations that map uniform (or constant-sum) vectors to new ones."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadPermutation, DimensionMismatch, SizeLimit
from .segments import SegmentSet, build_segment_set

MAX_EDGES = 10**6


def _subset(L, d: int) -> np.ndarray:
    idx = np.array(sorted(set(int(l) for l in L)), dtype=np.int64)
    if idx.size and (idx[0] < 1 or idx[-1] > d):
        raise ValueError(f"reflection indices must lie in 1..{d}")
    return idx - 1


def reflect(u, L) -> np.ndarray:
    """Replace u_l by 1 - u_l for every (1-based) l in L.  Works on rows of a batch."""
    u = np.array(u, dtype=float)
    idx = _subset(L, u.shape[-1])
    u[..., idx] = 1.0 - u[..., idx]
    return u


def _check_perm(pi, d: int) -> np.ndarray:
    p = np.asarray(pi, dtype=np.int64)
    if p.shape != (d,) or not np.array_equal(np.sort(p), np.arange(1, d + 1)):
        raise BadPermutation(f"{list(pi)} is not a permutation of 1..{d}")
    return p - 1


def permute_vector(u, pi) -> np.ndarray:
    """w_l = u_{pi(l)} with pi a permutation of 1..d."""
    u = np.asarray(u, dtype=float)
    return u[..., _check_perm(pi, u.shape[-1])]


def permute_segments(S: SegmentSet, pi) -> SegmentSet:
    """Segment set of the permuted vector: row l becomes row pi(l)."""
    return build_segment_set(S.X[_check_perm(pi, S.d)], S.edges)


def stochastic_compose(*sets: SegmentSet) -> SegmentSet:
    """Disjoint union: vertices and edges of each set, relabelled consecutively.

    Uniform edge choice on the union picks branch i with probability
    |E_i| / sum_j |E_j|.
    """
    if not sets:
        raise ValueError("need at least one segment set")
    d = sets[0].d
    if any(S.d != d for S in sets):
        raise DimensionMismatch(f"dimensions differ: {[S.d for S in sets]}")
    total = sum(S.n_edges for S in sets)
    if total > MAX_EDGES:
        raise SizeLimit(f"union would have {total} edges (cap {MAX_EDGES})")
    X = np.hstack([S.X for S in sets])
    offs = np.cumsum([0] + [S.n for S in sets[:-1]])
    E = np.vstack([S.edges + o for S, o in zip(sets, offs)])
    return build_segment_set(X, E)


def deterministic_compose(Sy: SegmentSet, Sx: SegmentSet, max_edges: int = MAX_EDGES) -> SegmentSet:
    """Map each segment of ``Sx`` affinely into each edge's box of ``Sy``.

    Vertex (k, i') gets index (k - 1) * n_x + i' and coordinates
    z_l = y_{l,i(k)} x_{l,i'} + y_{l,j(k)} (1 - x_{l,i'}).
    """
    if Sy.d != Sx.d:
        raise DimensionMismatch(f"dimensions differ: {Sy.d} vs {Sx.d}")
    m = Sy.n_edges * Sx.n_edges
    if m > max_edges or Sy.n_edges * Sx.n > max_edges:
        raise SizeLimit(f"composition would have {m} edges (cap {max_edges})")
    YI, YJ = Sy.endpoints()  # d x |Ey|
    # z[l, k, i'] ; flattened so that (k, i') is lexicographic
    Z = YI[:, :, None] * Sx.X[:, None, :] + YJ[:, :, None] * (1.0 - Sx.X[:, None, :])
    Z = Z.reshape(Sy.d, -1)
    base = (np.arange(Sy.n_edges) * Sx.n)[:, None, None]
    E = (base + Sx.edges[None, :, :]).reshape(-1, 2)
    return build_segment_set(np.clip(Z, 0.0, 1.0), E)


def _segment_key(X: np.ndarray, edges: np.ndarray) -> tuple:
    """Multiset of unordered segments, rounded, as a hashable value."""
    R = np.round(X, 12)
    P, Q = R[:, edges[:, 0] - 1].T, R[:, edges[:, 1] - 1].T
    return tuple(sorted(tuple(sorted((tuple(a), tuple(b)))) for a, b in zip(P, Q)))


def exchangeable_segment_set(S: SegmentSet, max_edges: int = MAX_EDGES) -> SegmentSet:
    """Stochastic composition of every row permutation of ``S``.

    Row permutations that reproduce the same set of segments are kept once;
    since each permutation carries the same number of edges, dropping exact
    duplicates leaves the mixture unchanged.
    """
    d = S.d
    if math.factorial(d) * S.n_edges > 50 * max_edges:
        raise SizeLimit(f"{math.factorial(d)} permutations of {S.n_edges} edges is too large")
    seen: set[tuple] = set()
    parts = []
    for p in itertools.permutations(range(d)):
        Xp = S.X[list(p)]
        key = _segment_key(Xp, S.edges)
        if key in seen:
            continue
        seen.add(key)
        parts.append(build_segment_set(Xp, S.edges))
        if sum(P.n_edges for P in parts) > max_edges:
            raise SizeLimit(f"exchangeable set exceeds {max_edges} edges")
    return stochastic_compose(*parts)


def comonotone_segment_set(d: int) -> SegmentSet:
    """The diagonal of the cube: U_l = V for every l."""
    return build_segment_set(np.array([[0.0, 1.0]] * d), [(1, 2)])


def reflection_structure(d: int, L) -> SegmentSet:
    """One-edge structure whose deterministic composition reflects the complement of L.

    Coordinates in L run from y_j = 0 to y_i = 1 (identity map); the others run
    from 1 to 0, so z_l = 1 - x_l there.  With L = {1..d} this is the identity.
    """
    idx = _subset(L, d)
    yi = np.zeros(d)
    yi[idx] = 1.0
    return build_segment_set(np.column_stack([yi, 1.0 - yi]), [(1, 2)])


@dataclass(frozen=True)
class CompositionCheck:
    c1: float | None
    c2: float | None
    preserves: bool
    applicable: bool


def ctm_composition_check(Sy: SegmentSet, tol: float = 1e-10) -> CompositionCheck:
    """Check whether composing over ``Sy`` keeps every vertex sum at d/2.

    c1 = |y_{l,i(k)} - y_{l,j(k)}| and c2 = sum_l y_{l,j(k)} must be constant over
    all l and k.  With a common sign s of the differences the composed vertex
    sums are c2 + s c1 d/2, so the sum is kept when that equals d/2; for s = +1
    this is (1 - c1) d/2 = c2.  Mixed signs are reported as not preserving.
    """
    YI, YJ = Sy.endpoints()
    diff = YI - YJ
    a = np.abs(diff)
    c2s = YJ.sum(axis=0)
    if np.ptp(a) > tol or np.ptp(c2s) > tol:
        return CompositionCheck(None, None, False, False)
    c1, c2 = float(a.mean()), float(c2s.mean())
    signs = np.sign(diff[np.abs(diff) > tol])
    if signs.size and np.all(signs == signs[0]):
        s = float(signs[0])
        preserves = abs(c2 + s * c1 * Sy.d / 2.0 - Sy.d / 2.0) <= tol
    else:
        preserves = abs(c2 - Sy.d / 2.0) <= tol and c1 <= tol
    return CompositionCheck(c1, c2, bool(preserves), True)
