"""Segment sets: a graph over points of the unit cube plus validation.

A segment set is a d x n coordinate matrix ``X`` (column k is vertex k) and a
list of edges ``(i, j)`` with 1-based vertex indices and ``i < j``.  A draw
picks an edge uniformly and a uniform point on the segment joining its two
endpoints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadIndex, DegenerateEdge, OutOfRangeCoordinate, SelfLoop, ValidationError

GROUP_TOL = 1e-12
RANGE_TOL = 1e-12


@dataclass(frozen=True)
class SegmentSet:
    """Immutable segment set. ``edges`` is an (m, 2) int array, 1-based, sorted."""

    X: np.ndarray
    edges: np.ndarray

    def __post_init__(self) -> None:
        self.X.setflags(write=False)
        self.edges.setflags(write=False)

    @property
    def d(self) -> int:
        return int(self.X.shape[0])

    @property
    def n(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X_I, X_J): d x m arrays of first and second endpoint coordinates."""
        i = self.edges[:, 0] - 1
        j = self.edges[:, 1] - 1
        return self.X[:, i], self.X[:, j]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "coordinates": self.X.tolist(),
            "edges": self.edges.tolist(),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegmentSet):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.edges, other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.X.tobytes(), self.edges.tobytes()))


def build_segment_set(X, edges: Iterable[Sequence[int]]) -> SegmentSet:
    """Validate and canonicalize (sort edges) a coordinate matrix and edge list."""
    X = np.array(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 2:
        raise BadIndex(f"coordinate matrix must be d x n with n >= 2, got shape {X.shape}")
    bad = (X < -RANGE_TOL) | (X > 1 + RANGE_TOL) | ~np.isfinite(X)
    if bad.any():
        l, k = np.argwhere(bad)[0]
        raise OutOfRangeCoordinate(f"x[{l + 1},{k + 1}] = {X[l, k]!r} outside [0, 1]")
    X = np.clip(X, 0.0, 1.0)
    n = X.shape[1]
    E = np.array([tuple(e) for e in edges], dtype=np.int64).reshape(-1, 2)
    for i, j in E:
        if i == j:
            raise SelfLoop(f"edge ({i},{j}) is a self loop")
        if not (1 <= i <= n and 1 <= j <= n):
            raise BadIndex(f"edge ({i},{j}) refers to a vertex outside 1..{n}")
        if i > j:
            raise BadIndex(f"edge ({i},{j}) must satisfy i < j")
    if len(E):
        E = E[np.lexsort((E[:, 1], E[:, 0]))]
    return SegmentSet(X, E)


def segment_set_from_dict(data: dict) -> SegmentSet:
    if not isinstance(data, dict) or "coordinates" not in data or "edges" not in data:
        raise ValidationError("segment-set JSON needs 'coordinates' and 'edges'")
    X = np.asarray(data["coordinates"], dtype=float)
    if "d" in data and X.shape[0] != int(data["d"]):
        raise BadIndex(f"declared d={data['d']} but {X.shape[0]} coordinate rows")
    if "n" in data and X.ndim == 2 and X.shape[1] != int(data["n"]):
        raise BadIndex(f"declared n={data['n']} but {X.shape[1]} columns")
    return build_segment_set(X, data["edges"])


def load_segment_set(path: str | Path) -> SegmentSet:
    return segment_set_from_dict(json.loads(Path(path).read_text()))


def dump_segment_set(S: SegmentSet, path: str | Path, meta: dict | None = None) -> None:
    payload = S.to_dict()
    if meta:
        payload = {"meta": meta, **payload}
    Path(path).write_text(json.dumps(payload, indent=1))


def canonicalize(S: SegmentSet) -> SegmentSet:
    """Relabel vertices so that the first coordinate row is ascending (stable)."""
    order = np.argsort(S.X[0], kind="stable")
    relabel = np.empty(S.n, dtype=np.int64)
    relabel[order] = np.arange(1, S.n + 1)
    E = relabel[S.edges - 1]
    E = np.sort(E, axis=1)
    return build_segment_set(S.X[:, order], E)


@dataclass(frozen=True)
class CoordinateProjection:
    """Projection of a segment set on coordinate ``l`` (1-based).

    ``values`` are the sorted distinct coordinate values a_l, ``level`` maps each
    vertex (0-based) to the index of its value, ``pairs`` lists projected edges
    as 0-based level pairs (m < m') with ``counts`` multiplicities, and
    ``self_loops`` lists 1-based edge indices whose endpoints share a value.
    """

    l: int
    values: np.ndarray
    level: np.ndarray
    pairs: np.ndarray
    counts: np.ndarray
    self_loops: tuple[int, ...]
    n_edges: int
    edge_levels: np.ndarray = field(repr=False)

    @property
    def n_values(self) -> int:
        return int(self.values.size)

    def positions(self, m: int) -> np.ndarray:
        """1-based vertex indices holding value number ``m`` (1-based)."""
        return np.flatnonzero(self.level == m - 1) + 1

    def multiplicity(self, m: int, m2: int) -> int:
        """Symmetric projected-edge count n_(m,m'), 1-based level indices."""
        a, b = sorted((m - 1, m2 - 1))
        hit = (self.pairs[:, 0] == a) & (self.pairs[:, 1] == b)
        return int(self.counts[hit].sum())

    def cells(self) -> list[tuple[float, float]]:
        """Partition cells [a_{m-1}, a_m) for m = 2..n_l."""
        v = self.values
        return [(float(v[m - 1]), float(v[m])) for m in range(1, v.size)]


def group_values(row: np.ndarray, tol: float = GROUP_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Group a row into sorted distinct values; returns (values, level per entry)."""
    order = np.argsort(row, kind="stable")
    srt = row[order]
    new = np.ones(srt.size, dtype=bool)
    new[1:] = np.diff(srt) > tol
    group = np.cumsum(new) - 1
    level = np.empty(row.size, dtype=np.int64)
    level[order] = group
    values = srt[new]
    return values, level


def project_coordinate(S: SegmentSet, l: int) -> CoordinateProjection:
    if not 1 <= l <= S.d:
        raise BadIndex(f"coordinate {l} outside 1..{S.d}")
    values, level = group_values(S.X[l - 1])
    el = level[S.edges - 1] if S.n_edges else np.zeros((0, 2), dtype=np.int64)
    loops = tuple(int(k) + 1 for k in np.flatnonzero(el[:, 0] == el[:, 1]))
    proper = el[el[:, 0] != el[:, 1]]
    proper = np.sort(proper, axis=1)
    if len(proper):
        pairs, counts = np.unique(proper, axis=0, return_counts=True)
    else:
        pairs, counts = np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    return CoordinateProjection(
        l=l,
        values=values,
        level=level,
        pairs=pairs,
        counts=counts,
        self_loops=loops,
        n_edges=S.n_edges,
        edge_levels=np.sort(el, axis=1),
    )


def reconstruct_row(P: CoordinateProjection) -> np.ndarray:
    return P.values[P.level]


@dataclass
class UniformityReport:
    """Violations of the three uniformity assumptions plus constant-sum residuals.

    ``residuals[l]`` holds F_{l,m} for cells m = 2..n_l (the last cell is implied by
    the others when the range condition holds, and is reported anyway).
    """

    admissibility: list[tuple[int, int]]
    range_violations: list[int]
    residuals: dict[int, np.ndarray]
    sum_residuals: np.ndarray

    def max_residual(self) -> float:
        vals = [np.max(np.abs(r)) for r in self.residuals.values() if r.size]
        return float(max(vals)) if vals else 0.0

    def max_sum_residual(self) -> float:
        return float(np.max(np.abs(self.sum_residuals))) if self.sum_residuals.size else 0.0

    def is_uniform(self, tol: float = 1e-8) -> bool:
        return not self.admissibility and not self.range_violations and self.max_residual() <= tol

    def is_ctm(self, tol: float = 1e-10) -> bool:
        return self.max_sum_residual() <= tol

    def to_dict(self) -> dict:
        return {
            "admissibility_violations": [list(p) for p in self.admissibility],
            "range_violations": list(self.range_violations),
            "max_coordinate_residual": self.max_residual(),
            "coordinate_residuals": {str(k): v.tolist() for k, v in self.residuals.items()},
            "max_sum_residual": self.max_sum_residual(),
            "uniform": self.is_uniform(),
            "constant_sum": self.is_ctm(),
        }


def cell_residuals(P: CoordinateProjection) -> np.ndarray:
    """F for each cell [a_{m-1}, a_m): (1/|E|) sum of inverse covering lengths - 1."""
    v = P.values
    n_cells = v.size - 1
    if n_cells <= 0 or P.n_edges == 0:
        return np.zeros(0)
    dens = np.zeros(n_cells + 1)
    el = P.edge_levels
    ok = el[:, 0] != el[:, 1]
    lo, hi = el[ok, 0], el[ok, 1]
    w = 1.0 / (v[hi] - v[lo])
    # an edge spanning levels lo..hi adds w to cells lo..hi-1 (cell c is [a_c, a_{c+1}))
    np.add.at(dens, lo, w)
    np.add.at(dens, hi, -w)
    dens = np.cumsum(dens)[:n_cells]
    return dens / P.n_edges - 1.0


def uniformity_residuals(S: SegmentSet) -> UniformityReport:
    adm: list[tuple[int, int]] = []
    rng_bad: list[int] = []
    res: dict[int, np.ndarray] = {}
    for l in range(1, S.d + 1):
        P = project_coordinate(S, l)
        adm.extend((k, l) for k in P.self_loops)
        v = P.values
        if abs(v[0]) > RANGE_TOL or abs(v[-1] - 1.0) > RANGE_TOL:
            rng_bad.append(l)
        res[l] = cell_residuals(P)
    adm.sort()
    sums = S.X.sum(axis=0) - S.d / 2.0
    return UniformityReport(adm, rng_bad, res, sums)


def conditional_support(S: SegmentSet, k: int, l: int) -> tuple[float, float]:
    """Support [alpha, beta] of U_l given that edge k (1-based) was chosen."""
    if not 1 <= k <= S.n_edges:
        raise BadIndex(f"edge {k} outside 1..{S.n_edges}")
    if not 1 <= l <= S.d:
        raise BadIndex(f"coordinate {l} outside 1..{S.d}")
    i, j = S.edges[k - 1]
    a, b = S.X[l - 1, i - 1], S.X[l - 1, j - 1]
    lo, hi = (a, b) if a <= b else (b, a)
    if hi - lo <= GROUP_TOL:
        raise DegenerateEdge(f"edge {k} is degenerate on coordinate {l}")
    return float(lo), float(hi)


def supports(S: SegmentSet) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized conditional supports: (alpha, beta), each d x m."""
    XI, XJ = S.endpoints()
    lo, hi = np.minimum(XI, XJ), np.maximum(XI, XJ)
    if np.any(hi - lo <= GROUP_TOL):
        l, k = np.argwhere(hi - lo <= GROUP_TOL)[0]
        raise DegenerateEdge(f"edge {k + 1} is degenerate on coordinate {l + 1}")
    return lo, hi
