"""Closed-form antithetic constructions.

Each construction is available as a direct sampler and, when one exists, as a
segment set.  ``Construction`` is the serializable descriptor that ties the
two together.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SizeLimit, ValidationError
from .optimizer import circulant_edges, solve_circulant
from .sampling import draw, draw_generalized, iid_source
from .segments import SegmentSet, build_segment_set, load_segment_set
from .streams import random_permutations
from .transforms import (
    deterministic_compose,
    exchangeable_segment_set,
    stochastic_compose,
)

MAX_VERTICES = 10**6
MAX_LH_D = 8

# --------------------------------------------------------------------------- #
# segment sets
# --------------------------------------------------------------------------- #


def antithetic_pair_segment_set() -> SegmentSet:
    return build_segment_set([[1.0, 0.0], [0.0, 1.0]], [(1, 2)])


def rotation_segment_set(d: int) -> SegmentSet:
    """2d vertices; edge (m, d+m) carries U = ((l-1)/d + U_1) mod 1 on one 1/d piece."""
    if d < 2:
        raise ValueError("d must be at least 2")
    X = np.zeros((d, 2 * d))
    for l in range(1, d + 1):
        for m in range(1, d + 1):
            wrap = m >= d + 2 - l
            X[l - 1, m - 1] = (l + m - 1 - (d if wrap else 0)) / d
            X[l - 1, d + m - 1] = (l + m - 2 - (d if wrap else 0)) / d
    return build_segment_set(X, [(m, d + m) for m in range(1, d + 1)])


def aj_segment_set(d: int, b: int, max_vertices: int = MAX_VERTICES) -> SegmentSet:
    """Base-b construction enumerated piece by piece.

    With M = b^(d-2) and U_1 = (m + V)/M, every coordinate is affine in V on
    piece m.  Vertex m+1 is the V = 1 end, vertex M+m+1 the V = 0 end.
    """
    if d < 2 or b < 1:
        raise ValueError("need d >= 2 and b >= 1")
    M = b ** (d - 2)
    if 2 * M > max_vertices:
        raise SizeLimit(f"{2 * M} vertices exceeds the cap of {max_vertices}")
    m = np.arange(M, dtype=np.int64)
    y = np.zeros((d, M))
    z = np.zeros((d, M))
    y[0], z[0] = m / M, (m + 1) / M
    for l in range(2, d):
        B = b ** (d - l)
        # frac(b^(l-2) U_1 + 1/b) = ((m mod B) + V)/B + 1/b, no wrap inside a piece
        num = (m % B + B // b) % B
        y[l - 1], z[l - 1] = num / B, (num + 1) / B
    y[d - 1], z[d - 1] = 1.0, 0.0
    edges = [(i, M + i) for i in range(1, M + 1)]
    return build_segment_set(np.hstack([z, y]), edges)


def _gaffke3_piece(V, upper: bool) -> np.ndarray:
    if upper:
        return np.stack([V, V - 0.5, 2.0 - 2.0 * V], axis=-1)
    return np.stack([V, V + 0.5, 1.0 - 2.0 * V], axis=-1)


def gaffke3(V) -> np.ndarray:
    """Three-dimensional constant-sum vector driven by one uniform V."""
    V = np.asarray(V, dtype=float)
    return np.where((V <= 0.5)[..., None], _gaffke3_piece(V, False), _gaffke3_piece(V, True))


def gaffke3_segment_set() -> SegmentSet:
    """The two linear pieces on V in [0, 1/2] and [1/2, 1], endpoints as limits."""
    right = [_gaffke3_piece(np.float64(0.5), False), _gaffke3_piece(np.float64(1.0), True)]
    left = [_gaffke3_piece(np.float64(0.0), False), _gaffke3_piece(np.float64(0.5), True)]
    return build_segment_set(np.column_stack(right + left), [(1, 3), (2, 4)])


def ccv_first_row(d: int, offsets=(1,)) -> np.ndarray:
    return solve_circulant(d, offsets)


def ccv_segment_set(d: int, offsets=(1,)) -> SegmentSet:
    """d circular shifts of the solved first row on the circulant graph."""
    x = solve_circulant(d, offsets)
    X = np.array([[x[(i + k) % d] for i in range(d)] for k in range(d)])
    return build_segment_set(X, circulant_edges(d, offsets))


def lh_segment_set(d: int) -> SegmentSet:
    """Latin hypercube boxes: edge k joins (pi_k + 1)/d and pi_k/d."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if d > MAX_LH_D:
        raise SizeLimit(f"Latin hypercube segment set limited to d <= {MAX_LH_D}")
    perms = np.array(list(itertools.permutations(range(d)))).T  # d x d!
    f = perms.shape[1]
    X = np.hstack([(perms + 1) / d, perms / d])
    return build_segment_set(X, [(k, f + k) for k in range(1, f + 1)])


# --------------------------------------------------------------------------- #
# direct samplers
# --------------------------------------------------------------------------- #


def rotation_sampler(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    U = rng.random((n, 1))
    return np.mod(np.arange(d) / d + U, 1.0)


def _digit_windows(digits: np.ndarray, b: int, L: int) -> np.ndarray:
    """Integer value of every length-L window of base-b digits (rolling, exact)."""
    n, width = digits.shape
    count = width - L + 1
    out = np.empty((n, count), dtype=np.int64)
    cur = np.zeros(n, dtype=np.int64)
    for j in range(L):
        cur = cur * b + digits[:, j]
    out[:, 0] = cur
    top = b ** (L - 1)
    for s in range(1, count):
        cur = (cur % top) * b + digits[:, s + L - 1]
        out[:, s] = cur
    return out


def aj_sampler(d: int, b: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Base-b construction evaluated by digit arithmetic, valid for any d.

    U_1 = 0.g_1 g_2 ... in base b where g_1..g_{d-2} index the piece and the
    remaining digits play the role of V.  Shifting by 1/b mod 1 only changes
    the leading digit, so no floating-point modulo is taken.
    """
    if d < 2 or b < 1:
        raise ValueError("need d >= 2 and b >= 1")
    if d == 2:
        V = rng.random((n, 1))
        return np.hstack([V, 1.0 - V])
    if b == 1:
        V = rng.random((n, 1))
        return np.hstack([np.repeat(V, d - 1, axis=1), 1.0 - V])
    L = max(2, int(62 / math.log2(b)))
    digits = rng.integers(0, b, size=(n, d - 2 + L), dtype=np.int64)
    W = _digit_windows(digits, b, L)  # window s starts at digit s
    scale = float(b) ** L
    out = np.empty((n, d))
    out[:, 0] = W[:, 0] / scale
    top = b ** (L - 1)
    for l in range(2, d):
        w = W[:, l - 2]
        lead = (w // top + 1) % b
        out[:, l - 1] = lead / b + (w % top) / scale
    out[:, d - 1] = 1.0 - W[:, d - 2] / scale
    return out


def gaffke_d_sampler(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent antithetic pairs, plus a gaffke3 triple when d is odd."""
    if d < 2:
        raise ValueError("d must be at least 2")
    n_pairs = d // 2 if d % 2 == 0 else (d - 3) // 2
    cols = []
    if n_pairs:
        V = rng.random((n, n_pairs))
        pairs = np.empty((n, 2 * n_pairs))
        pairs[:, 0::2], pairs[:, 1::2] = V, 1.0 - V
        cols.append(pairs)
    if d % 2 == 1:
        cols.append(gaffke3(rng.random(n)))
    return np.hstack(cols)


def rbs_sampler(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Degenerate random balanced sampling.

    Z_1 ~ U[-1, 1], Z_l = c_l - Z_1/(d-1) with c_l = -1 + (2l-3)/(d-1) for
    l = 2..d, so that sum Z = 0; coordinates are then randomly permuted and
    mapped by U = (Z + 1)/2.  Written as U = A[perm] + B[perm] V with
    V = (Z_1 + 1)/2 so the permutation only gathers two constant vectors.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    V = rng.random((n, 1))
    l = np.arange(2, d + 1)
    c = -1.0 + (2 * l - 3) / (d - 1)
    # (Z_l + 1)/2 = (c_l + 1)/2 + 1/(2(d-1)) - V/(d-1)
    A = np.concatenate([[0.0], (c + 1.0) / 2.0 + 0.5 / (d - 1)])
    B = np.concatenate([[1.0], np.full(d - 1, -1.0 / (d - 1))])
    perm = random_permutations(rng, n, d)
    return A[perm] + B[perm] * V


def lh_sampler(d: int, n: int, rng: np.random.Generator, v: np.ndarray | None = None) -> np.ndarray:
    perms = random_permutations(rng, n, d)
    V = rng.random((n, d)) if v is None else v
    return (perms + V) / d


def ilh_iterate(batch, rng: np.random.Generator | None = None, perms=None) -> np.ndarray:
    """One Latin hypercube step per row: U_t = (pi + U_{t-1}) / d."""
    batch = np.asarray(batch, dtype=float)
    n, d = batch.shape
    if perms is None:
        perms = random_permutations(rng, n, d)
    perms = np.asarray(perms).reshape(n, d)
    return (perms + batch) / d


def superstar_trajectory(T: int, rng: np.random.Generator | None = None, X0=(0.0, 0.0, 0.0), perms=None) -> np.ndarray:
    """X_t = X_{t-1}/3 + (2/3) V_t with V_t a random ordering of (-1, 0, 1).

    Returns the (T+1) x 3 trajectory including X_0.  ``perms`` (T x 3, entries
    0..2) fixes the orderings: V_t = perms[t-1] - 1.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if perms is None:
        perms = random_permutations(rng, T, 3)
    perms = np.asarray(perms)
    X = np.empty((T + 1, 3))
    X[0] = X0
    for t in range(1, T + 1):
        X[t] = X[t - 1] / 3.0 + (2.0 / 3.0) * (perms[t - 1] - 1.0)
    return X


# --------------------------------------------------------------------------- #
# descriptors
# --------------------------------------------------------------------------- #

KINDS = (
    "antithetic-pair",
    "rotation",
    "aj-base-b",
    "gaffke3",
    "gaffke-d",
    "ccv",
    "rbs",
    "lh",
    "ilh",
    "custom",
    "composed",
)


@dataclass(frozen=True)
class Construction:
    """Catalog descriptor.  ``base`` feeds ilh; ``parts`` and ``op`` feed composed."""

    kind: str
    d: int
    b: int | None = None
    offsets: tuple[int, ...] | None = None
    T: int | None = None
    exchangeable: bool = False
    base: "Construction | None" = None
    parts: tuple["Construction", ...] = field(default_factory=tuple)
    op: str | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        k, d = self.kind, self.d
        if k not in KINDS:
            raise ValidationError(f"unknown construction kind {k!r}")
        if d < 2:
            raise ValidationError("d must be at least 2")
        if k == "antithetic-pair" and d != 2:
            raise ValidationError("antithetic-pair requires d = 2")
        if k == "gaffke3" and d != 3:
            raise ValidationError("gaffke3 requires d = 3")
        if k == "aj-base-b" and (self.b is None or self.b < 1):
            raise ValidationError("aj-base-b requires b >= 1")
        if k == "ccv":
            offs = self.offsets or (1,)
            if min(offs) < 1 or max(offs) > d // 2:
                raise ValidationError(f"ccv offsets must lie in 1..{d // 2}")
            object.__setattr__(self, "offsets", tuple(sorted(set(int(o) for o in offs))))
        if k == "lh" and d > MAX_LH_D:
            raise SizeLimit(f"lh limited to d <= {MAX_LH_D}")
        if k == "ilh":
            if self.T is None or self.T < 1:
                raise ValidationError("ilh requires T >= 1")
            if self.base is not None and self.base.d != d:
                raise ValidationError("ilh base must have the same dimension")
        if k == "composed":
            if self.op not in ("stochastic", "deterministic") or len(self.parts) < 2:
                raise ValidationError("composed needs op in {stochastic, deterministic} and >= 2 parts")
            if any(p.d != d for p in self.parts):
                raise ValidationError("composed parts must share the dimension")
        if k == "custom" and not self.path:
            raise ValidationError("custom requires a segment-set path")

    # ---- serialization -------------------------------------------------- #

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "d": self.d, "exchangeable": self.exchangeable}
        for key in ("b", "offsets", "T", "op", "path"):
            v = getattr(self, key)
            if v is not None:
                out[key] = list(v) if isinstance(v, tuple) else v
        if self.base is not None:
            out["base"] = self.base.to_dict()
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Construction":
        data = dict(data)
        base = data.pop("base", None)
        parts = data.pop("parts", ())
        offsets = data.pop("offsets", None)
        return cls(
            kind=data.pop("kind"),
            d=int(data.pop("d")),
            b=data.pop("b", None),
            offsets=tuple(offsets) if offsets is not None else None,
            T=data.pop("T", None),
            exchangeable=bool(data.pop("exchangeable", False)),
            base=cls.from_dict(base) if base else None,
            parts=tuple(cls.from_dict(p) for p in parts),
            op=data.pop("op", None),
            path=data.pop("path", None),
        )

    @property
    def label(self) -> str:
        bits = [self.kind, f"d={self.d}"]
        if self.b is not None:
            bits.append(f"b={self.b}")
        if self.offsets:
            bits.append("L=" + ",".join(map(str, self.offsets)))
        if self.T is not None:
            bits.append(f"T={self.T}")
        if self.base is not None:
            bits.append(f"base=({self.base.label})")
        if self.exchangeable:
            bits.append("exch")
        return " ".join(bits)

    # ---- properties ------------------------------------------------------ #

    @property
    def v_model(self) -> str:
        """'iid' when the segment set is meant for independent V per coordinate."""
        if self.kind == "lh":
            return "iid"
        if self.kind == "ilh":
            return "iid" if self.base is None else self.base.v_model
        if self.kind == "composed":
            return self.parts[-1].v_model if self.op == "deterministic" else self.parts[0].v_model
        return "common"

    @property
    def is_ctm(self) -> bool:
        k = self.kind
        if k in ("antithetic-pair", "gaffke3", "gaffke-d", "ccv", "rbs"):
            return True
        if k == "aj-base-b":
            return self.b == 2 or self.d == 2
        if k == "ilh":
            return self.base is not None and self.base.is_ctm
        if k == "composed" and self.op == "stochastic":
            return all(p.is_ctm for p in self.parts)
        return False

    # ---- segment sets ---------------------------------------------------- #

    def _raw_segment_set(self) -> SegmentSet | None:
        k, d = self.kind, self.d
        if k == "antithetic-pair":
            return antithetic_pair_segment_set()
        if k == "rotation":
            return rotation_segment_set(d)
        if k == "aj-base-b":
            return aj_segment_set(d, int(self.b))
        if k == "gaffke3":
            return gaffke3_segment_set()
        if k == "ccv":
            return ccv_segment_set(d, self.offsets)
        if k == "lh":
            return lh_segment_set(d)
        if k == "ilh":
            S = lh_segment_set(d) if self.base is None else self.base.segment_set()
            if S is None:
                return None
            Y = lh_segment_set(d)
            steps = self.T if self.base is not None else self.T - 1
            for _ in range(steps):
                S = deterministic_compose(Y, S)
            return S
        if k == "custom":
            return load_segment_set(Path(self.path))
        if k == "composed":
            sets = [p.segment_set() for p in self.parts]
            if any(s is None for s in sets):
                return None
            if self.op == "stochastic":
                return stochastic_compose(*sets)
            S = sets[-1]
            for Y in reversed(sets[:-1]):
                S = deterministic_compose(Y, S)
            return S
        return None  # rbs and gaffke-d mix independent uniforms

    def segment_set(self) -> SegmentSet | None:
        S = self._raw_segment_set()
        if S is None and self.kind == "rbs":
            # same law as the exchangeable circulant construction on C_d({1})
            return exchangeable_segment_set(ccv_segment_set(self.d, (1,)))
        if S is not None and self.exchangeable:
            S = exchangeable_segment_set(S)
        return S

    def exact_blocks(self) -> list[tuple[SegmentSet, str]] | None:
        """Independent coordinate blocks whose product is the construction's law."""
        if self.kind == "gaffke-d":
            d = self.d
            n_pairs = d // 2 if d % 2 == 0 else (d - 3) // 2
            blocks = [(antithetic_pair_segment_set(), "common")] * n_pairs
            if d % 2 == 1:
                blocks.append((gaffke3_segment_set(), "common"))
            if self.exchangeable:
                return None
            return blocks
        S = self.segment_set()
        return None if S is None else [(S, self.v_model)]

    # ---- sampling -------------------------------------------------------- #

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k, d = self.kind, self.d
        if k == "antithetic-pair":
            V = rng.random((n, 1))
            U = np.hstack([V, 1.0 - V])
        elif k == "rotation":
            U = rotation_sampler(d, n, rng)
        elif k == "aj-base-b":
            U = aj_sampler(d, int(self.b), n, rng)
        elif k == "gaffke3":
            U = gaffke3(rng.random(n))
        elif k == "gaffke-d":
            U = gaffke_d_sampler(d, n, rng)
        elif k == "rbs":
            U = rbs_sampler(d, n, rng)
        elif k == "lh":
            U = lh_sampler(d, n, rng)
        elif k == "ilh":
            U = rng.random((n, d)) if self.base is None else self.base.sample(n, rng)
            for _ in range(self.T):
                U = ilh_iterate(U, rng)
        else:
            S = self._raw_segment_set()
            if self.v_model == "iid":
                U = draw_generalized(S, iid_source(d), n, rng).samples
            else:
                U = draw(S, n, rng).samples
        if self.exchangeable:
            U = np.take_along_axis(U, random_permutations(rng, n, d), axis=1)
        return U


def catalog_constructions(d: int, include_exchangeable: bool = False) -> list[Construction]:
    """Every catalog construction available in dimension d."""
    out: list[Construction] = []
    if d == 2:
        out.append(Construction("antithetic-pair", 2))
    out.append(Construction("rotation", d))
    for b in range(1, 6):
        out.append(Construction("aj-base-b", d, b=b))
    if d == 3:
        out.append(Construction("gaffke3", 3))
    out.append(Construction("gaffke-d", d))
    for r in range(1, d // 2 + 1):
        for offs in itertools.combinations(range(1, d // 2 + 1), r):
            out.append(Construction("ccv", d, offsets=offs))
    out.append(Construction("rbs", d))
    if d <= MAX_LH_D:
        out.append(Construction("lh", d))
    out.append(Construction("ilh", d, T=1))
    out.append(Construction("ilh", d, T=2))
    out.append(Construction("ilh", d, T=1, base=Construction("ccv", d, offsets=(1,))))
    if include_exchangeable:
        out.append(Construction("rotation", d, exchangeable=True))
        out.append(Construction("aj-base-b", d, b=2, exchangeable=True))
    return out
