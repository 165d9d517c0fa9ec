"""Multivariate Kendall's tau and Spearman's rho, exact and empirical.

For a uniform vector U and an independent copy W,

    tau = 2^d / (2^(d-1) - 1) * (P(U <= W) - 2^-d)
    rho = 2^d (d+1) / (2^d - (d+1)) * (E[prod U] - 2^-d).

On a segment set with a common V, the event {U <= W} for a fixed pair of
edges is an intersection of d half-planes in (V, V') and its probability is
the area of a convex polygon clipped from the unit square.  With independent
V per coordinate the event factorizes per coordinate instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import LengthMismatch, SizeLimit, UnsupportedDimension
from .segments import SegmentSet, supports
from .streams import as_rng, random_permutations

VERTEX_TOL = 1e-12
DEGENERATE_TOL = 1e-14
PAIR_CHUNK = 400_000

RHO_MIN_TABLE = {
    2: -1.0,
    3: -0.56,
    4: -0.32,
    5: -0.18,
    10: -0.01,
    20: -1.99e-5,
    50: -4.53e-14,
    100: -7.97e-29,
}


def tau_scale(d: int) -> float:
    return 2.0**d / (2.0 ** (d - 1) - 1.0)


def rho_scale(d: int) -> float:
    return 2.0**d * (d + 1) / (2.0**d - (d + 1))


def kendall_tau_min(d: int) -> float:
    if d < 2:
        raise UnsupportedDimension("d must be at least 2")
    return -1.0 / (2.0 ** (d - 1) - 1.0)


def spearman_rho_min(d: int) -> float:
    """Tabulated lower bound; only the listed dimensions are available."""
    if d not in RHO_MIN_TABLE:
        raise UnsupportedDimension(f"no tabulated minimum for d={d}; have {sorted(RHO_MIN_TABLE)}")
    return RHO_MIN_TABLE[d]


# --------------------------------------------------------------------------- #
# polygon clipping
# --------------------------------------------------------------------------- #

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def clip_polygon(poly, a: float, b: float, c: float) -> list[tuple[float, float]]:
    """Clip a convex polygon by the half-plane a x + b y <= c (one pass)."""
    if abs(a) < DEGENERATE_TOL and abs(b) < DEGENERATE_TOL:
        return list(poly) if c >= 0 else []
    out: list[tuple[float, float]] = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        pin, qin = fp <= VERTEX_TOL, fq <= VERTEX_TOL
        if pin != qin:
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        if qin:
            out.append(q)
    return out


def polygon_area(poly) -> float:
    n = len(poly)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def halfplane_area(a, b, c) -> float:
    """Area of {(x, y) in [0,1]^2 : a_l x + b_l y <= c_l for all l}."""
    poly = list(UNIT_SQUARE)
    for al, bl, cl in zip(a, b, c):
        poly = clip_polygon(poly, al, bl, cl)
        if not poly:
            return 0.0
    return polygon_area(poly)


def _clip_batch(xs, ys, cnt, a, b, c):
    """One Sutherland-Hodgman pass for a batch of convex polygons."""
    P, M = xs.shape
    i = np.arange(M)[None, :]
    valid = i < cnt[:, None]
    nxt = np.where(i + 1 < cnt[:, None], i + 1, 0)
    nx = np.take_along_axis(xs, nxt, axis=1)
    ny = np.take_along_axis(ys, nxt, axis=1)
    a, b, c = a[:, None], b[:, None], c[:, None]
    fc = a * xs + b * ys - c
    fn = a * nx + b * ny - c
    cin, nin = fc <= VERTEX_TOL, fn <= VERTEX_TOL
    cross = valid & (cin != nin)
    den = np.where(cross, fc - fn, 1.0)
    t = np.where(cross, fc / den, 0.0)
    ix, iy = xs + t * (nx - xs), ys + t * (ny - ys)
    keep = valid & nin
    ox = np.stack([ix, nx], axis=2).reshape(P, 2 * M)
    oy = np.stack([iy, ny], axis=2).reshape(P, 2 * M)
    mask = np.stack([cross, keep], axis=2).reshape(P, 2 * M)
    order = np.argsort(~mask, axis=1, kind="stable")
    new_cnt = mask.sum(axis=1)
    width = max(int(new_cnt.max(initial=0)), 1)
    order = order[:, :width]
    return (
        np.take_along_axis(ox, order, axis=1),
        np.take_along_axis(oy, order, axis=1),
        new_cnt,
    )


def _batch_area(xs, ys, cnt) -> np.ndarray:
    M = xs.shape[1]
    i = np.arange(M)[None, :]
    valid = i < cnt[:, None]
    nxt = np.where(i + 1 < cnt[:, None], i + 1, 0)
    nx = np.take_along_axis(xs, nxt, axis=1)
    ny = np.take_along_axis(ys, nxt, axis=1)
    s = np.where(valid, xs * ny - nx * ys, 0.0).sum(axis=1)
    return np.where(cnt >= 3, np.abs(s) / 2.0, 0.0)


def halfplane_area_batch(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vectorized :func:`halfplane_area` over rows of (P, h) coefficient arrays."""
    P = a.shape[0]
    xs = np.tile([0.0, 1.0, 1.0, 0.0], (P, 1))
    ys = np.tile([0.0, 0.0, 1.0, 1.0], (P, 1))
    cnt = np.full(P, 4)
    degen = (np.abs(a) < DEGENERATE_TOL) & (np.abs(b) < DEGENERATE_TOL)
    dead = (degen & (c < 0)).any(axis=1)
    a = np.where(degen, 0.0, a)
    b = np.where(degen, 0.0, b)
    c = np.where(degen, 1.0, c)
    for l in range(a.shape[1]):
        xs, ys, cnt = _clip_batch(xs, ys, cnt, a[:, l], b[:, l], c[:, l])
    out = _batch_area(xs, ys, cnt)
    out[dead] = 0.0
    return out


# --------------------------------------------------------------------------- #
# P(U <= W)
# --------------------------------------------------------------------------- #


def prob_le_common(S: SegmentSet, chunk: int = PAIR_CHUNK) -> float:
    """P(U <= W) for independent common-V draws U, W from ``S``."""
    supports(S)  # raises DegenerateEdge
    XI, XJ = S.endpoints()
    D = (XI - XJ).T  # m x d
    base = XJ.T
    lo, hi = np.minimum(XI, XJ).T, np.maximum(XI, XJ).T
    m, d = D.shape
    rows = max(1, chunk // m)
    total = 0.0
    for k0 in range(0, m, rows):
        k1 = min(m, k0 + rows)
        # pair (k, k'): U on edge k, W on edge k'
        all_in = hi[k0:k1, None, :] <= lo[None, :, :]
        all_out = lo[k0:k1, None, :] >= hi[None, :, :]
        alive = ~all_out.any(axis=2)
        sure = alive & all_in.all(axis=2)
        total += float(sure.sum())
        work = alive & ~sure
        kk, kp = np.nonzero(work)
        if kk.size == 0:
            continue
        kk = kk + k0
        a = D[kk]
        b = -D[kp]
        c = base[kp] - base[kk]
        skip = all_in[kk - k0, kp]
        a = np.where(skip, 0.0, a)
        b = np.where(skip, 0.0, b)
        c = np.where(skip, 1.0, c)
        total += float(halfplane_area_batch(a, b, c).sum())
    return total / (m * m)


def interval_prob_le(a1, b1, a2, b2):
    """P(A <= B) for independent A ~ U[a1, b1], B ~ U[a2, b2] (vectorized)."""
    w1 = b1 - a1

    def G(s):  # integral of the CDF of A from -inf to s
        return np.where(
            s <= a1,
            0.0,
            np.where(s >= b1, w1 / 2.0 + (s - b1), (s - a1) ** 2 / (2.0 * w1)),
        )

    return (G(b2) - G(a2)) / (b2 - a2)


def prob_le_iid(S: SegmentSet, chunk: int = PAIR_CHUNK) -> float:
    """P(U <= W) when every coordinate has its own independent V."""
    lo, hi = supports(S)
    lo, hi = lo.T, hi.T
    m = lo.shape[0]
    rows = max(1, chunk // m)
    total = 0.0
    for k0 in range(0, m, rows):
        k1 = min(m, k0 + rows)
        p = interval_prob_le(lo[k0:k1, None, :], hi[k0:k1, None, :], lo[None, :, :], hi[None, :, :])
        total += float(p.prod(axis=2).sum())
    return total / (m * m)


# --------------------------------------------------------------------------- #
# E[prod U]
# --------------------------------------------------------------------------- #


def edge_polynomials(S: SegmentSet) -> np.ndarray:
    """Coefficients c[k, m] of t^m in prod_l (x_{l,i(k)} t + x_{l,j(k)})."""
    XI, XJ = S.endpoints()
    m = S.n_edges
    C = np.zeros((m, S.d + 1))
    C[:, 0] = 1.0
    for l in range(S.d):
        nxt = C * XJ[l][:, None]
        nxt[:, 1:] += C[:, :-1] * XI[l][:, None]
        C = nxt
    return C


def xi_star(S: SegmentSet) -> float:
    """(1/|E|) sum_k prod_l (x_{l,i(k)} + x_{l,j(k)})."""
    XI, XJ = S.endpoints()
    return float(np.prod(XI + XJ, axis=0).mean())


def beta_weights(d: int) -> np.ndarray:
    """B(m+1, d-m+1) = E[V^m (1-V)^(d-m)] for m = 0..d."""
    m = np.arange(d + 1)
    return np.exp(special.betaln(m + 1, d - m + 1))


def expected_product(S: SegmentSet, v_model: str = "common") -> float:
    if v_model == "iid":
        return xi_star(S) / 2.0**S.d
    c = edge_polynomials(S).mean(axis=0)
    return float(c @ beta_weights(S.d))


# --------------------------------------------------------------------------- #
# exact measures
# --------------------------------------------------------------------------- #


def _check_model(v_model: str) -> None:
    if v_model not in ("common", "iid"):
        raise ValueError(f"v_model must be 'common' or 'iid', got {v_model!r}")


def kendall_tau_exact(S: SegmentSet, v_model: str = "common") -> float:
    _check_model(v_model)
    p = prob_le_common(S) if v_model == "common" else prob_le_iid(S)
    return tau_scale(S.d) * (p - 2.0**-S.d)


def spearman_rho_exact(S: SegmentSet, v_model: str = "common") -> float:
    """Spearman's rho from per-edge polynomial coefficients.

    Common V: rho = sum_m c_m rho_m + K 2^-d (xi* - 1) with
    rho_m = K (B(m+1, d-m+1) - 2^-d) and K the rho scale.  Independent V:
    rho = K 2^-d (xi* - 1).
    """
    _check_model(v_model)
    d = S.d
    K = rho_scale(d)
    xs = xi_star(S)
    iid_part = K * 2.0**-d * (xs - 1.0)
    if v_model == "iid":
        return iid_part
    c = edge_polynomials(S).mean(axis=0)
    rho_m = K * (beta_weights(d) - 2.0**-d)
    return float(c @ rho_m + iid_part)


@dataclass
class ConcordanceReport:
    d: int
    tau: float
    tau_min: float
    rho: float
    rho_min: float | None
    xi_star: float | None
    method: str
    tau_se: float = 0.0
    rho_se: float = 0.0
    n: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def exact_from_blocks(blocks: list[tuple[SegmentSet, str]]) -> ConcordanceReport:
    """Exact measures for independent blocks of coordinates (product laws)."""
    d = sum(S.d for S, _ in blocks)
    P, E, X = 1.0, 1.0, 1.0
    models = set()
    for S, model in blocks:
        _check_model(model)
        models.add(model)
        P *= prob_le_common(S) if model == "common" else prob_le_iid(S)
        E *= expected_product(S, model)
        X *= xi_star(S)
    tau = tau_scale(d) * (P - 2.0**-d)
    rho = rho_scale(d) * (E - 2.0**-d)
    method = "exact-iid" if models == {"iid"} else "exact-polygon"
    return ConcordanceReport(
        d=d,
        tau=float(tau),
        tau_min=kendall_tau_min(d),
        rho=float(rho),
        rho_min=RHO_MIN_TABLE.get(d),
        xi_star=float(X),
        method=method,
    )


def exact_report(S: SegmentSet, v_model: str = "common") -> ConcordanceReport:
    return exact_from_blocks([(S, v_model)])


def construction_report(con) -> ConcordanceReport:
    """Exact report for a catalog :class:`~segsample.catalog.Construction`.

    Latin hypercube iterations on iid uniforms use the closed forms; mixtures
    of independent blocks multiply block-wise probabilities.
    """
    if con.kind == "ilh" and con.base is None and not con.exchangeable:
        m = ilh_tau_rho(con.d, con.T)
        return ConcordanceReport(
            d=con.d,
            tau=m.tau,
            tau_min=kendall_tau_min(con.d),
            rho=m.rho_iid,
            rho_min=RHO_MIN_TABLE.get(con.d),
            xi_star=m.xi_star,
            method="exact-iid",
        )
    blocks = con.exact_blocks()
    if blocks is None:
        raise ValueError(f"no exact representation for {con.label}; use empirical estimates")
    return exact_from_blocks(blocks)


# --------------------------------------------------------------------------- #
# iterated Latin hypercube closed forms
# --------------------------------------------------------------------------- #


class IlhMeasures(NamedTuple):
    tau: float
    xi_star: float
    rho_iid: float


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def ilh_xi_star_exact(d: int, T: int) -> Fraction:
    """xi*_T as an exact fraction via the multinomial expansion.

    Expanding prod_l (sum_t 2 pi_t(l) / d^(T-t+1) + 1/d^T) assigns every
    coordinate to one term; for m coordinates assigned to permutation t the
    expected product is the mean over m-subsets of {0..d-1} of the product
    of their entries.
    """
    mean_subset = []
    for m in range(d + 1):
        tot = sum(math.prod(c) for c in itertools.combinations(range(d), m))
        mean_subset.append(Fraction(tot, math.comb(d, m)))
    out = Fraction(0)
    for ms in _compositions(d, T + 1):
        m0, rest = ms[0], ms[1:]
        coef = Fraction(math.factorial(d))
        for mm in ms:
            coef /= math.factorial(mm)
        term = coef * Fraction(1, d**T) ** m0
        for t, mt in enumerate(rest, start=1):
            scale = Fraction(2, d ** (T - t + 1))
            term *= scale**mt * mean_subset[mt]
        out += term
    return out


def ilh_tau_rho(d: int, T: int) -> IlhMeasures:
    """(tau, xi*_T, rho) for T Latin hypercube steps applied to iid uniforms."""
    if d < 2 or T < 1:
        raise ValueError("need d >= 2 and T >= 1")
    if d > 10 or T > 5:
        raise SizeLimit("direct evaluation covers d <= 10 and T <= 5; use ilh_xi_star_mc beyond")
    tau = (1.0 / (2.0 ** (d - 1) - 1.0)) * (1.0 / math.factorial(d) ** T - 1.0)
    xs = float(ilh_xi_star_exact(d, T))
    rho = (1.0 - xs) * (-(d + 1) / (2.0**d - (d + 1)))
    return IlhMeasures(float(tau), xs, float(rho))


def ilh_xi_star_mc(d: int, T: int, n: int = 10**5, seed=0) -> tuple[float, float]:
    """Monte Carlo estimate (and standard error) of xi*_T by sampling permutations."""
    rng = as_rng(seed, "ilh-xi")
    acc = np.full((n, d), 1.0 / d**T)
    for t in range(1, T + 1):
        acc = acc + 2.0 * random_permutations(rng, n, d) / float(d) ** (T - t + 1)
    prod = acc.prod(axis=1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n))


def ilh_xi_star_bound(d: int) -> float:
    return 2.0 * ((3.0 * d - 1.0) / (4.0 * d)) ** d


# --------------------------------------------------------------------------- #
# empirical
# --------------------------------------------------------------------------- #


def _samples(batch) -> np.ndarray:
    return np.asarray(getattr(batch, "samples", batch), dtype=float)


def empirical_tau(batch1, batch2) -> tuple[float, float]:
    U, W = _samples(batch1), _samples(batch2)
    if U.shape != W.shape:
        raise LengthMismatch(f"batches differ in shape: {U.shape} vs {W.shape}")
    n, d = U.shape
    hit = np.all(U <= W, axis=1)
    p = hit.mean()
    K = tau_scale(d)
    return float(K * (p - 2.0**-d)), float(K * math.sqrt(p * (1.0 - p) / n))


def empirical_rho(batch) -> tuple[float, float]:
    U = _samples(batch)
    n, d = U.shape
    if n < 2:
        raise LengthMismatch("need at least two draws")
    prod = U.prod(axis=1)
    K = rho_scale(d)
    return float(K * (prod.mean() - 2.0**-d)), float(K * prod.std(ddof=1) / math.sqrt(n))


def empirical_report(sampler, d: int, n: int, seed=0) -> ConcordanceReport:
    """Empirical tau/rho from ``sampler(n, rng)``; tau pairs two independent batches."""
    rng = as_rng(seed, "measure")
    U = sampler(n, rng)
    W = sampler(n, rng)
    tau, tse = empirical_tau(U, W)
    rho, rse = empirical_rho(U)
    return ConcordanceReport(
        d=d,
        tau=tau,
        tau_min=kendall_tau_min(d),
        rho=rho,
        rho_min=RHO_MIN_TABLE.get(d),
        xi_star=None,
        method="empirical",
        tau_se=tse,
        rho_se=rse,
        n=n,
    )
