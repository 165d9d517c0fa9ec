"""Convex solvers for marginal uniformity and constant-sum coordinate matrices.

Every problem handled here has the same shape: minimize

    f(z) = -(1/|E|) * sum_e w_e * log(p_e . z + q_e)

over an affine set ``A z = r`` while keeping a list of ordering gaps
``g_j(z) = G_j . z + h_j`` nonnegative.  The log terms keep connected values
apart on their own; gaps between values that share no edge are handled with a
log barrier that is driven to zero, after which gaps that closed are frozen as
equalities and the point is polished with plain Newton steps.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .errors import DomainViolation, InconsistentConstraints, Infeasible, MaxIterations
from .segments import (
    CoordinateProjection,
    SegmentSet,
    UniformityReport,
    build_segment_set,
    project_coordinate,
    uniformity_residuals,
)

log = logging.getLogger(__name__)

GRAD_TOL = 1e-10
MAX_ITER = 500
ACTIVE_TOL = 1e-7


# --------------------------------------------------------------------------- #
# objective on one projected coordinate
# --------------------------------------------------------------------------- #


def psi_value_grad(P: CoordinateProjection, a_interior) -> tuple[float, np.ndarray]:
    """Objective Psi_l and its derivative with respect to the interior values.

    ``a_interior`` holds a_{l,2}, ..., a_{l,n_l-1}; the end values are fixed to 0
    and 1.  The gradient is the plain derivative of Psi_l, so it vanishes at the
    uniformity solution.
    """
    a_interior = np.asarray(a_interior, dtype=float)
    if a_interior.size != max(P.n_values - 2, 0):
        raise ValueError(f"expected {max(P.n_values - 2, 0)} interior values, got {a_interior.size}")
    a = np.concatenate(([0.0], a_interior, [1.0])) if P.n_values >= 2 else np.zeros(1)
    if P.pairs.size == 0:
        return 0.0, np.zeros(a_interior.size)
    lo, hi = P.pairs[:, 0], P.pairs[:, 1]
    diff = a[hi] - a[lo]
    gap = np.abs(diff)
    if np.any(gap <= 1e-15):
        k = int(np.argmin(gap))
        raise DomainViolation(
            f"connected values {lo[k] + 1} and {hi[k] + 1} coincide on coordinate {P.l}"
        )
    w = P.counts / P.n_edges
    value = float(-np.sum(w * np.log(gap)))
    # d/da_hi of -w log|a_hi - a_lo| = -w / (a_hi - a_lo), and the opposite for a_lo
    t = w / diff
    grad = np.zeros(a.size)
    np.add.at(grad, hi, -t)
    np.add.at(grad, lo, t)
    return value, grad[1:-1]


def kl_divergence(S: SegmentSet, l: int) -> float:
    """Kullback-Leibler value of coordinate l summed edge by edge.

    Independent of the projection code: (1/|E|) * sum_k -log(beta_k - alpha_k).
    """
    if not 1 <= l <= S.d:
        raise ValueError(f"coordinate {l} outside 1..{S.d}")
    XI, XJ = S.endpoints()
    gap = np.abs(XI[l - 1] - XJ[l - 1])
    if np.any(gap <= 1e-12):
        raise DomainViolation(f"degenerate edge on coordinate {l}")
    return float(-np.log(gap).sum() / S.n_edges)


# --------------------------------------------------------------------------- #
# generic core
# --------------------------------------------------------------------------- #


@dataclass
class _Core:
    """Affine log objective with affine equalities and ordering gaps."""

    P: np.ndarray  # (m, nz) log-argument coefficients
    q: np.ndarray  # (m,)
    w: np.ndarray  # (m,) weights, already divided by |E|
    G: np.ndarray  # (g, nz) ordering gaps
    h: np.ndarray  # (g,)
    A: np.ndarray  # (c, nz) equalities
    r: np.ndarray  # (c,)

    @property
    def nz(self) -> int:
        return self.P.shape[1]

    def value(self, z: np.ndarray) -> float:
        s = self.P @ z + self.q
        if np.any(s <= 0):
            return np.inf
        return float(-np.sum(self.w * np.log(s)))

    def grad_hess(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = self.P @ z + self.q
        g = -(self.P.T @ (self.w / s))
        H = (self.P.T * (self.w / s**2)) @ self.P
        return g, H


@dataclass
class CoreResult:
    z: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    active: list[int]


def _newton_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        c = linalg.cho_factor(H, check_finite=False)
        return -linalg.cho_solve(c, g, check_finite=False)
    except linalg.LinAlgError:
        return -np.linalg.lstsq(H, g, rcond=None)[0]


def _feasible_point(core: _Core, z_init: np.ndarray) -> np.ndarray:
    """Strictly ordered point of the affine set, or raise."""
    A, r = core.A, core.r
    if A.shape[0] == 0:
        z = z_init
    else:
        sol, *_ = np.linalg.lstsq(A, r, rcond=None)
        if np.linalg.norm(A @ sol - r, np.inf) > 1e-9:
            raise InconsistentConstraints(
                f"vertex-sum system has no solution (residual {np.linalg.norm(A @ sol - r, np.inf):.3g})"
            )
        z = z_init - np.linalg.pinv(A) @ (A @ z_init - r)
    if core.G.shape[0] == 0 or np.min(core.G @ z + core.h) > 1e-9:
        if core.value(z) < np.inf:
            return z
    # maximize the smallest ordering gap over the affine set
    nz = core.nz
    c = np.zeros(nz + 1)
    c[-1] = -1.0
    G_ub = np.hstack([-core.G, np.ones((core.G.shape[0], 1))])
    A_eq = np.hstack([A, np.zeros((A.shape[0], 1))]) if A.shape[0] else None
    res = optimize.linprog(
        c,
        A_ub=G_ub,
        b_ub=core.h,
        A_eq=A_eq,
        b_eq=r if A.shape[0] else None,
        bounds=[(None, None)] * nz + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise Infeasible("no strictly ordered point satisfies the vertex-sum constraints")
    z = res.x[:-1]
    if core.value(z) == np.inf:
        raise Infeasible("the constraints force two connected values to coincide")
    return z


def _solve_core(core: _Core, z_init: np.ndarray, max_iter: int = MAX_ITER) -> CoreResult:
    nz = core.nz
    if nz == 0:
        if core.A.shape[0] and np.linalg.norm(core.r, np.inf) > 1e-9:
            raise InconsistentConstraints("pinned values violate the vertex sums")
        v = core.value(np.zeros(0))
        if v == np.inf:
            raise Infeasible("a connected pair of values coincides")
        return CoreResult(np.zeros(0), v, 0.0, 0, [])

    z = _feasible_point(core, z_init)
    N = linalg.null_space(core.A) if core.A.shape[0] else np.eye(nz)
    iters = 0

    def gaps(z):
        return core.G @ z + core.h

    # barrier phase: only needed when there are ordering gaps
    if N.shape[1] and core.G.shape[0]:
        mu = 1.0
        while True:
            for _ in range(max_iter):
                iters += 1
                gz = gaps(z)
                g, H = core.grad_hess(z)
                g = g - mu * (core.G.T @ (1.0 / gz))
                H = H + mu * (core.G.T * (1.0 / gz**2)) @ core.G
                gN, HN = N.T @ g, N.T @ H @ N
                dw = _newton_direction(HN, gN)
                dz = N @ dw
                dec = float(-gN @ dw)
                if dec / 2 <= 1e-3 * mu:
                    break

                def phi(zz):
                    gg = gaps(zz)
                    if np.any(gg <= 0):
                        return np.inf
                    return core.value(zz) - mu * np.sum(np.log(gg))

                f0, t = phi(z), 1.0
                while t > 1e-20:
                    if phi(z + t * dz) <= f0 - 0.25 * t * dec:
                        break
                    t *= 0.5
                else:
                    break
                z = z + t * dz
            if mu < 1e-11:
                break
            mu *= 0.1

    # polish phase: freeze closed gaps, then plain Newton on the reduced set
    active: list[int] = []
    for _round in range(10):
        gz = gaps(z) if core.G.shape[0] else np.zeros(0)
        active = sorted(set(active) | set(np.flatnonzero(gz < ACTIVE_TOL).tolist()))
        A2 = np.vstack([core.A, core.G[active]]) if active else core.A
        r2 = np.concatenate([core.r, -core.h[active]]) if active else core.r
        if A2.shape[0]:
            z = z - np.linalg.pinv(A2) @ (A2 @ z - r2)
            N2 = linalg.null_space(A2)
        else:
            N2 = np.eye(nz)
        gn = 0.0
        for _ in range(max_iter):
            g, H = core.grad_hess(z)
            gN = N2.T @ g
            gn = float(np.max(np.abs(gN))) if gN.size else 0.0
            if gn <= GRAD_TOL:
                break
            iters += 1
            dz = N2 @ _newton_direction(N2.T @ H @ N2, gN)
            f0, t = core.value(z), 1.0
            inactive = np.setdiff1d(np.arange(core.G.shape[0]), active)
            while t > 1e-20:
                zt = z + t * dz
                ok = not inactive.size or np.all(gaps(zt)[inactive] > 0)
                if ok and core.value(zt) <= f0 - 1e-4 * t * float(-gN @ (N2.T @ dz)) + 1e-15:
                    break
                t *= 0.5
            else:
                break
            z = z + t * dz
        else:
            raise MaxIterations(f"projected gradient {gn:.3g} after {max_iter} iterations")
        if gn > GRAD_TOL:
            raise MaxIterations(f"line search stalled with projected gradient {gn:.3g}")
        # release frozen gaps whose multipliers have the wrong sign
        if not active:
            break
        g, _ = core.grad_hess(z)
        lam = np.linalg.lstsq(A2.T, g, rcond=None)[0][core.A.shape[0]:]
        wrong = [a for a, m in zip(active, lam) if m < -1e-8]
        if not wrong:
            break
        active = [a for a in active if a not in wrong]
        log.debug("releasing %d frozen gaps", len(wrong))
    return CoreResult(z, core.value(z), gn, iters, active)


# --------------------------------------------------------------------------- #
# problems built from segment sets
# --------------------------------------------------------------------------- #


def _rows(rows: list[np.ndarray], nz: int) -> np.ndarray:
    return np.array(rows) if rows and nz else np.zeros((len(rows), nz))


@dataclass
class UniformityProblem:
    """Structure of a segment set turned into optimization variables.

    Vertex k on coordinate l takes the value ``a[l][level]``; the lowest and the
    highest value of each coordinate are pinned to 0 and 1 and the rest are free.
    With ``constant_sum`` one equality row per vertex asks for sum_l x_{l,k} = d/2.
    """

    segments: SegmentSet
    projections: list[CoordinateProjection]
    constant_sum: bool = False

    @classmethod
    def from_segments(cls, S: SegmentSet, constant_sum: bool = False) -> "UniformityProblem":
        return cls(S, [project_coordinate(S, l) for l in range(1, S.d + 1)], constant_sum)

    def _pinned(self, l: int, m: int) -> float:
        return 0.0 if m == 0 else 1.0

    def core(self, coords: list[int] | None = None) -> tuple[_Core, np.ndarray]:
        coords = list(range(len(self.projections))) if coords is None else coords
        off, k = {}, 0
        for l in coords:
            off[l] = k
            k += max(self.projections[l].n_values - 2, 0)
        nz = k

        def var(l, m):
            nv = self.projections[l].n_values
            return None if m in (0, nv - 1) else off[l] + m - 1

        Prow, q, w, Grow, h = [], [], [], [], []
        z0 = np.zeros(nz)
        for l in coords:
            P = self.projections[l]
            nv = P.n_values
            if P.self_loops:
                raise Infeasible(
                    f"edge {P.self_loops[0]} has coinciding endpoints on coordinate {P.l}"
                )
            for m in range(1, nv - 1):
                z0[var(l, m)] = m / (nv - 1)
            for (lo, hi), c in zip(P.pairs, P.counts):
                row = np.zeros(nz)
                const = 0.0
                for mm, sgn in ((hi, 1.0), (lo, -1.0)):
                    v = var(l, mm)
                    if v is None:
                        const += sgn * self._pinned(l, mm)
                    else:
                        row[v] += sgn
                Prow.append(row)
                q.append(const)
                w.append(c / P.n_edges)
            for m in range(nv - 1):
                row = np.zeros(nz)
                const = 0.0
                for mm, sgn in ((m + 1, 1.0), (m, -1.0)):
                    v = var(l, mm)
                    if v is None:
                        const += sgn * self._pinned(l, mm)
                    else:
                        row[v] += sgn
                Grow.append(row)
                h.append(const)
        A = np.zeros((0, nz))
        r = np.zeros(0)
        if self.constant_sum:
            S = self.segments
            A = np.zeros((S.n, nz))
            r = np.full(S.n, S.d / 2.0)
            for l in coords:
                P = self.projections[l]
                for vtx in range(S.n):
                    m = int(P.level[vtx])
                    v = var(l, m)
                    if v is None:
                        r[vtx] -= self._pinned(l, m) if P.n_values > 1 else 0.0
                    else:
                        A[vtx, v] += 1.0
        core = _Core(
            P=_rows(Prow, nz),
            q=np.array(q),
            w=np.array(w),
            G=_rows(Grow, nz),
            h=np.array(h),
            A=A,
            r=r,
        )
        return core, z0

    def coordinates(self, values: list[np.ndarray]) -> np.ndarray:
        return np.array([v[P.level] for v, P in zip(values, self.projections)])

    def values_from(self, z: np.ndarray, coords: list[int]) -> list[np.ndarray]:
        out, k = [], 0
        for l in coords:
            nv = self.projections[l].n_values
            inner = z[k : k + max(nv - 2, 0)]
            k += max(nv - 2, 0)
            out.append(np.concatenate(([0.0], inner, [1.0])) if nv >= 2 else np.zeros(1))
        return out


@dataclass
class SolveResult:
    segments: SegmentSet
    objective: float
    grad_norm: float
    iterations: int
    report: UniformityReport

    @property
    def X(self) -> np.ndarray:
        return self.segments.X


def _finish(problem: UniformityProblem, values: list[np.ndarray], objective, gn, iters) -> SolveResult:
    X = problem.coordinates(values)
    S = build_segment_set(X, problem.segments.edges)
    return SolveResult(S, objective, gn, iters, uniformity_residuals(S))


def solve_standard_uniform(problem: UniformityProblem) -> SolveResult:
    """Coordinate matrix with uniform marginals on the given graph structure."""
    if problem.constant_sum:
        raise ValueError("use solve_strict_ctm for problems with vertex-sum rows")
    values, total, gmax, iters = [], 0.0, 0.0, 0
    for l in range(len(problem.projections)):
        core, z0 = problem.core([l])
        res = _solve_core(core, z0)
        values.extend(problem.values_from(res.z, [l]))
        total += res.value
        gmax = max(gmax, res.grad_norm)
        iters += res.iterations
    return _finish(problem, values, total, gmax, iters)


def solve_strict_ctm(problem: UniformityProblem) -> SolveResult:
    """Coordinate matrix with uniform marginals whose vertices all sum to d/2."""
    if not problem.constant_sum:
        problem = UniformityProblem(problem.segments, problem.projections, True)
    coords = list(range(len(problem.projections)))
    core, z0 = problem.core(coords)
    res = _solve_core(core, z0)
    values = problem.values_from(res.z, coords)
    out = _finish(problem, values, res.value, res.grad_norm, res.iterations)
    if out.report.max_sum_residual() > 1e-10:
        raise Infeasible(f"vertex sums off by {out.report.max_sum_residual():.3g}")
    return out


# --------------------------------------------------------------------------- #
# circulant graphs
# --------------------------------------------------------------------------- #


def circulant_edges(d: int, offsets) -> list[tuple[int, int]]:
    """Edges (i, j), 1-based, i < j, with j - i or d - (j - i) in ``offsets``."""
    L = set(int(o) for o in offsets)
    return [
        (i, j)
        for i, j in itertools.combinations(range(1, d + 1), 2)
        if (j - i) in L or (d - (j - i)) in L
    ]


def _check_offsets(d: int, offsets) -> list[int]:
    offs = sorted(set(int(o) for o in offsets))
    if d < 2:
        raise ValueError("d must be at least 2")
    if not offs or offs[0] < 1 or offs[-1] > d // 2:
        raise ValueError(f"offsets must be a nonempty subset of 1..{d // 2}, got {offsets}")
    return offs


def circulant_objective(x: np.ndarray, d: int, offsets) -> float:
    """-(1/(2|E|)) * sum over circulant edges of log|x_i - x_j|."""
    E = circulant_edges(d, offsets)
    gaps = np.array([abs(x[j - 1] - x[i - 1]) for i, j in E])
    if np.any(gaps <= 0):
        return np.inf
    return float(-np.log(gaps).sum() / (2 * len(E)))


def solve_circulant(d: int, offsets) -> np.ndarray:
    """Ascending first row x_1 of the circulant coordinate matrix.

    Ties between values whose vertices share no edge are allowed, so the result
    may sit on the boundary of the ordering constraints (e.g. (0, 0, 1, 1)).
    """
    offs = _check_offsets(d, offsets)
    if offs == [1] or d == 2:
        return np.linspace(0.0, 1.0, d)
    nz = d - 2
    E = circulant_edges(d, offs)

    def term(idx):  # coefficient row and constant for x_idx (1-based)
        row = np.zeros(nz)
        if idx == 1:
            return row, 0.0
        if idx == d:
            return row, 1.0
        row[idx - 2] = 1.0
        return row, 0.0

    Prow, q = [], []
    for i, j in E:
        rj, cj = term(j)
        ri, ci = term(i)
        Prow.append(rj - ri)
        q.append(cj - ci)
    Grow, h = [], []
    for i in range(1, d):
        rj, cj = term(i + 1)
        ri, ci = term(i)
        Grow.append(rj - ri)
        h.append(cj - ci)
    core = _Core(
        P=np.array(Prow),
        q=np.array(q),
        w=np.full(len(E), 1.0 / (2 * len(E))),
        G=np.array(Grow),
        h=np.array(h),
        A=np.ones((1, nz)),
        r=np.array([d / 2.0 - 1.0]),
    )
    res = _solve_core(core, np.linspace(0.0, 1.0, d)[1:-1])
    x = np.concatenate(([0.0], res.z, [1.0]))
    # values frozen against a neighbour are snapped onto it exactly
    x[np.abs(x) < ACTIVE_TOL] = 0.0
    x[np.abs(x - 1.0) < ACTIVE_TOL] = 1.0
    if abs(x.sum() - d / 2.0) > 1e-10:
        raise Infeasible(f"circulant row sums to {x.sum()}, expected {d / 2}")
    return x
