"""Monte Carlo integration of the Wang-Sloan product family."""

from __future__ import annotations

import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..catalog import rbs_sampler
from ..errors import BadData, ValidationError
from ..streams import make_rng, random_permutations

SCHEMES = ("mc-iid", "glh-ccv", "glh-iid", "external-point-file")
INTEGRANDS = ("wang-sloan", "product2", "constant")
CHUNK_VALUES = 4_000_000


def wang_sloan(x, a: float, tau: float) -> np.ndarray:
    """prod_i (1 + a tau^i (x_i - 1/2)) over the last axis, i = 1..p."""
    x = np.asarray(x, dtype=float)
    w = a * tau ** np.arange(1, x.shape[-1] + 1)
    return np.prod(1.0 + w * (x - 0.5), axis=-1)


@dataclass
class IntegrationConfig:
    integrand: str = "wang-sloan"
    a: float = 0.1
    tau: float = 0.1
    p: int = 20
    n_points: list[int] = field(default_factory=lambda: [10, 100, 1000])
    replications: int = 10_000
    schemes: list[str] = field(default_factory=lambda: ["mc-iid", "glh-ccv"])
    point_file: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValidationError("p must be at least 1")
        if self.replications < 2:
            raise ValidationError("need at least two replications")
        if self.integrand not in INTEGRANDS:
            raise ValidationError(f"unknown integrand {self.integrand!r}; choose from {INTEGRANDS}")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValidationError(f"unknown schemes {bad}; choose from {SCHEMES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IntegrationRow:
    scheme: str
    n_points: int
    mse: float
    mse_se: float
    analytic_mse: float | None
    mean_time: float


def _integrand(cfg: IntegrationConfig):
    """Return (f, exact integral)."""
    if cfg.integrand == "wang-sloan":
        return (lambda x: wang_sloan(x, cfg.a, cfg.tau)), 1.0
    if cfg.integrand == "product2":
        return (lambda x: x[..., 0] * x[..., 1]), 0.25
    return (lambda x: np.ones(x.shape[:-1])), 1.0


def _points(scheme: str, reps: int, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """(reps, n, p) point sets."""
    if scheme == "mc-iid":
        return rng.random((reps, n, p))
    # each coordinate is one Latin hypercube column of length n
    perms = random_permutations(rng, reps * p, n)
    if scheme == "glh-ccv":
        V = rbs_sampler(n, reps * p, rng)
    else:
        V = rng.random((reps * p, n))
    U = (perms + V) / n
    return U.reshape(reps, p, n).transpose(0, 2, 1)


def analytic_mse(scheme: str, n: int, a: float, tau: float, p: int) -> float | None:
    """Exact MSE of the Wang-Sloan estimator for iid points and constant-sum columns.

    Each factor has variance c_i = a^2 tau^(2i) / 12.  For exchangeable
    columns with constant sum, two distinct points in the same coordinate
    have covariance -c_i/(n-1).
    """
    c = a**2 * tau ** (2.0 * np.arange(1, p + 1)) / 12.0
    full = float(np.prod(1.0 + c))
    if scheme == "mc-iid":
        return (full - 1.0) / n
    if scheme == "glh-ccv" and n >= 2:
        return full / n + (n - 1) / n * float(np.prod(1.0 - c / (n - 1))) - 1.0
    return None


def load_points(path: str | Path, p: int) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            X = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise BadData(f"cannot read point file {path}: {exc}") from exc
    if X.size == 0 or X.shape[1] < p:
        raise BadData(f"point file needs at least {p} columns")
    if np.any((X < 0) | (X > 1)):
        raise BadData("points must lie in [0, 1]")
    return X[:, :p]


def mc_integrate(cfg: IntegrationConfig) -> list[IntegrationRow]:
    """MSE against the exact integral, per scheme and number of points."""
    f, exact = _integrand(cfg)
    rows: list[IntegrationRow] = []
    for s_idx, scheme in enumerate(cfg.schemes):
        if scheme == "external-point-file":
            if not cfg.point_file:
                raise ValidationError("external-point-file scheme needs point_file")
            X = load_points(cfg.point_file, cfg.p)
            for n in cfg.n_points:
                t0 = time.perf_counter()
                est = float(f(X[:n]).mean())
                rows.append(IntegrationRow(scheme, n, (est - exact) ** 2, 0.0, None, time.perf_counter() - t0))
            continue
        for n in cfg.n_points:
            rng = make_rng(cfg.seed, s_idx, f"integrate:{scheme}:{n}")
            per = max(1, CHUNK_VALUES // (n * cfg.p))
            errs = np.empty(cfg.replications)
            t0 = time.perf_counter()
            for r0 in range(0, cfg.replications, per):
                r1 = min(cfg.replications, r0 + per)
                X = _points(scheme, r1 - r0, n, cfg.p, rng)
                errs[r0:r1] = f(X).mean(axis=1) - exact
            elapsed = time.perf_counter() - t0
            sq = errs**2
            am = analytic_mse(scheme, n, cfg.a, cfg.tau, cfg.p) if cfg.integrand == "wang-sloan" else None
            rows.append(
                IntegrationRow(
                    scheme,
                    n,
                    float(sq.mean()),
                    float(sq.std(ddof=1) / np.sqrt(sq.size)),
                    am,
                    elapsed / cfg.replications,
                )
            )
    return rows
