"""Antithetically coupled Markov chains: probit Gibbs and pump-failure MH-within-Gibbs.

Every scalar uniform that a chain consumes is shared across the d coupled
chains through one antithetic d-vector.  Within an iteration the uniforms
are allocated in update order: first the latent/rate variables in data
order, then the remaining parameters.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from ..catalog import rbs_sampler
from ..errors import BadData, SingularDesign, ValidationError
from ..streams import make_rng

# (n, rng) -> (n, d) antithetic uniform vectors
Coupler = Callable[[int, np.random.Generator], np.ndarray]


@dataclass
class McmcConfig:
    model: str = "probit"
    data: str | None = None
    d: int = 2
    iterations: int = 5000
    burn_in: int = 500
    replications: int = 200
    antithetic_acceptance: bool = False
    proposal_sd: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model not in ("probit", "pumps"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.d < 2:
            raise ValidationError("coupling width d must be at least 2")
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError("need iterations > burn_in >= 0")
        if self.replications < 1:
            raise ValidationError("need at least one replication")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VarianceRatioResult:
    """Asymptotic-variance ratio (antithetic / iid) per parameter.

    ``ratio`` is mean antithetic variance over mean iid variance across
    replications; ``rep_mean``/``rep_min``/``rep_max`` summarize the
    per-replication ratios.  Posterior means of the first coupled chain and
    of the iid chains (with standard errors over replications) support the
    marginal-correctness check.
    """

    params: list[str]
    ratio: np.ndarray
    ratio_se: np.ndarray
    rep_mean: np.ndarray
    rep_min: np.ndarray
    rep_max: np.ndarray
    coupled_mean: np.ndarray
    coupled_se: np.ndarray
    iid_mean: np.ndarray
    iid_se: np.ndarray
    meta: dict = field(default_factory=dict)
    chain_mean: np.ndarray | None = None
    chain_se: np.ndarray | None = None

    def rows(self) -> list[dict]:
        out = []
        for i, name in enumerate(self.params):
            out.append(
                {
                    "param": name,
                    "ratio": float(self.ratio[i]),
                    "ratio_se": float(self.ratio_se[i]),
                    "rep_mean": float(self.rep_mean[i]),
                    "rep_min": float(self.rep_min[i]),
                    "rep_max": float(self.rep_max[i]),
                    "coupled_mean": float(self.coupled_mean[i]),
                    "coupled_se": float(self.coupled_se[i]),
                    "iid_mean": float(self.iid_mean[i]),
                    "iid_se": float(self.iid_se[i]),
                }
            )
        return out


# --------------------------------------------------------------------------- #
# variance estimation
# --------------------------------------------------------------------------- #


def batch_means_variance(trace: np.ndarray) -> np.ndarray:
    """Asymptotic variance of the mean along axis -2 (time), batch size floor(sqrt(N)).

    ``trace`` has shape (..., N, k); returns shape (..., k).
    """
    N = trace.shape[-2]
    B = int(np.sqrt(N))
    nb = N // B
    if nb < 2:
        raise ValidationError("too few iterations for batch means")
    t = trace[..., : nb * B, :]
    means = t.reshape(t.shape[:-2] + (nb, B, t.shape[-1])).mean(axis=-2)
    return B * means.var(axis=-2, ddof=1)


def _summarize(params, anti_trace, iid_trace, meta) -> VarianceRatioResult:
    """anti_trace, iid_trace: (R, N, d, k) post burn-in draws."""
    R = anti_trace.shape[0]
    va = batch_means_variance(anti_trace.mean(axis=2))  # (R, k)
    vi = batch_means_variance(iid_trace.mean(axis=2))
    ratio = va.mean(axis=0) / vi.mean(axis=0)
    per = va / vi
    if R > 1:
        # delta method for a ratio of means
        ma, mi = va.mean(axis=0), vi.mean(axis=0)
        cov = np.array([np.cov(va[:, j], vi[:, j]) for j in range(va.shape[1])])
        g = np.stack([1.0 / mi, -ma / mi**2], axis=1)
        ratio_se = np.sqrt(np.einsum("ki,kij,kj->k", g, cov, g) / R)
    else:
        ratio_se = np.full(va.shape[1], np.nan)
    cm = anti_trace[:, :, 0, :].mean(axis=1)  # first coupled chain, (R, k)
    im = iid_trace[:, :, 0, :].mean(axis=1)
    sd = lambda x: x.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.full(x.shape[1:], np.nan)
    chains = anti_trace.mean(axis=1)  # (R, d, k)
    return VarianceRatioResult(
        params=list(params),
        ratio=ratio,
        ratio_se=ratio_se,
        rep_mean=per.mean(axis=0),
        rep_min=per.min(axis=0),
        rep_max=per.max(axis=0),
        coupled_mean=cm.mean(axis=0),
        coupled_se=sd(cm),
        iid_mean=im.mean(axis=0),
        iid_se=sd(im),
        meta=meta,
        chain_mean=chains.mean(axis=0),
        chain_se=sd(chains),
    )


def default_coupler(d: int) -> Coupler:
    """Exchangeable circulant variates on C_d({1}), sampled by random balanced sampling."""
    return lambda n, rng: rbs_sampler(d, n, rng)


class _Uniforms:
    """Per-iteration uniforms of shape (R, slots, d), coupled or independent."""

    def __init__(self, R: int, d: int, rng: np.random.Generator, coupler: Coupler | None):
        self.R, self.d, self.rng, self.coupler = R, d, rng, coupler

    def __call__(self, slots: int) -> np.ndarray:
        if self.coupler is None:
            return self.rng.random((self.R, slots, self.d))
        U = self.coupler(self.R * slots, self.rng)
        return U.reshape(self.R, slots, self.d)


def _open_uniform(u: np.ndarray) -> np.ndarray:
    tiny = np.finfo(float).tiny
    return np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)


# --------------------------------------------------------------------------- #
# probit
# --------------------------------------------------------------------------- #


def synthetic_probit_data(n: int = 55, beta=(-0.5, 1.0, -0.7), seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(y, X) with X = [1, x1, x2], covariates standard normal, y ~ Ber(Phi(X beta))."""
    rng = make_rng(seed, 0, "probit-data")
    Z = rng.standard_normal((n, 2))
    X = np.column_stack([np.ones(n), Z])
    y = (rng.random(n) < special.ndtr(X @ np.asarray(beta, dtype=float))).astype(float)
    return y, X


def load_probit_data(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """CSV with columns y, x1, x2; an intercept column is prepended."""
    rows = _read_csv(path, ("y", "x1", "x2"))
    y = rows[:, 0]
    if not np.all((y == 0) | (y == 1)):
        raise BadData("y must be 0/1")
    X = np.column_stack([np.ones(len(y)), rows[:, 1:]])
    return y, X


def _read_csv(path, cols) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or any(c not in reader.fieldnames for c in cols):
                raise BadData(f"{path}: need columns {cols}")
            data = [[float(r[c]) for c in cols] for r in reader]
    except (OSError, ValueError, KeyError) as exc:
        raise BadData(f"cannot read {path}: {exc}") from exc
    if not data:
        raise BadData(f"{path}: no data rows")
    out = np.array(data, dtype=float)
    if not np.all(np.isfinite(out)):
        raise BadData(f"{path}: non-finite values")
    return out


def _probit_run(y, X, cfg: McmcConfig, rng, coupler) -> np.ndarray:
    """Trace (R, N, d, k) of beta after burn-in."""
    R, d = cfg.replications, cfg.d
    n, k = X.shape
    XtX_inv = np.linalg.inv(X.T @ X)
    L = np.linalg.cholesky(XtX_inv)
    H = XtX_inv @ X.T  # beta_tilde = H psi
    pos = y > 0
    uni = _Uniforms(R, d, rng, coupler)
    beta = np.zeros((R, d, k))
    N = cfg.iterations - cfg.burn_in
    trace = np.empty((R, N, d, k))
    for it in range(cfg.iterations):
        U = _open_uniform(uni(n + k))  # (R, n + k, d)
        mu = np.einsum("ij,rcj->rci", X, beta)  # (R, d, n)
        u = U[:, :n, :].transpose(0, 2, 1)
        # inverse CDF of N(mu, 1) truncated to (0, inf) or (-inf, 0)
        p0 = special.ndtr(-mu)
        up = p0 + u * (1.0 - p0)
        psi = np.where(pos, mu + special.ndtri(up), mu + special.ndtri(u * p0))
        # guard the extreme tails where up rounds to 1 or u p0 to 0
        psi = np.where(pos, np.maximum(psi, 0.0), np.minimum(psi, 0.0))
        bt = np.einsum("ji,rci->rcj", H, psi)
        z = special.ndtri(U[:, n:, :].transpose(0, 2, 1))
        beta = bt + np.einsum("ij,rcj->rci", L, z)
        if it >= cfg.burn_in:
            trace[:, it - cfg.burn_in] = beta
    return trace


def probit_gibbs(cfg: McmcConfig, data=None, coupler: Coupler | None = None) -> VarianceRatioResult:
    """Data-augmentation Gibbs sampler under a flat prior, coupled vs iid chains."""
    if data is None:
        y, X = load_probit_data(cfg.data) if cfg.data else synthetic_probit_data()
    else:
        y, X = data
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularDesign("design matrix is not full rank")
    coupler = coupler or default_coupler(cfg.d)
    anti = _probit_run(y, X, cfg, make_rng(cfg.seed, 0, "probit:anti"), coupler)
    iid = _probit_run(y, X, cfg, make_rng(cfg.seed, 0, "probit:iid"), None)
    params = [f"beta{j}" for j in range(X.shape[1])]
    return _summarize(params, anti, iid, {"model": "probit", **cfg.to_dict()})


# --------------------------------------------------------------------------- #
# pumps
# --------------------------------------------------------------------------- #


def pumps_data_path() -> Path:
    return Path(str(resources.files("segsample") / "data" / "pumps.csv"))


def load_pumps_data(path: str | Path | None = None) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_csv(path or pumps_data_path(), ("s", "t"))
    s, t = rows[:, 0], rows[:, 1]
    if np.any(s < 0) or np.any(t <= 0):
        raise BadData("need s >= 0 and t > 0")
    return s, t


def _gamma_inv(shape, rate, u):
    return special.gammaincinv(shape, u) / rate


def _pumps_run(s, t, cfg: McmcConfig, rng, coupler) -> np.ndarray:
    """Trace (R, N, d, 2) of (alpha, beta)."""
    R, d = cfg.replications, cfg.d
    n = s.size
    uni = _Uniforms(R, d, rng, coupler)
    # the acceptance uniform is independent unless it is coupled too
    acc_rng = rng.spawn(1)[0] if hasattr(rng, "spawn") else np.random.default_rng(rng.integers(2**63))
    alpha = np.ones((R, d))
    beta = np.ones((R, d))
    N = cfg.iterations - cfg.burn_in
    trace = np.empty((R, N, d, 2))
    slots = n + 2 + (1 if cfg.antithetic_acceptance else 0)
    for it in range(cfg.iterations):
        U = _open_uniform(uni(slots))  # (R, slots, d)
        lam = _gamma_inv(alpha[:, None, :] + s[None, :, None], beta[:, None, :] + t[None, :, None], U[:, :n, :])
        lam = np.maximum(lam, np.finfo(float).tiny)
        beta = _gamma_inv(0.1 + n * alpha, 1.0 + lam.sum(axis=1), U[:, n, :])
        beta = np.maximum(beta, np.finfo(float).tiny)
        prop = alpha + cfg.proposal_sd * special.ndtri(U[:, n + 1, :])
        slog = np.log(lam).sum(axis=1)
        if cfg.antithetic_acceptance:
            ua = U[:, n + 2, :]
        else:
            ua = acc_rng.random((R, d))
        ok = prop > 0
        safe = np.where(ok, prop, 1.0)
        k = n * np.log(beta) + slog - 1.0
        log_ratio = (safe - alpha) * k - n * (special.gammaln(safe) - special.gammaln(alpha))
        accept = ok & (np.log(ua) < log_ratio)
        alpha = np.where(accept, safe, alpha)
        if it >= cfg.burn_in:
            trace[:, it - cfg.burn_in, :, 0] = alpha
            trace[:, it - cfg.burn_in, :, 1] = beta
    return trace


def pumps_mwg(cfg: McmcConfig, data=None, coupler: Coupler | None = None) -> VarianceRatioResult:
    """Gamma-Poisson pump model: Gibbs for rates and beta, random-walk MH for alpha."""
    s, t = data if data is not None else load_pumps_data(cfg.data)
    coupler = coupler or default_coupler(cfg.d)
    anti = _pumps_run(s, t, cfg, make_rng(cfg.seed, 0, "pumps:anti"), coupler)
    iid = _pumps_run(s, t, cfg, make_rng(cfg.seed, 0, "pumps:iid"), None)
    return _summarize(["alpha", "beta"], anti, iid, {"model": "pumps", **cfg.to_dict()})


def run_mcmc(cfg: McmcConfig) -> VarianceRatioResult:
    return probit_gibbs(cfg) if cfg.model == "probit" else pumps_mwg(cfg)
