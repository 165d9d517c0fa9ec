"""Experiments: integration, CLT variance, coupled MCMC and sampler timing."""

from .clt import ADDITIVE2, PRODUCT2, Integrand, clt_check
from .integration import IntegrationConfig, analytic_mse, load_points, mc_integrate, wang_sloan
from .mcmc import McmcConfig, VarianceRatioResult, batch_means_variance, probit_gibbs, pumps_mwg, run_mcmc, synthetic_probit_data
from .timing import sampling_time_study

__all__ = [
    "ADDITIVE2",
    "PRODUCT2",
    "Integrand",
    "clt_check",
    "IntegrationConfig",
    "analytic_mse",
    "load_points",
    "mc_integrate",
    "wang_sloan",
    "McmcConfig",
    "VarianceRatioResult",
    "batch_means_variance",
    "probit_gibbs",
    "pumps_mwg",
    "run_mcmc",
    "synthetic_probit_data",
    "sampling_time_study",
]
