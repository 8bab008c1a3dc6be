"""Sampling-weighted pseudo posterior for the negative-binomial hierarchical model."""

from .chain import ChainConfig, GibbsSampler, ModelState, run_chain
from .data import CaseData, restrict
from .impute import Imputation, posterior_predictive_impute
from .kernels import log_kernel_gamma, log_kernel_theta, log_mean, log_post_tau, log_prior_tau
from .samplers import (CarLogDensity, ess_update, slice_update_scalar, update_huangwand_scales,
                       update_precision_wishart, wishart_draw)

__all__ = [
    "CarLogDensity", "CaseData", "ChainConfig", "GibbsSampler", "Imputation", "ModelState",
    "ess_update", "log_kernel_gamma", "log_kernel_theta", "log_mean", "log_post_tau",
    "log_prior_tau", "posterior_predictive_impute", "restrict", "run_chain",
    "slice_update_scalar", "update_huangwand_scales", "update_precision_wishart", "wishart_draw",
]
