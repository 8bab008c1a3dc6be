"""Sampling-weighted negative-binomial log kernels and the dispersion log posterior."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from ..errors import DomainError, NumericOverflow
from .data import CaseData


def _checked(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericOverflow(f"non-finite {what}")
    return float(value)


def random_effect_term(Gamma, data: CaseData) -> np.ndarray:
    """``gamma[l(c), q, t(c)] * z_c`` per case, shape (C, Q); zero without industries."""
    if data.n_industries == 0 or Gamma is None or np.size(Gamma) == 0:
        return np.zeros((data.n_cases, data.Q))
    return Gamma[data.industry, :, data.month] * data.z[:, None]


def log_mean(Theta, Gamma, data: CaseData) -> np.ndarray:
    """Log means psi, shape (C, Q)."""
    return Theta[:, data.month].T + random_effect_term(Gamma, data)


def _nb_kernel(psi, linear, tau, data: CaseData) -> float:
    # log(tau + e^psi) via logaddexp never overflows for large psi
    lse = np.logaddexp(np.log(tau)[None, :], psi)
    terms = -(tau[None, :] * data.wo + data.wy) * lse + data.wy * linear
    return terms.sum()


def log_kernel_theta(Theta, data: CaseData, Gamma, tau) -> float:
    """Weighted NB log likelihood in ``Theta``, dropping Theta-free terms."""
    tau = np.asarray(tau, dtype=float)
    lin = Theta[:, data.month].T
    psi = lin + random_effect_term(Gamma, data)
    return _checked(_nb_kernel(psi, lin, tau, data), "theta kernel")


def log_kernel_gamma(Gamma_l, data: CaseData, Theta, tau) -> float:
    """Weighted NB log likelihood in one industry's effects.

    ``data`` must already be restricted to the cases of that industry.
    """
    tau = np.asarray(tau, dtype=float)
    lin = Gamma_l[:, data.month].T * data.z[:, None]
    psi = Theta[:, data.month].T + lin
    return _checked(_nb_kernel(psi, lin, tau, data), "gamma kernel")


def log_prior_tau(tau_q: float) -> float:
    """Density of tau implied by a standard half-Cauchy on tau^(-1/2)."""
    return -0.5 * np.log(tau_q) - np.log1p(tau_q)


def log_post_tau(tau_q: float, q: int, data: CaseData, Theta, Gamma, psi=None) -> float:
    """Log pseudo posterior of the NB size ``tau_q`` up to a constant.

    ``psi`` may be passed to reuse precomputed log means.
    """
    if not tau_q > 0:
        raise DomainError(f"tau must be positive, got {tau_q}")
    if psi is None:
        psi = log_mean(Theta, Gamma, data)
    wo = data.wo[:, q]
    y = data.y_obs[:, q]
    lse = np.logaddexp(np.log(tau_q), psi[:, q])
    per_case = -(tau_q + y) * lse + gammaln(tau_q + y)
    value = (wo.sum() * (tau_q * np.log(tau_q) - gammaln(tau_q))
             + np.dot(wo, per_case) + log_prior_tau(tau_q))
    return float(value)
