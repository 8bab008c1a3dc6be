"""Posterior-predictive imputation of missing counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..draws import ChainDraws, gamma_name, tau_name, theta_name
from ..errors import InvalidRequest
from .data import CaseData


@dataclass
class Imputation:
    case: np.ndarray  # (M,) case index of each missing cell
    response: np.ndarray  # (M,) 0-based response index
    unit: np.ndarray
    month: np.ndarray
    posterior_mean: np.ndarray  # (M,) posterior mean of exp(psi)
    mean_by_draw: np.ndarray  # (S, M) exp(psi) under each retained draw
    predictive: np.ndarray  # (S, M) one NB predictive draw per retained draw

    def fill(self, data: CaseData, use: str = "posterior_mean") -> np.ndarray:
        """Copy of ``data.y`` with missing cells replaced; observed cells untouched."""
        y = data.y.copy()
        values = self.posterior_mean if use == "posterior_mean" else self.predictive[0]
        y[self.case, self.response] = values
        return y


def _unpack(draws: ChainDraws, Q: int, T: int, L: int):
    S = draws.n_draws
    theta = np.empty((S, Q, T))
    for q in range(Q):
        for t in range(T):
            theta[:, q, t] = draws.column(theta_name(q, t))
    gamma = np.zeros((S, L, Q, T))
    for l in range(L):
        for q in range(Q):
            for t in range(T):
                gamma[:, l, q, t] = draws.column(gamma_name(l, q, t))
    tau = np.column_stack([draws.column(tau_name(q)) for q in range(Q)])
    return theta, gamma, tau


def posterior_predictive_impute(draws: ChainDraws, data: CaseData, rng=None) -> Imputation:
    """Per missing cell: exp(psi) under every draw, its posterior mean, and NB predictive draws."""
    if draws.n_draws == 0:
        raise InvalidRequest("no draws to impute from")
    rng = np.random.default_rng(rng)
    Q, T, L = data.Q, data.n_months, data.n_industries
    theta, gamma, tau = _unpack(draws, Q, T, L)
    case, resp = np.nonzero(~data.observed)
    month = data.month[case]
    log_mu = theta[:, resp, month]
    if L > 0:
        log_mu = log_mu + gamma[:, data.industry[case], resp, month] * data.z[case][None, :]
    mu = np.exp(log_mu)
    size = tau[:, resp]
    predictive = rng.negative_binomial(size, size / (size + mu)).astype(float)
    return Imputation(case=case, response=resp, unit=data.unit[case], month=month,
                      posterior_mean=mu.mean(axis=0), mean_by_draw=mu, predictive=predictive)
