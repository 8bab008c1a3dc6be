"""Single-block MCMC transitions used by the Gibbs sweep."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidState, NotPositiveDefinite

MIN_BRACKET = 1e-12


def ess_update(current, prior_draw, log_lik, rng, cur_log_lik=None, counter=None):
    """One elliptical slice sampling transition.

    Args:
        current: current state (any array shape).
        prior_draw: callable ``rng -> array`` drawing from the mean-zero Gaussian prior.
        log_lik: callable returning the log likelihood of a state.
        rng: numpy Generator.
        cur_log_lik: ``log_lik(current)`` if already known.
        counter: optional ``collections.Counter``; ``ess_evals`` and ``ess_stuck``
            are incremented.

    Returns:
        ``(state, log_lik_of_state)``. If the angle bracket collapses below
        ``MIN_BRACKET`` the current state is returned unchanged.
    """
    if cur_log_lik is None:
        cur_log_lik = log_lik(current)
    nu = prior_draw(rng)
    threshold = cur_log_lik + math.log(rng.random())
    phi = rng.uniform(0.0, 2.0 * math.pi)
    lo, hi = phi - 2.0 * math.pi, phi
    while True:
        proposal = current * math.cos(phi) + nu * math.sin(phi)
        ll = log_lik(proposal)
        if counter is not None:
            counter["ess_evals"] += 1
        if ll > threshold:
            return proposal, ll
        if phi > 0:
            hi = phi
        else:
            lo = phi
        if hi - lo < MIN_BRACKET:
            if counter is not None:
                counter["ess_stuck"] += 1
            return current, cur_log_lik
        phi = rng.uniform(lo, hi)


def slice_update_scalar(current, log_density, rng, domain=(-math.inf, math.inf), step_width=1.0,
                        max_steps=50, cur_log_density=None, counter=None):
    """One univariate slice sampling transition with stepping out and shrinkage.

    Points outside the open interval ``domain`` have zero density. Returns
    ``(x, log_density(x))``.
    """
    lo_dom, hi_dom = domain
    fx = log_density(current) if cur_log_density is None else cur_log_density
    if not math.isfinite(fx):
        raise InvalidState(f"log density is not finite at the current point {current}")

    def logp(x):
        if not (lo_dom < x < hi_dom):
            return -math.inf
        if counter is not None:
            counter["slice_evals"] += 1
        return log_density(x)

    level = fx + math.log(rng.random())
    left = current - step_width * rng.random()
    right = left + step_width
    # Neal's bounded step-out: the step budget is split at random between sides
    j = int(math.floor(max_steps * rng.random()))
    k = max_steps - 1 - j
    while j > 0 and left > lo_dom and logp(left) > level:
        left -= step_width
        j -= 1
    while k > 0 and right < hi_dom and logp(right) > level:
        right += step_width
        k -= 1
    left = max(left, lo_dom)
    right = min(right, hi_dom)
    while True:
        x = rng.uniform(left, right)
        fx_new = logp(x)
        if fx_new > level:
            return x, fx_new
        if x < current:
            left = x
        elif x > current:
            right = x
        else:
            raise InvalidState("slice collapsed onto the current point")


def wishart_draw(df: float, scale: np.ndarray, rng) -> np.ndarray:
    """Wishart(df, scale) draw via the Bartlett decomposition (mean ``df * scale``)."""
    scale = np.atleast_2d(scale)
    p = scale.shape[0]
    try:
        L = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Wishart scale is not positive definite") from exc
    A = np.zeros((p, p))
    A[np.diag_indices(p)] = np.sqrt(rng.chisquare(df - np.arange(p)))
    low = np.tril_indices(p, -1)
    A[low] = rng.standard_normal(len(low[0]))
    LA = L @ A
    return LA @ LA.T


def effects_crossprod(effects, col_prec) -> np.ndarray:
    """``sum_l E_l C E_l^T`` for a stack of Q x T effect matrices."""
    effects = np.asarray(effects, dtype=float)
    return np.einsum("lqt,ts,lrs->qr", effects, col_prec, effects)


def update_precision_wishart(effects, other_factor_prec, a, nu, rng) -> np.ndarray:
    """Gibbs draw of a row precision matrix.

    Prior: ``P | a ~ Wishart(nu + Q - 1, (2 nu diag(a))^-1)``. The effects are
    a stack of Q x T matrices with separable precision ``P (x) other_factor_prec``.
    """
    a = np.asarray(a, dtype=float)
    Q = a.size
    effects = np.asarray(effects, dtype=float).reshape(-1, Q, np.shape(other_factor_prec)[0])
    n_eff, _, T = effects.shape
    rate = np.diag(2.0 * nu * a) + effects_crossprod(effects, other_factor_prec)
    try:
        scale = np.linalg.inv(rate)
        scale = 0.5 * (scale + scale.T)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("degenerate Wishart rate matrix") from exc
    return wishart_draw(nu + Q - 1 + n_eff * T, scale, rng)


def update_huangwand_scales(P, nu, rng) -> np.ndarray:
    """Draw ``a_q | P ~ Gamma((nu + Q) / 2, rate = 1 + nu * P_qq)``."""
    P = np.atleast_2d(P)
    Q = P.shape[0]
    rate = 1.0 + nu * np.diag(P)
    return rng.gamma((nu + Q) / 2.0, 1.0 / rate)


class CarLogDensity:
    """Log full conditional of a CAR association parameter given Gaussian effects.

    For effects ``E_l ~ MN(0, R^-1, (D - r Omega)^-1)`` the density in ``r`` is
    ``(n_eff Q / 2) logdet(D - r Omega) - 1/2 sum_l tr(R E_l (D - r Omega) E_l^T)``;
    the log-determinant is evaluated from the eigenvalues of ``D^-1/2 Omega D^-1/2``.
    """

    def __init__(self, T: int):
        from ..synthpop import path_adjacency

        self.omega = path_adjacency(T)
        self.d = self.omega.sum(axis=1)
        dm = 1.0 / np.sqrt(self.d)
        self.lam = np.linalg.eigvalsh(dm[:, None] * self.omega * dm[None, :])
        self.logdet_d = np.log(self.d).sum()

    def logdet(self, r: float) -> float:
        return self.logdet_d + np.log1p(-r * self.lam).sum()

    def bind(self, effects, row_prec):
        effects = np.asarray(effects, dtype=float)
        n_eff, Q, _ = effects.shape
        quad_d = np.einsum("qr,lrt,t,lqt->", row_prec, effects, self.d, effects)
        quad_o = np.einsum("qr,lrt,ts,lqs->", row_prec, effects, self.omega, effects)
        half_dim = 0.5 * n_eff * Q

        def log_density(r):
            if not (0.0 < r < 1.0):
                return -math.inf
            return half_dim * self.logdet(r) - 0.5 * (quad_d - r * quad_o)

        return log_density
