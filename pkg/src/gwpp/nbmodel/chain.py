"""Gibbs sweep over all blocks of the negative-binomial hierarchical model."""

from __future__ import annotations

import hashlib
import json
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from ..draws import ChainDraws, parameter_names
from ..errors import ChainAborted, GwppError, InvalidParameter, InvalidRequest
from ..synthpop import column_precision, sample_matrix_normal
from .data import CaseData, restrict
from .kernels import log_kernel_gamma, log_kernel_theta, log_mean, log_post_tau
from .samplers import (CarLogDensity, ess_update, slice_update_scalar, update_huangwand_scales,
                       update_precision_wishart)


@dataclass
class ChainConfig:
    iterations: int = 15_000
    burn_in: int = 10_000
    thin: int = 5
    seed: int = 0
    nu: float = 2.0
    step_width: float = 1.0
    max_steps: int = 50
    theta_steps: int = 1
    update_theta: bool = True
    update_gamma: bool = True
    update_tau: bool = True
    update_precisions: bool = True
    update_rho: bool = True

    def validate(self) -> None:
        if self.iterations < 1 or self.thin < 1 or self.burn_in < 0:
            raise InvalidParameter("iterations and thin must be positive, burn_in non-negative")
        if self.burn_in >= self.iterations:
            raise InvalidParameter("burn_in must be smaller than iterations")
        if self.nu <= 0:
            raise InvalidParameter("nu must be positive")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ModelState:
    Theta: np.ndarray
    Gamma: np.ndarray
    tau: np.ndarray
    P2: np.ndarray
    P8: np.ndarray
    rho3: float
    rho6: float
    a2: np.ndarray
    a8: np.ndarray
    nu: float = 2.0

    @classmethod
    def initial(cls, Q: int, T: int, L: int, nu: float = 2.0) -> "ModelState":
        return cls(Theta=np.zeros((Q, T)), Gamma=np.zeros((L, Q, T)), tau=np.ones(Q),
                   P2=np.eye(Q), P8=np.eye(Q), rho3=0.5, rho6=0.5, a2=np.ones(Q), a8=np.ones(Q),
                   nu=nu)

    def flat(self) -> np.ndarray:
        parts = [self.Theta.T.ravel()]
        parts += [g.T.ravel() for g in self.Gamma]
        parts.append(self.tau)
        return np.concatenate(parts)

    def snapshot(self) -> dict:
        return {k: np.array(v).tolist() for k, v in asdict(self).items()}


def _logit(p):
    return math.log(p) - math.log1p(-p)


def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class GibbsSampler:
    """Holds the data-dependent caches and performs one sweep at a time."""

    def __init__(self, data: CaseData, cfg: ChainConfig, rng):
        self.data = data
        self.cfg = cfg
        self.rng = rng
        self.Q, self.T, self.L = data.Q, data.n_months, data.n_industries
        self.state = ModelState.initial(self.Q, self.T, self.L, cfg.nu)
        self.counter = Counter()
        self.car = CarLogDensity(self.T) if self.T > 1 else None
        self.by_industry = [restrict(data, np.flatnonzero(data.industry == l)) for l in range(self.L)]

    def _col_prec(self, rho):
        return column_precision(self.T, rho)

    def sweep(self) -> None:
        s, cfg, rng, data = self.state, self.cfg, self.rng, self.data
        P3 = self._col_prec(s.rho3)
        P6 = self._col_prec(s.rho6)

        if cfg.update_theta:
            zero = np.zeros((self.Q, self.T))
            ll = None
            for _ in range(cfg.theta_steps):
                s.Theta, ll = ess_update(
                    s.Theta, lambda g: sample_matrix_normal(zero, s.P2, P3, g),
                    lambda th: log_kernel_theta(th, data, s.Gamma, s.tau), rng, cur_log_lik=ll,
                    counter=self.counter)

        if cfg.update_gamma and self.L > 0:
            zero = np.zeros((self.Q, self.T))
            for l, sub in enumerate(self.by_industry):
                if sub.n_cases == 0:
                    s.Gamma[l] = sample_matrix_normal(zero, s.P8, P6, rng)
                    continue
                s.Gamma[l], _ = ess_update(
                    s.Gamma[l], lambda g: sample_matrix_normal(zero, s.P8, P6, g),
                    lambda gl: log_kernel_gamma(gl, sub, s.Theta, s.tau), rng, counter=self.counter)

        if cfg.update_tau:
            psi = log_mean(s.Theta, s.Gamma, data)
            for q in range(self.Q):
                # log scale; + eta is the Jacobian of tau = exp(eta)
                def target(eta, q=q):
                    return log_post_tau(math.exp(eta), q, data, s.Theta, s.Gamma, psi=psi) + eta

                eta, _ = slice_update_scalar(math.log(s.tau[q]), target, rng, step_width=cfg.step_width,
                                             max_steps=cfg.max_steps, counter=self.counter)
                s.tau[q] = math.exp(eta)

        if cfg.update_precisions:
            s.P2 = update_precision_wishart(s.Theta[None], P3, s.a2, s.nu, rng)
            s.a2 = update_huangwand_scales(s.P2, s.nu, rng)
            if self.L > 0:
                s.P8 = update_precision_wishart(s.Gamma, P6, s.a8, s.nu, rng)
                s.a8 = update_huangwand_scales(s.P8, s.nu, rng)

        if cfg.update_rho and self.car is not None:
            s.rho3 = self._update_rho(s.rho3, s.Theta[None], s.P2)
            if self.L > 0:
                s.rho6 = self._update_rho(s.rho6, s.Gamma, s.P8)

    def _update_rho(self, rho, effects, row_prec):
        log_density = self.car.bind(effects, row_prec)

        def target(eta):
            r = _expit(eta)
            if not (0.0 < r < 1.0):
                return -math.inf
            return log_density(r) + math.log(r) + math.log1p(-r)

        eta, _ = slice_update_scalar(_logit(rho), target, self.rng, step_width=self.cfg.step_width,
                                     max_steps=self.cfg.max_steps, counter=self.counter)
        return _expit(eta)


def run_chain(data: CaseData, cfg: ChainConfig, rng=None) -> ChainDraws:
    """Run one chain and return thinned post-burn-in draws of theta, gamma and tau.

    ``rng`` defaults to a generator seeded with ``cfg.seed``.
    """
    cfg.validate()
    if data.n_cases == 0 or not data.observed.any():
        raise InvalidRequest("chain needs at least one observed case")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    sampler = GibbsSampler(data, cfg, rng)
    names = parameter_names(sampler.Q, sampler.T, sampler.L)
    out = np.empty((cfg.n_retained, len(names)))

    t0, c0 = time.perf_counter(), time.process_time()
    kept = 0
    for it in range(1, cfg.iterations + 1):
        try:
            sampler.sweep()
        except GwppError as exc:
            raise ChainAborted(f"iteration {it}: {exc}", sampler.state.snapshot()) from exc
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            row = sampler.state.flat()
            if not np.all(np.isfinite(row)):
                raise ChainAborted(f"iteration {it}: non-finite state", sampler.state.snapshot())
            out[kept] = row
            kept += 1

    meta = {
        "seed": int(cfg.seed),
        "config_hash": cfg.config_hash(),
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "n_cases": int(data.n_cases),
        "wall_time": time.perf_counter() - t0,
        "cpu_time": time.process_time() - c0,
        "counters": dict(sampler.counter),
        "final_rho3": sampler.state.rho3,
    }
    return ChainDraws(names, out[:kept], meta)
