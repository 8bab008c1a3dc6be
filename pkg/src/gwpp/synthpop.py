"""Synthetic finite populations from the negative-binomial hierarchical model.

Counts are generated as

    y[i, t, q] ~ NB(size=tau[q], mean=exp(offset + theta[q, t] + gamma[l(i), q, t] * z[i]))

with ``theta`` drawn from a matrix-normal prior whose row precision is the
inverse of ``P2_spec`` and whose column precision is a CAR matrix over months.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimension, InvalidParameter, NotPositiveDefinite, InvalidRequest
from .rng import make_rng

MISSING_RULES = ("mcar", "response-q-only")


@dataclass(frozen=True)
class CarPrecision:
    T: int
    r: float
    matrix: np.ndarray


def path_adjacency(T: int) -> np.ndarray:
    omega = np.zeros((T, T))
    idx = np.arange(T - 1)
    omega[idx, idx + 1] = 1.0
    omega[idx + 1, idx] = 1.0
    return omega


def build_car_precision(T: int, r: float) -> CarPrecision:
    """Proper CAR precision ``D - r * Omega`` over a path graph of ``T`` months."""
    if int(T) != T or T < 2:
        raise InvalidDimension(f"CAR precision needs T >= 2, got {T}")
    if not (0.0 <= r < 1.0):
        raise InvalidParameter(f"CAR association r must lie in [0, 1), got {r}")
    omega = path_adjacency(int(T))
    D = np.diag(omega.sum(axis=1))
    return CarPrecision(T=int(T), r=float(r), matrix=D - r * omega)


def column_precision(T: int, r: float) -> np.ndarray:
    """Month precision used by the model; a single month gets unit precision."""
    if T == 1:
        return np.ones((1, 1))
    return build_car_precision(T, r).matrix


def _chol(prec: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{what} is not positive definite") from exc


def sample_matrix_normal(mean, row_prec, col_prec, rng) -> np.ndarray:
    """Draw ``X = mean + A Z B^T`` with ``A A^T = row_prec^-1`` and ``B B^T = col_prec^-1``."""
    row_prec = np.atleast_2d(np.asarray(row_prec, dtype=float))
    col_prec = np.atleast_2d(np.asarray(col_prec, dtype=float))
    Lr = _chol(row_prec, "row precision")
    Lc = _chol(col_prec, "column precision")
    rng = make_rng(rng)
    Z = rng.standard_normal((row_prec.shape[0], col_prec.shape[0]))
    # P = L L^T  =>  P^-1 = L^-T L^-1, so L^-T is a valid covariance factor
    X = np.linalg.solve(Lr.T, Z)
    X = np.linalg.solve(Lc.T, X.T).T
    return np.asarray(mean, dtype=float) + X


def _as_matrix(value, Q: int, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(value, dtype=float))
    if m.shape != (Q, Q):
        raise InvalidDimension(f"{name} must be {Q}x{Q}, got {m.shape}")
    if not np.allclose(m, m.T):
        raise InvalidParameter(f"{name} must be symmetric")
    _chol(m, name)
    return m


@dataclass
class PopulationConfig:
    N: int = 10_000
    T: int = 10
    Q: int = 2
    L: int = 0
    tau: tuple = (5.0, 10.0)
    intercept_offset: float = 5.0
    r: float = 0.9
    P2_spec: tuple = ((0.5, 0.6), (0.6, 2.0))
    seed: int = 0
    # strata used for partitioning; industries double as strata when L > 0
    n_strata: int = 1
    r_gamma: float = 0.9
    P8_spec: tuple | None = None

    def validate(self) -> None:
        for name in ("N", "T", "Q"):
            if int(getattr(self, name)) < 1:
                raise InvalidDimension(f"{name} must be a positive integer")
        if self.L < 0:
            raise InvalidDimension("L must be >= 0")
        tau = np.asarray(self.tau, dtype=float)
        if tau.shape != (self.Q,) or np.any(tau <= 0):
            raise InvalidParameter("tau must be a positive Q-vector")
        for r in (self.r, self.r_gamma):
            if not (0.0 <= r < 1.0):
                raise InvalidParameter(f"r must lie in [0, 1), got {r}")
        _as_matrix(self.P2_spec, self.Q, "P2_spec")
        if self.P8_spec is not None:
            _as_matrix(self.P8_spec, self.Q, "P8_spec")
        if self.n_strata < 1:
            raise InvalidDimension("n_strata must be >= 1")


@dataclass
class FinitePopulation:
    y: np.ndarray  # (N, T, Q) int64
    theta_true: np.ndarray  # (Q, T)
    gamma_true: np.ndarray  # (L, Q, T)
    size_measure: np.ndarray  # (N,)
    strata: np.ndarray  # (N,) int labels
    z: np.ndarray  # (N,) covariate multiplying the random effects
    config: PopulationConfig = field(repr=False, default=None)

    @property
    def N(self) -> int:
        return self.y.shape[0]

    @property
    def psi_true(self) -> np.ndarray:
        """Log means on the model scale (offset included), shape (Q, T)."""
        return self.config.intercept_offset + self.theta_true


def generate_population(cfg: PopulationConfig, rng=None) -> FinitePopulation:
    """Simulate a finite population; a pure function of ``cfg`` and the rng seed."""
    cfg.validate()
    rng = make_rng(cfg.seed if rng is None else rng)
    N, T, Q, L = int(cfg.N), int(cfg.T), int(cfg.Q), int(cfg.L)
    tau = np.asarray(cfg.tau, dtype=float)

    P2 = np.linalg.inv(_as_matrix(cfg.P2_spec, Q, "P2_spec"))
    P3 = column_precision(T, cfg.r)
    theta = sample_matrix_normal(np.zeros((Q, T)), P2, P3, rng)

    n_strata = max(int(cfg.n_strata), L, 1)
    strata = rng.integers(0, n_strata, size=N)
    z = rng.standard_normal(N)
    psi = cfg.intercept_offset + theta[None, :, :]  # (1, Q, T)
    if L > 0:
        P8 = np.linalg.inv(_as_matrix(cfg.P8_spec if cfg.P8_spec is not None else cfg.P2_spec, Q, "P8_spec"))
        P6 = column_precision(T, cfg.r_gamma)
        gamma = np.stack([sample_matrix_normal(np.zeros((Q, T)), P8, P6, rng) for _ in range(L)])
        industry = strata % L
        psi = psi + gamma[industry] * z[:, None, None]
    else:
        gamma = np.zeros((0, Q, T))
        psi = np.broadcast_to(psi, (N, Q, T))

    mu = np.exp(psi).transpose(0, 2, 1)  # (N, T, Q)
    p = tau / (tau + mu)
    y = rng.negative_binomial(np.broadcast_to(tau, mu.shape), p).astype(np.int64)
    # +1 keeps every inclusion probability strictly positive
    size_measure = y.sum(axis=(1, 2)).astype(float) + 1.0
    return FinitePopulation(
        y=y, theta_true=theta, gamma_true=gamma, size_measure=size_measure,
        strata=strata, z=z, config=cfg,
    )


def hold_out_missing(y_view: np.ndarray, rate: float, rule: str = "mcar", rng=None,
                     response: int = 1) -> np.ndarray:
    """Boolean mask of cells to hide; ``response`` is the 0-based response index
    used by the ``response-q-only`` rule."""
    if not (0.0 <= rate < 1.0):
        raise InvalidParameter(f"missing rate must lie in [0, 1), got {rate}")
    if rule not in MISSING_RULES:
        raise InvalidRequest(f"unknown missingness rule {rule!r}")
    rng = make_rng(rng)
    shape = np.shape(y_view)
    draws = rng.random(shape)
    mask = draws < rate
    if rule == "response-q-only":
        if not (0 <= response < shape[-1]):
            raise InvalidRequest(f"response index {response} out of range")
        keep = np.zeros(shape[-1], dtype=bool)
        keep[response] = True
        mask &= keep
    return mask


def apply_missing(y: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Float copy of ``y`` with masked cells set to NaN; idempotent."""
    out = np.array(y, dtype=float)
    out[mask] = np.nan
    return out
