"""Density estimates, TV accuracy, posterior summaries and batch-means ESS."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .draws import ChainDraws
from .errors import DegenerateInput, InvalidRequest, SchemaMismatch

GRID_SIZE = 512
_CHUNK = 1 << 22


@dataclass
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        """Riemann sum on a uniform grid."""
        return float(self.density.sum() * (self.grid[1] - self.grid[0]))


@dataclass
class AccuracyReport:
    names: list
    accuracy: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracy))

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.accuracy)))


def silverman_bandwidth(samples) -> float:
    """``0.9 * min(sd, IQR / 1.34) * S^(-1/5)``; falls back to sd when the IQR is zero."""
    x = np.asarray(samples, dtype=float)
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if not spread > 0:
        raise DegenerateInput("samples have zero spread; density is a point mass")
    return 0.9 * spread * x.size ** (-0.2)


def _kde_on_grid(x, grid, h, cell=None) -> np.ndarray:
    """Point densities, or with ``cell`` the KDE mass of each grid cell divided by its width.

    Cell averages keep the Riemann sum equal to the KDE mass over the grid
    span however coarse the grid is relative to ``h``.
    """
    out = np.zeros(grid.size)
    step = max(1, _CHUNK // max(grid.size, 1))
    for start in range(0, x.size, step):
        u = (grid[:, None] - x[None, start:start + step]) / h
        if cell is None:
            out += np.exp(-0.5 * u * u).sum(axis=1)
        else:
            half = 0.5 * cell / h
            out += (ndtr(u + half) - ndtr(u - half)).sum(axis=1)
    if cell is None:
        return out / (x.size * h * np.sqrt(2.0 * np.pi))
    return out / (x.size * cell)


def kde_gaussian(samples, grid_size: int = GRID_SIZE, bandwidth: float | None = None,
                 grid=None) -> DensityEstimate:
    """Gaussian KDE.

    The default grid has ``grid_size`` points spanning ``[min - 3h, max + 3h]``
    and reports cell-averaged density. An explicit ``grid`` gets point values.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 10:
        raise InvalidRequest("need at least 10 samples for a density estimate")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        return DensityEstimate(grid=grid, density=_kde_on_grid(x, grid, h), bandwidth=h)
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, grid_size)
    return DensityEstimate(grid=grid, density=_kde_on_grid(x, grid, h, grid[1] - grid[0]), bandwidth=h)


def tv_accuracy(draws_a, draws_b, grid_size: int = GRID_SIZE) -> float:
    """``1 - TV`` between KDEs of two draw sets.

    Both densities use one bandwidth (Silverman's rule on the pooled draws) and
    one grid over the union range; the integral is a Riemann sum over
    cell-averaged densities.
    """
    a = np.asarray(draws_a, dtype=float).ravel()
    b = np.asarray(draws_b, dtype=float).ravel()
    if a.size < 10 or b.size < 10:
        raise InvalidRequest("need at least 10 draws in each set")
    h = silverman_bandwidth(np.concatenate([a, b]))
    lo = min(a.min(), b.min()) - 3 * h
    hi = max(a.max(), b.max()) + 3 * h
    grid = np.linspace(lo, hi, grid_size)
    cell = grid[1] - grid[0]
    pa = _kde_on_grid(a, grid, h, cell)
    pb = _kde_on_grid(b, grid, h, cell)
    tv = 0.5 * np.abs(pa - pb).sum() * cell
    return float(np.clip(1.0 - tv, 0.0, 1.0))


def density_pair(draws_a, draws_b, grid_size: int = GRID_SIZE):
    """Grid and both densities as used by :func:`tv_accuracy`, for plotting."""
    a = np.asarray(draws_a, dtype=float).ravel()
    b = np.asarray(draws_b, dtype=float).ravel()
    h = silverman_bandwidth(np.concatenate([a, b]))
    grid = np.linspace(min(a.min(), b.min()) - 3 * h, max(a.max(), b.max()) + 3 * h, grid_size)
    cell = grid[1] - grid[0]
    return grid, _kde_on_grid(a, grid, h, cell), _kde_on_grid(b, grid, h, cell)


def accuracy_report(a: ChainDraws, b: ChainDraws, names=None) -> AccuracyReport:
    """Per-parameter TV accuracy between two sets of chain draws."""
    if names is None:
        if a.names != b.names:
            raise SchemaMismatch("draw files carry different parameter names")
        names = a.names
    acc = np.array([tv_accuracy(a.column(n), b.column(n)) for n in names])
    return AccuracyReport(names=list(names), accuracy=acc,
                          meta={"bandwidth": "silverman-pooled", "grid_size": GRID_SIZE})


def summarize(column) -> dict:
    x = np.asarray(column, dtype=float)
    if x.size == 0:
        raise InvalidRequest("cannot summarize an empty column")
    q = np.percentile(x, [2.5, 50, 97.5])
    return {
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
        "q2.5": float(q[0]),
        "q50": float(q[1]),
        "q97.5": float(q[2]),
    }


@dataclass(frozen=True)
class FixedWidthResult:
    ess: float
    half_width: float
    converged: bool
    batch_size: int


def ess_fixed_width(column, target_half_width: float, level: float = 0.95) -> FixedWidthResult:
    """Batch-means effective sample size and fixed-width stopping check.

    Batches have size ``floor(sqrt(S))``; the interval for the mean uses a
    Student-t quantile with (batches - 1) degrees of freedom.
    """
    x = np.asarray(column, dtype=float)
    S = x.size
    if S < 100:
        raise InvalidRequest("need at least 100 draws for batch means")
    b = int(np.floor(np.sqrt(S)))
    a = S // b
    x = x[S - a * b:]
    S_used = x.size
    batch_means = x.reshape(a, b).mean(axis=1)
    sigma2_bm = b * batch_means.var(ddof=1)
    var = x.var(ddof=1)
    if sigma2_bm <= 0 or var <= 0:
        return FixedWidthResult(ess=float(S_used), half_width=0.0, converged=True, batch_size=b)
    half_width = stats.t.ppf(0.5 + level / 2, a - 1) * np.sqrt(sigma2_bm / S_used)
    return FixedWidthResult(ess=float(S_used * var / sigma2_bm), half_width=float(half_width),
                            converged=bool(half_width <= target_half_width), batch_size=b)
