"""One-dimensional Wasserstein-2 distances and barycenters of empirical measures.

The production path averages quantile functions, which is the exact W2
barycenter on the real line. A fixed-support linear program serves as an
independent oracle on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .draws import ChainDraws
from .errors import InvalidRequest, SchemaMismatch, SolverFailure


@dataclass
class EmpiricalMeasure1D:
    atoms: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float).ravel()
        if self.atoms.size == 0:
            raise InvalidRequest("empty measure")
        if not np.all(np.isfinite(self.atoms)):
            raise InvalidRequest("atoms must be finite")
        if self.weights is None:
            self.weights = np.full(self.atoms.size, 1.0 / self.atoms.size)
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape != self.atoms.shape or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidRequest("weights must be non-negative, aligned with atoms and sum to 1")
            self.weights = w

    @property
    def uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def sorted(self) -> "EmpiricalMeasure1D":
        order = np.argsort(self.atoms, kind="stable")
        return EmpiricalMeasure1D(self.atoms[order], self.weights[order])

    def quantile(self, levels) -> np.ndarray:
        """Left-continuous inverse CDF at the given levels in (0, 1)."""
        m = self.sorted()
        cum = np.cumsum(m.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, levels, side="left")
        return m.atoms[np.minimum(idx, m.atoms.size - 1)]

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.weights))


@dataclass
class BarycenterResult:
    atoms: dict  # parameter name -> sorted combined atoms
    distances: dict = field(default_factory=dict)  # name -> K W2 distances
    method: str = "quantile"


def _as_measure(x) -> EmpiricalMeasure1D:
    return x if isinstance(x, EmpiricalMeasure1D) else EmpiricalMeasure1D(x)


def _merged_levels(measures):
    """Breakpoints of all CDFs, and each measure's quantile on every level interval."""
    sorted_ms = [m.sorted() for m in measures]
    cums = []
    for m in sorted_ms:
        c = np.cumsum(m.weights)
        c[-1] = 1.0
        cums.append(c)
    levels = np.unique(np.concatenate([[0.0]] + cums))
    widths = np.diff(levels)
    mids = levels[:-1] + 0.5 * widths
    quantiles = [m.atoms[np.minimum(np.searchsorted(c, mids, side="left"), m.atoms.size - 1)]
                 for m, c in zip(sorted_ms, cums)]
    return widths, quantiles


def w2_empirical_1d(x, y) -> float:
    """Exact W2 distance between two 1-D empirical measures.

    Equal-size uniform measures use the sorted coupling directly; otherwise
    quantile functions are integrated over the merged grid of CDF levels.
    """
    mx, my = _as_measure(x), _as_measure(y)
    if mx.atoms.size == my.atoms.size and mx.uniform and my.uniform:
        d = np.sort(mx.atoms) - np.sort(my.atoms)
        return float(np.sqrt(np.mean(d * d)))
    widths, (qx, qy) = _merged_levels([mx, my])
    return float(np.sqrt(max(np.dot(widths, (qx - qy) ** 2), 0.0)))


def _sample_quantile(sorted_atoms: np.ndarray, levels: np.ndarray) -> np.ndarray:
    # order statistic i (1-based) sits at level (i - 0.5) / S; linear in between
    S = sorted_atoms.size
    pos = (np.arange(1, S + 1) - 0.5) / S
    return np.interp(levels, pos, sorted_atoms)


def barycenter_quantile(measures, grid_size: int | None = None) -> EmpiricalMeasure1D:
    """Barycenter whose quantile function is the average of the inputs' quantile functions.

    Evaluated at mid-point levels ``(i - 0.5) / grid_size``; ``grid_size``
    defaults to the smallest atom count. Uniform measures are interpolated
    linearly between order statistics, weighted ones use the inverse CDF.
    """
    ms = [_as_measure(m) for m in measures]
    if not ms:
        raise InvalidRequest("need at least one measure")
    G = min(m.atoms.size for m in ms) if grid_size is None else int(grid_size)
    if G < 1:
        raise InvalidRequest("grid_size must be positive")
    levels = (np.arange(1, G + 1) - 0.5) / G
    total = np.zeros(G)
    for m in ms:
        if m.uniform:
            total += _sample_quantile(np.sort(m.atoms), levels)
        else:
            total += m.quantile(levels)
    return EmpiricalMeasure1D(np.sort(total / len(ms)))


def barycenter_exact(measures) -> EmpiricalMeasure1D:
    """Exact barycenter of arbitrary weighted 1-D measures (merged CDF levels)."""
    ms = [_as_measure(m) for m in measures]
    widths, quantiles = _merged_levels(ms)
    keep = widths > 0
    atoms = np.mean(quantiles, axis=0)[keep]
    w = widths[keep]
    return EmpiricalMeasure1D(atoms, w / w.sum())


def barycenter_objective(candidate, measures) -> float:
    """Mean squared W2 distance from ``candidate`` to each measure."""
    return float(np.mean([w2_empirical_1d(candidate, m) ** 2 for m in measures]))


def barycenter_lp_discrete(support, weights, lam=None, bary_support=None):
    """W2 barycenter restricted to a fixed support, solved as a linear program.

    Args:
        support: (G,) shared support points of the input measures.
        weights: (K, G) probability vectors of the input measures on ``support``.
        lam: barycentric coordinates; uniform 1/K by default.
        bary_support: candidate atoms of the barycenter; ``support`` by default.
            For a uniform grid of spacing h and uniform ``lam``, the grid of
            spacing h/K contains every atom of the exact barycenter, so the
            LP optimum is then exact.

    Returns:
        ``(barycenter_weights, objective)`` where ``objective`` is the weighted
        sum of squared W2 distances at the optimum.
    """
    y = np.asarray(support, dtype=float).ravel()
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    K, n_in = W.shape
    if n_in != y.size:
        raise InvalidRequest("weights must align with the support")
    x = y if bary_support is None else np.asarray(bary_support, dtype=float).ravel()
    G = x.size
    lam = np.full(K, 1.0 / K) if lam is None else np.asarray(lam, dtype=float)

    # plan k maps barycenter mass (rows, all G points) onto the support of measure k only
    cols = [np.flatnonzero(W[k] > 0) for k in range(K)]
    sizes = [G * c.size for c in cols]
    offsets = np.concatenate([[G], G + np.cumsum(sizes)])
    n_var = int(offsets[-1])
    cost = np.zeros(n_var)
    blocks_row, blocks_col, blocks_val, rhs = [], [], [], []
    row = 0
    for k in range(K):
        c = cols[k]
        m = c.size
        off = offsets[k]
        cost[off:off + G * m] = lam[k] * ((x[:, None] - y[None, c]) ** 2).ravel()
        var = off + np.arange(G * m).reshape(G, m)
        # sum_j plan[i, j] - b_i = 0
        blocks_row += [np.repeat(row + np.arange(G), m), row + np.arange(G)]
        blocks_col += [var.ravel(), np.arange(G)]
        blocks_val += [np.ones(G * m), -np.ones(G)]
        rhs.append(np.zeros(G))
        row += G
        # sum_i plan[i, j] = mu_k[j]
        blocks_row.append(row + np.tile(np.arange(m), G))
        blocks_col.append(var.ravel())
        blocks_val.append(np.ones(G * m))
        rhs.append(W[k, c])
        row += m
    A = sp.csr_matrix((np.concatenate(blocks_val), (np.concatenate(blocks_row), np.concatenate(blocks_col))),
                      shape=(row, n_var))
    res = linprog(cost, A_eq=A, b_eq=np.concatenate(rhs), bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverFailure(f"barycenter LP failed: {res.message}")
    b = np.clip(res.x[:G], 0.0, None)
    return b / b.sum(), float(res.fun)


def combine_marginals(chains, names=None) -> ChainDraws:
    """Combine K subset chains column by column through the quantile barycenter.

    Each output column is sorted ascending, so dependence between parameters
    is not carried over. The output has ``min_j S_j`` draws.
    """
    chains = list(chains)
    if not chains:
        raise InvalidRequest("nothing to combine")
    ref = chains[0].names
    for c in chains[1:]:
        if c.names != ref:
            raise SchemaMismatch("subset draws carry different parameter names")
    names = ref if names is None else list(names)
    S = min(c.n_draws for c in chains)
    if S == 0:
        raise InvalidRequest("a subset chain has no draws")
    out = np.empty((S, len(names)))
    for p, name in enumerate(names):
        out[:, p] = barycenter_quantile([c.column(name) for c in chains], grid_size=S).atoms
    return ChainDraws(names, out, {"method": "quantile", "K": len(chains)})


def combine_result(chains) -> BarycenterResult:
    """Combined atoms plus the W2 distance from the barycenter to each subset marginal."""
    combined = combine_marginals(chains)
    atoms, dist = {}, {}
    for name in combined.names:
        col = combined.column(name)
        atoms[name] = col
        dist[name] = [w2_empirical_1d(col, c.column(name)) for c in chains]
    return BarycenterResult(atoms=atoms, distances=dist, method="quantile")
