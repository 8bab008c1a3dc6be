"""Informative PPS sampling design, survey weights and subset partitioning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation, InvalidRequest
from .rng import make_rng

WEIGHT_MODES = ("subset-sum", "full-sum")


@dataclass
class SurveySample:
    unit_ids: np.ndarray  # population indices, ascending
    pi: np.ndarray
    raw_w: np.ndarray
    norm_w: np.ndarray
    y: np.ndarray  # (n, T, Q)
    missing: np.ndarray  # (n, T, Q) bool
    strata: np.ndarray
    z: np.ndarray = None

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    def __post_init__(self):
        if self.missing is None:
            self.missing = np.zeros(self.y.shape, dtype=bool)
        if self.z is None:
            self.z = np.zeros(len(self.unit_ids))


@dataclass
class SubsetAssignment:
    K: int
    membership: list  # K arrays of sample positions (0..n-1)
    subset_w: list = field(default_factory=list)
    mode: str | None = None

    def subset_of(self) -> np.ndarray:
        """Subset index for each sample position."""
        n = sum(len(m) for m in self.membership)
        out = np.empty(n, dtype=np.int64)
        for j, m in enumerate(self.membership):
            out[m] = j
        return out


@dataclass(frozen=True)
class DesignDiagnostics:
    gamma: float
    min_pi: float
    sampling_fraction: float
    sum_pi: float


def compute_inclusion_probs(sizes, n: int) -> np.ndarray:
    """PPS first-order inclusion probabilities summing to ``n``.

    Units whose share would exceed one are fixed at one and the remaining
    sample size is redistributed over the other units until no share exceeds one.
    """
    sizes = np.asarray(sizes, dtype=float)
    N = sizes.size
    if n > N:
        raise InvalidRequest(f"sample size {n} exceeds population size {N}")
    if n < 1:
        raise InvalidRequest("sample size must be positive")
    if np.any(sizes <= 0):
        raise InvalidRequest("sizes must be strictly positive")
    pi = np.zeros(N)
    capped = np.zeros(N, dtype=bool)
    while True:
        free = ~capped
        remaining = n - capped.sum()
        pi[free] = remaining * sizes[free] / sizes[free].sum()
        over = free & (pi >= 1.0)
        if not over.any():
            break
        capped |= over
        pi[capped] = 1.0
    return pi


def draw_sample_pps(pi, rng=None) -> np.ndarray:
    """Systematic PPS on a random ordering; returns sorted selected indices."""
    pi = np.asarray(pi, dtype=float)
    total = pi.sum()
    n = int(round(total))
    if abs(total - n) > 1e-6:
        raise InvalidRequest(f"inclusion probabilities sum to {total}, not an integer")
    rng = make_rng(rng)
    order = rng.permutation(pi.size)
    cum = np.cumsum(pi[order])
    cum[-1] = n  # absorb rounding drift in the last interval
    points = rng.random() + np.arange(n)
    pos = np.searchsorted(cum, points, side="right")
    return np.sort(order[pos])


def build_sample(pop, f: float, rng=None, missing=None) -> SurveySample:
    """Draw a fixed-size PPS sample of ``round(f * N)`` units with size measure as size."""
    if not (0.0 < f <= 1.0):
        raise InvalidRequest(f"sampling fraction must lie in (0, 1], got {f}")
    N = pop.N
    n = int(round(f * N))
    pi_all = compute_inclusion_probs(pop.size_measure, n)
    idx = draw_sample_pps(pi_all, rng)
    pi = pi_all[idx]
    raw_w = 1.0 / pi
    norm_w = n * raw_w / raw_w.sum()
    return SurveySample(
        unit_ids=idx, pi=pi, raw_w=raw_w, norm_w=norm_w, y=pop.y[idx],
        missing=None if missing is None else missing, strata=pop.strata[idx], z=pop.z[idx],
    )


def partition_stratified(sample: SurveySample, K: int, rng=None) -> SubsetAssignment:
    """Spread each stratum's units over the K subsets by simple random sampling.

    Strata are visited in random order and units are dealt round-robin with one
    pointer shared across strata, starting from a random subset index, so
    overall subset sizes differ by at most one.
    """
    n = sample.n
    if K < 1 or K > n:
        raise InvalidRequest(f"K must lie in [1, n={n}], got {K}")
    rng = make_rng(rng)
    labels = np.asarray(sample.strata)
    strata = np.unique(labels)
    strata = strata[rng.permutation(strata.size)]
    start = int(rng.integers(K))
    buckets = [[] for _ in range(K)]
    ptr = start
    for s in strata:
        members = np.flatnonzero(labels == s)
        for i in members[rng.permutation(members.size)]:
            buckets[ptr].append(i)
            ptr = (ptr + 1) % K
    membership = [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]
    return SubsetAssignment(K=K, membership=membership)


def partition_random(sample: SurveySample, K: int, rng=None) -> SubsetAssignment:
    """Uniformly random partition into K subsets whose sizes differ by at most one."""
    one = SurveySample(
        unit_ids=sample.unit_ids, pi=sample.pi, raw_w=sample.raw_w, norm_w=sample.norm_w,
        y=sample.y, missing=sample.missing, strata=np.zeros(sample.n, dtype=np.int64), z=sample.z,
    )
    return partition_stratified(one, K, rng)


def normalize_weights_subset(sample: SurveySample, assignment: SubsetAssignment,
                             mode: str = "subset-sum") -> SubsetAssignment:
    """Fill per-subset weights.

    ``subset-sum`` rescales raw weights within each subset to sum to the full
    sample size n; ``full-sum`` reuses the full-sample normalized weights.
    """
    if mode not in WEIGHT_MODES:
        raise InvalidRequest(f"unknown weight mode {mode!r}")
    n = sample.n
    w = sample.raw_w
    out = []
    for m in assignment.membership:
        if mode == "subset-sum":
            out.append(n * w[m] / w[m].sum())
        else:
            out.append(n * w[m] / w.sum())
    return SubsetAssignment(K=assignment.K, membership=assignment.membership, subset_w=out, mode=mode)


def design_diagnostics(sample: SurveySample, N: int) -> DesignDiagnostics:
    pi = np.asarray(sample.pi, dtype=float)
    if np.any(pi <= 0):
        raise AssumptionViolation("inclusion probabilities must be strictly positive")
    return DesignDiagnostics(
        gamma=float(1.0 / pi.min()), min_pi=float(pi.min()),
        sampling_fraction=sample.n / N, sum_pi=float(pi.sum()),
    )


def subsample(sample: SurveySample, positions, weights=None) -> SurveySample:
    """Restrict a sample to ``positions``; ``weights`` replaces ``norm_w`` if given."""
    positions = np.asarray(positions, dtype=np.int64)
    return SurveySample(
        unit_ids=sample.unit_ids[positions], pi=sample.pi[positions], raw_w=sample.raw_w[positions],
        norm_w=sample.norm_w[positions] if weights is None else np.asarray(weights, dtype=float),
        y=sample.y[positions], missing=sample.missing[positions], strata=sample.strata[positions],
        z=sample.z[positions],
    )
