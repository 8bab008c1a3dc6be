"""Case-level data layout consumed by the likelihood kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidRequest


@dataclass
class CaseData:
    """One row per establishment-month case.

    ``y`` holds counts as floats with NaN where missing; ``observed`` is the
    complement of the missing mask. ``industry`` is -1 when the model has no
    random effects.
    """

    unit: np.ndarray  # (C,) sample-level unit id
    month: np.ndarray  # (C,) 0-based
    industry: np.ndarray  # (C,) 0-based or -1
    z: np.ndarray  # (C,)
    y: np.ndarray  # (C, Q)
    observed: np.ndarray  # (C, Q) bool
    w: np.ndarray  # (C,)
    n_months: int
    n_industries: int = 0

    def __post_init__(self):
        self.y_obs = np.where(self.observed, self.y, 0.0)
        self.wo = self.w[:, None] * self.observed  # weight, zero where missing
        self.wy = self.wo * self.y_obs

    @property
    def n_cases(self) -> int:
        return self.unit.size

    @property
    def Q(self) -> int:
        return self.y.shape[1]

    def with_weights(self, w) -> "CaseData":
        return CaseData(self.unit, self.month, self.industry, self.z, self.y, self.observed,
                        np.asarray(w, dtype=float), self.n_months, self.n_industries)

    @classmethod
    def from_arrays(cls, y, weights, missing=None, industry=None, z=None, n_industries=0,
                    unit_ids=None) -> "CaseData":
        """Build cases from a unit x month x response array.

        ``weights`` and ``industry``/``z``/``unit_ids`` are per unit; every
        unit contributes one case per month.
        """
        y = np.asarray(y)
        if y.ndim != 3 or y.shape[0] == 0:
            raise InvalidRequest("y must be a non-empty (n, T, Q) array")
        n, T, Q = y.shape
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,) or np.any(weights <= 0):
            raise InvalidRequest("weights must be a positive n-vector")
        missing = np.zeros(y.shape, dtype=bool) if missing is None else np.asarray(missing, dtype=bool)
        unit_ids = np.arange(n) if unit_ids is None else np.asarray(unit_ids)
        unit = np.repeat(unit_ids, T)
        month = np.tile(np.arange(T), n)
        if n_industries > 0:
            ind = np.repeat(np.asarray(industry, dtype=np.int64) % n_industries, T)
        else:
            ind = np.full(n * T, -1, dtype=np.int64)
        zc = np.repeat(np.zeros(n) if z is None else np.asarray(z, dtype=float), T)
        yc = y.reshape(n * T, Q).astype(float)
        obs = ~missing.reshape(n * T, Q)
        yc = np.where(obs, yc, np.nan)
        return cls(unit=unit, month=month, industry=ind, z=zc, y=yc, observed=obs,
                   w=np.repeat(weights, T), n_months=T, n_industries=int(n_industries))

    @classmethod
    def from_sample(cls, sample, weights=None, n_industries=0) -> "CaseData":
        return cls.from_arrays(
            sample.y, sample.norm_w if weights is None else weights, missing=sample.missing,
            industry=sample.strata, z=sample.z, n_industries=n_industries, unit_ids=sample.unit_ids,
        )


def restrict(data: CaseData, index) -> CaseData:
    """Cases selected by an integer index or boolean mask."""
    return CaseData(data.unit[index], data.month[index], data.industry[index], data.z[index],
                    data.y[index], data.observed[index], data.w[index], data.n_months,
                    data.n_industries)
