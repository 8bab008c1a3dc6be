"""Container for retained MCMC draws."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaMismatch


@dataclass
class ChainDraws:
    names: list
    draws: np.ndarray  # (S, P)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = list(self.names)
        self.draws = np.asarray(self.draws, dtype=float).reshape(-1, len(self.names))

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.draws[:, self.names.index(name)]
        except ValueError:
            raise SchemaMismatch(f"no parameter named {name!r}") from None

    def select(self, prefix: str) -> "ChainDraws":
        keep = [i for i, n in enumerate(self.names) if n.startswith(prefix)]
        return ChainDraws([self.names[i] for i in keep], self.draws[:, keep], dict(self.meta))


def theta_name(q: int, t: int) -> str:
    """Label for theta with 0-based indices; labels themselves are 1-based."""
    return f"theta[{q + 1}][{t + 1}]"


def gamma_name(l: int, q: int, t: int) -> str:
    return f"gamma[{l + 1}][{q + 1}][{t + 1}]"


def tau_name(q: int) -> str:
    return f"tau[{q + 1}]"


def parameter_names(Q: int, T: int, L: int = 0) -> list:
    names = [theta_name(q, t) for t in range(T) for q in range(Q)]
    names += [gamma_name(l, q, t) for l in range(L) for t in range(T) for q in range(Q)]
    names += [tau_name(q) for q in range(Q)]
    return names
