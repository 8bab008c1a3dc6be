"""Experiment configuration: dataclass, shipped profiles and INI-style loader.

Config files use section headers and ``key = value`` lines::

    [experiment]
    profile = desk
    replications = 3

    [population]
    N = 2000
    tau = 5, 10
    P2_spec = 0.5 0.6; 0.6 2

Unknown sections or keys raise :class:`~gwpp.errors.ConfigError`.
"""

from __future__ import annotations

import configparser
import copy
from dataclasses import dataclass, field, fields
from pathlib import Path

from .design import WEIGHT_MODES
from .errors import ConfigError
from .nbmodel.chain import ChainConfig
from .synthpop import MISSING_RULES, PopulationConfig

PARTITIONS = ("random", "stratified")


@dataclass
class ExperimentConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    f: float = 0.6
    K: int = 5
    weight_mode: str = "subset-sum"
    partition: str = "random"
    chain: ChainConfig = field(default_factory=ChainConfig)
    replications: int = 10
    workers: int = 1
    missing_rate: float = 0.0
    missing_rule: str = "response-q-only"
    missing_response: int = 2  # 1-based
    base_seed: int = 0
    output_dir: str = "gwpp_out"
    write_population: bool = True

    def validate(self) -> None:
        self.population.validate()
        self.chain.validate()
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not (0.0 < self.f <= 1.0):
            raise ConfigError("f must lie in (0, 1]")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.partition not in PARTITIONS:
            raise ConfigError(f"partition must be one of {PARTITIONS}")
        if self.missing_rule not in MISSING_RULES:
            raise ConfigError(f"missing_rule must be one of {MISSING_RULES}")
        if not (0.0 <= self.missing_rate < 1.0):
            raise ConfigError("missing_rate must lie in [0, 1)")
        if not (1 <= self.missing_response <= self.population.Q):
            raise ConfigError("missing_response must be a 1-based response index")


def study_profile() -> ExperimentConfig:
    """Simulation study at full size: N=10^4, T=10, 15000 iterations."""
    return ExperimentConfig(
        population=PopulationConfig(N=10_000, T=10, Q=2, L=0, tau=(5.0, 10.0), intercept_offset=5.0,
                                    r=0.9, P2_spec=((0.5, 0.6), (0.6, 2.0))),
        f=0.6, K=5, chain=ChainConfig(iterations=15_000, burn_in=10_000, thin=5), replications=10,
    )


def desk_profile() -> ExperimentConfig:
    """Reduced study that finishes in minutes on one core."""
    return ExperimentConfig(
        population=PopulationConfig(N=2000, T=4, Q=2, L=0, tau=(5.0, 10.0), intercept_offset=5.0,
                                    r=0.9, P2_spec=((0.5, 0.6), (0.6, 2.0))),
        f=0.5, K=4, chain=ChainConfig(iterations=6000, burn_in=2000, thin=4), replications=3,
        missing_rate=0.25, missing_rule="response-q-only", missing_response=2,
    )


PROFILES = {"desk": desk_profile, "study": study_profile}


def _vector(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _matrix(text):
    return tuple(_vector(row) for row in text.split(";"))


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_POPULATION_PARSERS = {
    "N": int, "T": int, "Q": int, "L": int, "tau": _vector, "intercept_offset": float, "r": float,
    "P2_spec": _matrix, "P8_spec": _matrix, "seed": int, "n_strata": int, "r_gamma": float,
}
_CHAIN_PARSERS = {f.name: (_bool if f.type in (bool, "bool") else
                           float if f.type in (float, "float") else int)
                  for f in fields(ChainConfig)}
_EXPERIMENT_PARSERS = {
    "f": float, "K": int, "weight_mode": str, "partition": str, "replications": int, "workers": int,
    "missing_rate": float, "missing_rule": str, "missing_response": int, "base_seed": int,
    "output_dir": str, "write_population": _bool,
}
_SECTIONS = {"population": _POPULATION_PARSERS, "chain": _CHAIN_PARSERS,
             "experiment": _EXPERIMENT_PARSERS, "design": _EXPERIMENT_PARSERS}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (N, K, P2_spec)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{section}]")
    profile = "desk"
    if parser.has_option("experiment", "profile"):
        profile = parser.get("experiment", "profile").strip()
        if profile not in PROFILES:
            raise ConfigError(f"{source}: unknown profile {profile!r}")
    cfg = copy.deepcopy(PROFILES[profile]())

    for section in parser.sections():
        known = _SECTIONS[section]
        target = {"population": cfg.population, "chain": cfg.chain}.get(section, cfg)
        for key, raw in parser.items(section):
            if section == "experiment" and key == "profile":
                continue
            if key not in known:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            try:
                setattr(target, key, known[key](raw))
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
