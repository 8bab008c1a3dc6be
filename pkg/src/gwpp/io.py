"""Columnar text formats for populations, samples, assignments and draws.

All files are CSV with a header row. Draw files start with ``#`` comment
lines holding ``key: value`` metadata (values JSON-encoded).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .design import SubsetAssignment, SurveySample
from .draws import ChainDraws
from .errors import SchemaMismatch, ValidationError
from .synthpop import FinitePopulation, PopulationConfig

POPULATION_HEADER = ["unit", "month", "response", "y", "stratum"]
SAMPLE_HEADER = ["unit", "pi", "raw_w", "norm_w", "stratum"]
ASSIGNMENT_HEADER = ["unit", "subset", "subset_w"]
MISSING_HEADER = ["unit", "month", "response"]
ACCURACY_HEADER = ["parameter", "accuracy"]
TIMING_HEADER = ["label", "seconds"]

# 17 significant digits round-trip float64 exactly
_FMT = "%.17g"


def _fmt(x) -> str:
    return _FMT % x


def _read_rows(path, header):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0] != header:
        raise SchemaMismatch(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def write_population(pop: FinitePopulation, directory) -> tuple:
    """``population.csv`` (one row per unit-month-response cell) and ``truth.json``.

    Units, months and responses are written 1-based.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    N, T, Q = pop.y.shape
    unit, month, resp = np.meshgrid(np.arange(N), np.arange(T), np.arange(Q), indexing="ij")
    table = np.column_stack([unit.ravel() + 1, month.ravel() + 1, resp.ravel() + 1, pop.y.ravel(),
                             np.repeat(pop.strata, T * Q)])
    pop_path = directory / "population.csv"
    np.savetxt(pop_path, table, fmt="%d", delimiter=",", header=",".join(POPULATION_HEADER), comments="")
    cfg = pop.config
    truth = {
        "theta": pop.theta_true.tolist(),
        "gamma": pop.gamma_true.tolist(),
        "psi": pop.psi_true.tolist(),
        "z": pop.z.tolist(),
        "config": {
            "N": cfg.N, "T": cfg.T, "Q": cfg.Q, "L": cfg.L, "tau": list(map(float, cfg.tau)),
            "intercept_offset": cfg.intercept_offset, "r": cfg.r,
            "P2_spec": np.asarray(cfg.P2_spec, dtype=float).tolist(), "seed": int(cfg.seed),
            "n_strata": cfg.n_strata, "r_gamma": cfg.r_gamma,
        },
    }
    truth_path = directory / "truth.json"
    truth_path.write_text(json.dumps(truth, indent=1, sort_keys=True) + "\n")
    return pop_path, truth_path


def read_population(pop_path, truth_path=None) -> FinitePopulation:
    pop_path = Path(pop_path)
    truth_path = Path(truth_path) if truth_path else pop_path.with_name("truth.json")
    rows = np.asarray(_read_rows(pop_path, POPULATION_HEADER), dtype=np.int64)
    N, T, Q = rows[:, 0].max(), rows[:, 1].max(), rows[:, 2].max()
    y = np.zeros((N, T, Q), dtype=np.int64)
    y[rows[:, 0] - 1, rows[:, 1] - 1, rows[:, 2] - 1] = rows[:, 3]
    strata = np.zeros(N, dtype=np.int64)
    strata[rows[:, 0] - 1] = rows[:, 4]
    truth = json.loads(truth_path.read_text())
    c = truth["config"]
    cfg = PopulationConfig(N=c["N"], T=c["T"], Q=c["Q"], L=c["L"], tau=tuple(c["tau"]),
                           intercept_offset=c["intercept_offset"], r=c["r"],
                           P2_spec=tuple(map(tuple, c["P2_spec"])), seed=c["seed"],
                           n_strata=c["n_strata"], r_gamma=c["r_gamma"])
    return FinitePopulation(
        y=y, theta_true=np.asarray(truth["theta"], dtype=float),
        gamma_true=np.asarray(truth["gamma"], dtype=float).reshape(c["L"], c["Q"], c["T"]),
        size_measure=y.sum(axis=(1, 2)).astype(float) + 1.0, strata=strata,
        z=np.asarray(truth["z"], dtype=float), config=cfg,
    )


def write_sample(sample: SurveySample, path) -> None:
    """Units are written as 1-based population indices."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for u, p, rw, nw, s in zip(sample.unit_ids, sample.pi, sample.raw_w, sample.norm_w, sample.strata):
            w.writerow([int(u) + 1, _fmt(p), _fmt(rw), _fmt(nw), int(s)])


def write_missing(sample: SurveySample, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MISSING_HEADER)
        for i, t, q in zip(*np.nonzero(sample.missing)):
            w.writerow([int(sample.unit_ids[i]) + 1, int(t) + 1, int(q) + 1])


def read_sample(path, pop: FinitePopulation, missing_path=None) -> SurveySample:
    rows = _read_rows(path, SAMPLE_HEADER)
    if not rows:
        raise ValidationError(f"{path}: empty sample")
    unit = np.array([int(r[0]) - 1 for r in rows])
    vals = np.array([[float(v) for v in r[1:4]] for r in rows])
    missing = np.zeros((unit.size,) + pop.y.shape[1:], dtype=bool)
    if missing_path is not None and Path(missing_path).exists():
        pos = {u: i for i, u in enumerate(unit)}
        for r in _read_rows(missing_path, MISSING_HEADER):
            missing[pos[int(r[0]) - 1], int(r[1]) - 1, int(r[2]) - 1] = True
    return SurveySample(unit_ids=unit, pi=vals[:, 0], raw_w=vals[:, 1], norm_w=vals[:, 2],
                        y=pop.y[unit], missing=missing, strata=np.array([int(r[4]) for r in rows]),
                        z=pop.z[unit])


def write_assignment(sample: SurveySample, assignment: SubsetAssignment, path) -> None:
    """One row per sample unit; subsets are written 1-based."""
    rows = []
    for j, (m, w) in enumerate(zip(assignment.membership, assignment.subset_w)):
        rows += [(int(sample.unit_ids[i]) + 1, j + 1, wi) for i, wi in zip(m, w)]
    rows.sort()
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(ASSIGNMENT_HEADER)
        for u, j, wi in rows:
            out.writerow([u, j, _fmt(wi)])


def read_assignment(path, sample: SurveySample) -> SubsetAssignment:
    rows = _read_rows(path, ASSIGNMENT_HEADER)
    pos = {int(u) + 1: i for i, u in enumerate(sample.unit_ids)}
    K = max(int(r[1]) for r in rows)
    members = [[] for _ in range(K)]
    weights = [[] for _ in range(K)]
    for r in rows:
        j = int(r[1]) - 1
        members[j].append(pos[int(r[0])])
        weights[j].append(float(r[2]))
    membership, subset_w = [], []
    for m, w in zip(members, weights):
        order = np.argsort(m)
        membership.append(np.asarray(m, dtype=np.int64)[order])
        subset_w.append(np.asarray(w)[order])
    return SubsetAssignment(K=K, membership=membership, subset_w=subset_w)


def write_draws(draws: ChainDraws, path) -> None:
    with open(path, "w", newline="") as fh:
        for key in sorted(draws.meta):
            fh.write(f"# {key}: {json.dumps(draws.meta[key], sort_keys=True)}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(draws.names)
        for row in draws.draws:
            out.writerow([_fmt(v) for v in row])


def read_draws(path) -> ChainDraws:
    meta = {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = json.loads(value)
        elif line:
            body.append(line)
    if not body:
        raise SchemaMismatch(f"{path}: no header row")
    names = body[0].split(",")
    data = np.array([[float(v) for v in row.split(",")] for row in body[1:]]).reshape(-1, len(names))
    return ChainDraws(names, data, meta)


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            out.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
