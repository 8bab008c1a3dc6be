"""Experiment orchestration: simulate, sample, split, fit in parallel, combine, score.

Every random stream is derived from ``(base_seed, role, replication, subset)``
so outputs do not depend on the number of workers. Chains run as independent
tasks on a bounded process pool; files are written only by the orchestrator.
"""

from __future__ import annotations

import copy
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .barycenter import combine_marginals
from .config import ExperimentConfig
from .design import (build_sample, design_diagnostics, normalize_weights_subset, partition_random,
                     partition_stratified, subsample)
from .draws import ChainDraws, theta_name
from .errors import ChainAborted
from .metrics import accuracy_report, tv_accuracy
from .nbmodel import CaseData, posterior_predictive_impute, run_chain
from .rng import derive_seed
from .synthpop import generate_population, hold_out_missing

log = logging.getLogger(__name__)

# metadata that varies between identical runs; kept out of written draw files
VOLATILE_META = ("wall_time", "cpu_time")


@dataclass
class ReplicationResult:
    replication: int
    failed: bool = False
    error: str = ""
    accuracy: dict = field(default_factory=dict)
    sd_ratio: list = field(default_factory=list)  # per subset: median over theta of sd_j / sd_full
    imputation_accuracy: float | None = None
    times: dict = field(default_factory=dict)
    working_set_bytes: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    replications: list
    effective_workers: int = 1

    @property
    def succeeded(self) -> list:
        return [r for r in self.replications if not r.failed]

    @property
    def failed(self) -> list:
        return [r for r in self.replications if r.failed]

    def theta_names(self) -> list:
        p = self.config.population
        return [theta_name(q, t) for t in range(p.T) for q in range(p.Q)]

    def mean_accuracy(self) -> dict:
        ok = self.succeeded
        return {n: float(np.mean([r.accuracy[n] for r in ok])) for n in self.theta_names()} if ok else {}

    def mc_error(self) -> dict:
        ok = self.succeeded
        if len(ok) < 2:
            return {n: 0.0 for n in self.theta_names()}
        return {n: float(np.std([r.accuracy[n] for r in ok], ddof=1) / np.sqrt(len(ok)))
                for n in self.theta_names()}

    def accuracy_table(self) -> np.ndarray:
        """Mean accuracy as a Q x T array."""
        p = self.config.population
        mean = self.mean_accuracy()
        return np.array([[mean[theta_name(q, t)] for t in range(p.T)] for q in range(p.Q)])

    def mean_times(self) -> dict:
        ok = self.succeeded
        keys = ("full", "subset_max", "combine", "gwpp_total")
        return {k: float(np.mean([r.times[k] for r in ok])) for k in keys} if ok else {}


def _chain_task(data: CaseData, chain_cfg, seed: int) -> ChainDraws:
    return run_chain(data, replace(chain_cfg, seed=int(seed)))


def _working_set(data: CaseData) -> int:
    # case arrays held by the sampler plus ~4 (C, Q) float temporaries per kernel call
    per_case = sum(a.nbytes for a in (data.unit, data.month, data.industry, data.z, data.w))
    per_cell = sum(a.nbytes for a in (data.y, data.observed, data.y_obs, data.wo, data.wy))
    return int(per_case + per_cell + 4 * data.n_cases * data.Q * 8)


def _strip(draws: ChainDraws, **extra) -> ChainDraws:
    meta = {k: v for k, v in draws.meta.items() if k not in VOLATILE_META}
    meta.update(extra)
    return ChainDraws(draws.names, draws.draws, meta)


def effective_workers(requested: int) -> int:
    """Pool size actually used; never more processes than available cores."""
    return max(1, min(int(requested), os.cpu_count() or 1))


def run_replication(cfg: ExperimentConfig, rep: int, pool=None) -> ReplicationResult:
    out_dir = Path(cfg.output_dir) / f"rep_{rep + 1:03d}"
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = lambda *keys: derive_seed(cfg.base_seed, *keys, rep)  # noqa: E731
    result = ReplicationResult(replication=rep + 1)
    L = cfg.population.L

    pop_cfg = replace(cfg.population, seed=seed("population"))
    pop = generate_population(pop_cfg)
    sample = build_sample(pop, cfg.f, np.random.default_rng(seed("design")))
    sample.missing = hold_out_missing(sample.y, cfg.missing_rate, cfg.missing_rule,
                                      np.random.default_rng(seed("missing")),
                                      response=cfg.missing_response - 1)
    partition = partition_stratified if cfg.partition == "stratified" else partition_random
    assignment = partition(sample, cfg.K, np.random.default_rng(seed("partition")))
    assignment = normalize_weights_subset(sample, assignment, cfg.weight_mode)
    diag = design_diagnostics(sample, pop.N)
    result.diagnostics = asdict(diag)

    if cfg.write_population:
        io.write_population(pop, out_dir)
    io.write_sample(sample, out_dir / "sample.csv")
    io.write_missing(sample, out_dir / "missing.csv")
    io.write_assignment(sample, assignment, out_dir / "assignment.csv")

    full_data = CaseData.from_sample(sample, n_industries=L)
    subset_data = [CaseData.from_sample(subsample(sample, m, w), n_industries=L)
                   for m, w in zip(assignment.membership, assignment.subset_w)]
    result.working_set_bytes = {"full": _working_set(full_data),
                                "subset_max": max(_working_set(d) for d in subset_data)}

    try:
        full = _chain_task(full_data, cfg.chain, seed("chain-full"))
        seeds = [seed("chain-subset", j) for j in range(cfg.K)]
        if pool is None:
            subsets = [_chain_task(d, cfg.chain, s) for d, s in zip(subset_data, seeds)]
        else:
            futures = [pool.submit(_chain_task, d, cfg.chain, s) for d, s in zip(subset_data, seeds)]
            subsets = [f.result() for f in futures]  # barrier before combination
    except ChainAborted as exc:
        result.failed = True
        result.error = str(exc)
        (out_dir / "failure.json").write_text(json.dumps({"error": str(exc), "snapshot": exc.snapshot},
                                                         sort_keys=True) + "\n")
        log.warning("replication %d failed: %s", rep + 1, exc)
        return result

    t0 = time.perf_counter()
    gwpp = combine_marginals(subsets)
    t_combine = time.perf_counter() - t0

    io.write_draws(_strip(full, role="full"), out_dir / "draws_full.csv")
    for j, d in enumerate(subsets):
        io.write_draws(_strip(d, role="subset", subset=j + 1), out_dir / f"draws_subset_{j + 1}.csv")
    io.write_draws(_strip(gwpp, role="gwpp"), out_dir / "draws_gwpp.csv")

    report = accuracy_report(gwpp, full)
    result.accuracy = report.as_dict()
    io.write_table(out_dir / "accuracy.csv", io.ACCURACY_HEADER, zip(report.names, report.accuracy))

    thetas = [n for n in full.names if n.startswith("theta")]
    sd_full = np.array([full.column(n).std(ddof=1) for n in thetas])
    result.sd_ratio = [float(np.median(np.array([d.column(n).std(ddof=1) for n in thetas]) / sd_full))
                       for d in subsets]
    io.write_table(out_dir / "sd_ratio.csv", ["subset", "median_sd_ratio"],
                   [(j + 1, r) for j, r in enumerate(result.sd_ratio)])

    if full_data.observed.all():
        result.imputation_accuracy = None
    else:
        imp_full = posterior_predictive_impute(full, full_data, seed("impute-full"))
        imp_gwpp = posterior_predictive_impute(gwpp, full_data, seed("impute-gwpp"))
        result.imputation_accuracy = tv_accuracy(imp_gwpp.posterior_mean, imp_full.posterior_mean)
        io.write_table(out_dir / "imputation.csv",
                       ["unit", "month", "response", "full_mean", "gwpp_mean", "full_draw", "gwpp_draw"],
                       [(int(u) + 1, int(t) + 1, int(q) + 1, a, b, c, d) for u, t, q, a, b, c, d in zip(
                           imp_full.unit, imp_full.month, imp_full.response, imp_full.posterior_mean,
                           imp_gwpp.posterior_mean, imp_full.predictive[0], imp_gwpp.predictive[0])])

    sub_max = max(d.meta["wall_time"] for d in subsets)
    result.times = {"full": full.meta["wall_time"], "subset_max": sub_max, "combine": t_combine,
                    "gwpp_total": sub_max + t_combine,
                    "subset_cpu_max": max(d.meta["cpu_time"] for d in subsets),
                    "full_cpu": full.meta["cpu_time"]}
    return result


def run_pipeline(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every replication and write per-replication and summary files under ``output_dir``."""
    cfg = copy.deepcopy(cfg)
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = effective_workers(cfg.workers)
    if workers < cfg.workers:
        log.info("using %d worker(s); %d requested but only %d core(s) available",
                 workers, cfg.workers, os.cpu_count() or 1)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        reps = [run_replication(cfg, r, pool) for r in range(cfg.replications)]
    finally:
        if pool is not None:
            pool.shutdown()
    report = ExperimentReport(config=cfg, replications=reps, effective_workers=workers)
    write_report(report)
    return report


def timing_report(report: ExperimentReport, path) -> list:
    """Write ``label,seconds`` rows (means over successful replications)."""
    times = report.mean_times()
    rows = [(k, times[k]) for k in ("full", "subset_max", "combine", "gwpp_total")] if times else []
    io.write_table(path, io.TIMING_HEADER, rows)
    return rows


def format_report(report: ExperimentReport) -> str:
    cfg = report.config
    p = cfg.population
    lines = [
        f"GWPP experiment: N={p.N} T={p.T} Q={p.Q} L={p.L} f={cfg.f} K={cfg.K} "
        f"weights={cfg.weight_mode} partition={cfg.partition}",
        f"chain: iterations={cfg.chain.iterations} burn_in={cfg.chain.burn_in} thin={cfg.chain.thin}",
        f"replications: {len(report.succeeded)} ok, {len(report.failed)} failed; "
        f"workers requested={cfg.workers} used={report.effective_workers}",
        "",
    ]
    if report.succeeded:
        table = report.accuracy_table()
        lines.append("mean TV accuracy (rows q, columns t)")
        lines.append("      " + " ".join(f"t={t + 1:<5d}" for t in range(p.T)))
        for q in range(p.Q):
            lines.append(f"q={q + 1:<3d} " + " ".join(f"{v:7.3f}" for v in table[q]))
        lines.append(f"overall mean: {table.mean():.3f}  max MC error: {max(report.mc_error().values()):.3f}")
        ratios = [r for rep in report.succeeded for r in rep.sd_ratio]
        lines.append(f"subset/full sd ratio (median over theta): min {min(ratios):.3f} max {max(ratios):.3f}")
        imp = [r.imputation_accuracy for r in report.succeeded if r.imputation_accuracy is not None]
        if imp:
            lines.append("imputation accuracy: " + " ".join(f"{v:.3f}" for v in imp))
        times = report.mean_times()
        lines.append("")
        lines.append("seconds: " + "  ".join(f"{k}={v:.2f}" for k, v in times.items()))
    for r in report.failed:
        lines.append(f"replication {r.replication} FAILED: {r.error}")
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport) -> None:
    out = Path(report.config.output_dir)
    mean, err = report.mean_accuracy(), report.mc_error()
    io.write_table(out / "accuracy_table.csv", ["parameter", "accuracy", "mc_error"],
                   [(n, mean[n], err[n]) for n in mean])
    io.write_table(out / "failures.csv", ["replication", "error"],
                   [(r.replication, r.error) for r in report.failed])
    io.write_table(out / "replications.csv",
                   ["replication", "mean_accuracy", "imputation_accuracy", "min_sd_ratio", "max_sd_ratio",
                    "gamma", "working_set_full", "working_set_subset_max"],
                   [(r.replication, float(np.mean(list(r.accuracy.values()))),
                     "" if r.imputation_accuracy is None else r.imputation_accuracy,
                     min(r.sd_ratio), max(r.sd_ratio), r.diagnostics["gamma"],
                     r.working_set_bytes["full"], r.working_set_bytes["subset_max"])
                    for r in report.succeeded])
    (out / "report.txt").write_text(_deterministic_part(format_report(report)))
    timing_report(report, out / "timing.csv")


def _deterministic_part(text: str) -> str:
    # wall-clock seconds live in timing.csv only
    return "\n".join(line for line in text.splitlines() if not line.startswith("seconds:")) + "\n"
