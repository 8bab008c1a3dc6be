"""Command-line interface.

Exit status: 0 on success, 1 on invalid input or usage, 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .barycenter import combine_marginals
from .config import ExperimentConfig, desk_profile, load_config
from .design import build_sample, normalize_weights_subset, partition_random, partition_stratified, subsample
from .errors import ValidationError
from .harness import format_report, run_pipeline
from .metrics import accuracy_report
from .nbmodel import CaseData, posterior_predictive_impute, run_chain
from .synthpop import generate_population, hold_out_missing

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else desk_profile()
    if getattr(args, "seed", None) is not None:
        cfg.base_seed = args.seed
        cfg.population.seed = args.seed
        cfg.chain.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "out", None) is not None:
        cfg.output_dir = str(args.out)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    cfg = _config(args)
    pop = generate_population(cfg.population)
    pop_path, truth_path = io.write_population(pop, _out_dir(args))
    print(f"wrote {pop_path} and {truth_path}")


def cmd_sample(args):
    cfg = _config(args)
    pop = io.read_population(args.population)
    rng = np.random.default_rng(cfg.base_seed)
    f = cfg.f if args.f is None else args.f
    sample = build_sample(pop, f, rng)
    rate = cfg.missing_rate if args.missing_rate is None else args.missing_rate
    sample.missing = hold_out_missing(sample.y, rate, cfg.missing_rule, rng, response=cfg.missing_response - 1)
    out = _out_dir(args)
    io.write_sample(sample, out / "sample.csv")
    io.write_missing(sample, out / "missing.csv")
    print(f"sampled n={sample.n} of N={pop.N}")


def cmd_partition(args):
    cfg = _config(args)
    pop = io.read_population(args.population)
    sample = io.read_sample(args.sample, pop)
    K = cfg.K if args.K is None else args.K
    mode = args.mode or cfg.weight_mode
    how = args.how or cfg.partition
    split = partition_stratified if how == "stratified" else partition_random
    assignment = normalize_weights_subset(sample, split(sample, K, np.random.default_rng(cfg.base_seed)), mode)
    io.write_assignment(sample, assignment, _out_dir(args) / "assignment.csv")
    print(f"partitioned into K={K} subsets ({mode})")


def _load_data(args, cfg):
    pop = io.read_population(args.population)
    missing = args.missing or str(Path(args.sample).with_name("missing.csv"))
    sample = io.read_sample(args.sample, pop, missing)
    if getattr(args, "assignment", None):
        assignment = io.read_assignment(args.assignment, sample)
        j = args.subset - 1
        if not (0 <= j < assignment.K):
            raise ValidationError(f"subset must lie in 1..{assignment.K}")
        sample = subsample(sample, assignment.membership[j], assignment.subset_w[j])
    return CaseData.from_sample(sample, n_industries=pop.config.L)


def cmd_fit(args):
    cfg = _config(args)
    data = _load_data(args, cfg)
    draws = run_chain(data, cfg.chain)
    out = Path(args.out_file) if args.out_file else _out_dir(args) / "draws.csv"
    io.write_draws(draws, out)
    print(f"wrote {draws.n_draws} draws of {len(draws.names)} parameters to {out}")


def cmd_combine(args):
    chains = [io.read_draws(p) for p in args.draws]
    combined = combine_marginals(chains)
    out = Path(args.out_file) if args.out_file else _out_dir(args) / "draws_gwpp.csv"
    io.write_draws(combined, out)
    print(f"combined K={len(chains)} draw files into {out}")


def cmd_accuracy(args):
    a, b = io.read_draws(args.a), io.read_draws(args.b)
    report = accuracy_report(a, b)
    print(",".join(io.ACCURACY_HEADER))
    for name, acc in zip(report.names, report.accuracy):
        print(f"{name},{acc:.6f}")
    if args.out:
        io.write_table(_out_dir(args) / "accuracy.csv", io.ACCURACY_HEADER, zip(report.names, report.accuracy))


def cmd_impute(args):
    cfg = _config(args)
    data = _load_data(args, cfg)
    draws = io.read_draws(args.draws)
    imp = posterior_predictive_impute(draws, data, cfg.base_seed)
    rows = [(int(u) + 1, int(t) + 1, int(q) + 1, m, p) for u, t, q, m, p in
            zip(imp.unit, imp.month, imp.response, imp.posterior_mean, imp.predictive[0])]
    io.write_table(_out_dir(args) / "imputation.csv", ["unit", "month", "response", "posterior_mean", "draw"], rows)
    print(f"imputed {len(rows)} missing cells")


def cmd_experiment(args):
    cfg = _config(args)
    report = run_pipeline(cfg)
    print(format_report(report), end="")
    if report.failed and not report.succeeded:
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gwpp", description="Wasserstein pseudo posteriors for informative survey samples.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="INI-style experiment config")
            p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        return p

    p = common(sub.add_parser("simulate", help="generate a finite population"))
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("sample", help="draw an informative PPS sample"))
    p.add_argument("--population", required=True)
    p.add_argument("--f", type=float)
    p.add_argument("--missing-rate", type=float)
    p.set_defaults(func=cmd_sample)

    p = common(sub.add_parser("partition", help="split a sample into K subsets"))
    p.add_argument("--population", required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--mode", choices=["subset-sum", "full-sum"])
    p.add_argument("--how", choices=["random", "stratified"])
    p.set_defaults(func=cmd_partition)

    for name, func, help_ in (("fit", cmd_fit, "run one chain"), ("impute", cmd_impute, "impute missing cells")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--population", required=True)
        p.add_argument("--sample", required=True)
        p.add_argument("--missing")
        p.add_argument("--assignment")
        p.add_argument("--subset", type=int, default=1)
        if name == "fit":
            p.add_argument("--out-file")
        else:
            p.add_argument("--draws", required=True)
        p.set_defaults(func=func)

    p = common(sub.add_parser("combine", help="combine subset draw files"), config=False)
    p.add_argument("draws", nargs="+")
    p.add_argument("--out-file")
    p.set_defaults(func=cmd_combine)

    p = common(sub.add_parser("accuracy", help="TV accuracy per parameter"), config=False)
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_accuracy)

    p = common(sub.add_parser("experiment", help="run the full simulation pipeline"))
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        status = args.func(args)
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        sys.stderr.write(f"gwpp {args.command}: {exc}\n")
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        sys.stderr.write(f"gwpp {args.command}: runtime failure: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
