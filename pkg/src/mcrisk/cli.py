"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path


from .core import DomainError, KernelSpec
from .harness.config import load_config
from .harness.io import (
    DataError,
    canonical_json,
    emit_report,
    ingest_csv,
    load_model,
    rows_to_csv,
    save_model,
    write_dataset_csv,
)
from .harness.synthetic import GeneratorSpec, generate_synthetic
from .harness.tables import alpha_table
from .harness.verify import certify_model, fit_model, model_setting, run_verification
from .rademacher import (
    DEFAULT_DRAWS,
    mc_loss_class,
    mc_rademacher_cluster_component,
    mc_rademacher_rkhs_ball,
    mc_rademacher_subspace,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(conv):
    def parse(text):
        try:
            return [conv(t) for t in text.replace(",", " ").split()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _config(args):
    if not args.config:
        raise UsageError("--config is required for this command")
    return load_config(args.config)


# -- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.config:
        gen = _config(args).generator
    elif args.problem:
        gen = GeneratorSpec(args.problem)
    else:
        raise UsageError("generate needs --config or --problem")
    over = {k: v for k, v in {
        "n": args.n, "d": args.d, "C": args.components, "lambda_x": args.lambda_x,
        "noise": args.noise, "dims": tuple(args.dims) if args.dims else None,
    }.items() if v is not None}
    if args.problem:
        over["problem"] = args.problem
    gen = replace(gen, **over)
    data = generate_synthetic(gen, args.seed)
    if args.out:
        write_dataset_csv(data, args.out)
    else:
        from .harness.io import dataset_to_csv
        sys.stdout.write(dataset_to_csv(data))
    return EXIT_OK


def cmd_fit(args) -> int:
    config = _config(args)
    data = ingest_csv(args.data, args.lambda_x)
    seed = config.fit.seed if args.seed is None else args.seed
    model = fit_model(config, data, seed)
    save_model(model, args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    config = _config(args)
    data = ingest_csv(args.data, args.lambda_x)
    model = load_model(args.model)
    delta = config.delta if args.delta is None else args.delta
    mc = None
    if args.draws:
        mc = mc_loss_class(model_setting(model), data, config.constraint, model.C, args.draws,
                           args.seed or 0, kernel=getattr(model, "kernel", None))
    certs = certify_model(model, data, config.constraint, delta, mc,
                          config.clustering_m_policy, config.subspace_m_policy)
    if args.format == "csv":
        rows = []
        for tag, c in certs.items():
            row = c.to_dict()
            row.pop("provenance")
            rows.append(row)
        _emit(rows_to_csv(rows), args.out)
    elif args.format == "text":
        _emit("\n".join(c.to_text() for c in certs.values()), args.out)
    else:
        _emit(canonical_json({tag: c.to_dict() for tag, c in certs.items()}), args.out)
    return EXIT_OK


def cmd_rademacher(args) -> int:
    data = ingest_csv(args.data, args.lambda_x)
    draws, seed = args.draws, args.seed or 0
    if args.klass == "rkhs":
        kernel = KernelSpec(args.kernel, gamma=args.gamma, degree=args.degree, offset=args.offset)
        est = mc_rademacher_rkhs_ball(kernel(data.points, data.points), args.radius, draws, seed)
    elif args.klass == "cluster":
        est = mc_rademacher_cluster_component(data, args.radius, draws, seed)
    else:
        if args.dim is None:
            raise UsageError("--dim is required for the subspace class")
        est = mc_rademacher_subspace(data, args.dim, draws, seed)
    row = {"class": args.klass, "mean": est.mean, "std_error": est.std_error,
           "draws": est.draws, "closed_form_bound": est.closed_form_bound,
           "within_bound": est.within_bound}
    _emit(rows_to_csv([row]) if args.format == "csv" else canonical_json(row), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _config(args).with_overrides(
        trials=args.trials, seed=args.seed, delta=args.delta, workers=args.workers)
    report = run_verification(config)
    out = args.out or config.report_path
    if out:
        emit_report(report, out, args.format)
        if config.csv_path and args.format == "json":
            emit_report(report, config.csv_path, "csv")
    else:
        sys.stdout.write(canonical_json(report.to_dict()) if args.format == "json"
                         else rows_to_csv(report.flat_rows()))
    for tag, count in report.violation_counts.items():
        print(f"{tag}: {count}/{report.trials} violations "
              f"(probe: {report.probe_violation_counts[tag]}/{report.probe_evaluations})",
              file=sys.stderr)
    return EXIT_VIOLATION if report.any_violation else EXIT_OK


def cmd_alpha_table(args) -> int:
    rows = alpha_table(args.C, args.p)
    _emit(canonical_json(rows) if args.format == "json" else rows_to_csv(rows), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcrisk", description="Risk certificates for multi-component models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt=("json", "csv"), seed=True):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        if seed:
            p.add_argument("--seed", type=_u64, metavar="U64")
        p.add_argument("--format", choices=fmt, default=fmt[0])

    p = sub.add_parser("generate", help="sample a synthetic dataset to CSV")
    common(p, fmt=("csv",))
    p.set_defaults(seed=0)
    p.add_argument("--problem", choices=("switching", "clustering", "subspace"))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--C", dest="components", type=int)
    p.add_argument("--lambda-x", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--dims", type=_csv_list(int))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    p.add_argument("data")
    common(p, fmt=("json",))
    p.add_argument("--lambda-x", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("certify", help="risk certificates for a fitted model")
    p.add_argument("model")
    p.add_argument("data")
    common(p, fmt=("json", "csv", "text"))
    p.add_argument("--delta", type=float)
    p.add_argument("--lambda-x", type=float)
    p.add_argument("--draws", type=int, default=0,
                   help="Monte-Carlo draws for an extra Rademacher-based certificate (0 = skip)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("rademacher", help="Monte-Carlo Rademacher complexity of a component class")
    p.add_argument("data")
    common(p)
    p.add_argument("--class", dest="klass", choices=("rkhs", "cluster", "subspace"), required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--dim", type=int)
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    p.add_argument("--kernel", default="gaussian")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--offset", type=float, default=1.0)
    p.add_argument("--lambda-x", type=float)
    p.set_defaults(func=cmd_rademacher)

    p = sub.add_parser("verify", help="run the held-out certificate verification")
    common(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("alpha-table", help="tabulate alpha(C, p) against sum_k k^(-1/p)")
    common(p, fmt=("csv", "json"), seed=False)
    p.add_argument("--C", type=_csv_list(int), default=[2, 4, 8, 16, 32, 64, 100])
    p.add_argument("--p", type=_csv_list(str), default=["0.5", "1", "2", "inf"])
    p.set_defaults(func=cmd_alpha_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mcrisk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError, OSError, configparser.Error, json.JSONDecodeError) as exc:
        print(f"mcrisk: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
