"""Command-line entry point: ``debias-cl {gen-data,train,eval,analyze,grad-check,report}``.

Exit codes: 0 ok, 2 configuration or protocol error, 3 missing/corrupt/mismatched input,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

from .adapters.checkpoint import load_checkpoint
from .adapters.dataset_file import read_dataset
from .adapters.report_files import write_comparison, write_report
from .config.loader import load_document
from .config.specs import RunSpec, resolve_run_spec
from .core.errors import (
    ConfigError,
    DatasetError,
    DebiasCLError,
    DegenerateVectorError,
    DimensionError,
    DomainError,
    NumericFailure,
)
from .core.grad_suite import run_gradient_suite
from .core.types import SessionRange
from .features.report import build_comparison, render_comparison
from .features.retrieval import evaluate_step
from .features.synth import format_digest, generate
from .runtime.experiment import (
    execute_analysis,
    execute_run,
    load_manifest,
    load_run_rows,
    load_run_spec,
    write_generated_dataset,
)
from .runtime.presets import METHODS, PRESETS

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

GRAD_TOLERANCE = 1e-5

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_common(parser: argparse.ArgumentParser, *, nested: bool) -> None:
    # on subcommands the flags only override what was given before the subcommand
    def default(value: object) -> object:
        return argparse.SUPPRESS if nested else value

    parser.add_argument("--config", type=Path, default=default(None), help="JSON/YAML/INI experiment config")
    parser.add_argument("--out", type=Path, default=default(None), help="output directory")
    parser.add_argument("--seed", type=int, default=default(None), help="overrides data, run and retrieval seeds")
    parser.add_argument("--preset", choices=sorted(PRESETS), default=default(None))
    parser.add_argument("--method", choices=sorted(METHODS), default=default(None))
    parser.add_argument("--log-level", choices=_LOG_LEVELS, default=default("WARNING"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debias-cl", description="De-biased continual alignment experiments")
    _add_common(parser, nested=False)
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="generate the synthetic session dataset")
    _add_common(gen, nested=True)

    train = commands.add_parser("train", help="run the continual-learning protocol")
    _add_common(train, nested=True)
    train.add_argument("--dataset", type=Path, default=None, help="train on an existing dataset file")
    train.add_argument("--no-plots", action="store_true")

    evaluate = commands.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_common(evaluate, nested=True)
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--dataset", type=Path, required=True)
    evaluate.add_argument("--range", dest="session_range", default=None, help="sessions 'a-b' (default: all)")

    analyze = commands.add_parser("analyze", help="behavioural decline and per-window retrieval")
    _add_common(analyze, nested=True)
    source = analyze.add_mutually_exclusive_group()
    source.add_argument("--dataset", type=Path, default=None)
    source.add_argument("--run", type=Path, default=None, help="run directory whose config is reused")
    analyze.add_argument("--no-windows", action="store_true", help="skip training the per-window models")
    analyze.add_argument("--no-plots", action="store_true")

    grad = commands.add_parser("grad-check", help="finite-difference check of every objective")
    _add_common(grad, nested=True)
    grad.add_argument("--instances", type=int, default=20)

    report = commands.add_parser("report", help="merge run directories into a comparison table")
    _add_common(report, nested=True)
    report.add_argument("runs", nargs="+", type=Path)
    return parser


def _resolve_spec(args: argparse.Namespace) -> RunSpec:
    document = load_document(args.config) if args.config is not None else None
    return resolve_run_spec(document, preset=args.preset, method=args.method, seed=args.seed, out_dir=args.out)


def _out_dir(args: argparse.Namespace, spec: RunSpec) -> Path:
    if args.out is not None:
        return Path(args.out)
    if spec.out_dir:
        return Path(spec.out_dir)
    return Path("runs") / spec.name


def cmd_gen_data(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    path, stats = write_generated_dataset(spec, _out_dir(args, spec))
    print(format_digest(stats))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    out_dir = _out_dir(args, spec)
    artifacts = execute_run(spec, out_dir, dataset_path=args.dataset, plots=not args.no_plots)
    print(f"{spec.name} {spec.protocol.label} -> {artifacts.out_dir}")
    with artifacts.report.open("r", encoding="utf-8") as handle:
        sys.stdout.write(handle.read())
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    checkpoint = load_checkpoint(args.checkpoint)
    config = checkpoint.params.config
    dataset = read_dataset(args.dataset, expect_dims=(config.input_dim, config.output_dim))
    if args.session_range:
        try:
            span = SessionRange.parse(args.session_range)
        except DomainError as exc:
            raise ConfigError(str(exc), key="--range") from exc
    else:
        span = SessionRange(1, dataset.header.n_sessions)
    rows = evaluate_step(checkpoint.params, dataset, span, spec.retrieval, step=checkpoint.step, threads=None)
    for row in rows:
        print(f"{row.direction.value} {row.top1:.6f}")
    if args.out is not None:
        write_report(rows, Path(args.out) / "eval.csv")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.run is not None:
        spec = load_run_spec(args.run)
        source = load_manifest(args.run)["dataset"]["source"]
        dataset = generate(spec.data) if source == "generated" else read_dataset(source)
        out_dir = Path(args.out) if args.out is not None else args.run / "analysis"
    else:
        spec = _resolve_spec(args)
        dataset = read_dataset(args.dataset) if args.dataset is not None else generate(spec.data)
        out_dir = _out_dir(args, spec) / "analysis"
    artifacts = execute_analysis(spec, dataset, out_dir, windows=not args.no_windows, plots=not args.no_plots)
    reports = [artifacts.behavior] + ([artifacts.windows] if artifacts.windows is not None else [])
    for report in reports:
        for fit in report.fits:
            flag = " (ties)" if fit.ties else ""
            print(f"{fit.metric}: slope={fit.slope:.6f} rho={fit.spearman_rho:.3f}{flag}")
    print(f"wrote {out_dir}")
    return EXIT_OK


def cmd_grad_check(args: argparse.Namespace) -> int:
    if args.instances < 1:
        raise ConfigError("must be >= 1", key="--instances")
    cases = run_gradient_suite(instances=args.instances, seed=args.seed or 0)
    worst = 0.0
    for case in cases:
        print(f"{case.name:<24} {case.max_error:.3e}")
        worst = max(worst, case.max_error)
    print(f"max relative error {worst:.3e}")
    return EXIT_OK if worst < GRAD_TOLERANCE else EXIT_NUMERIC


def cmd_report(args: argparse.Namespace) -> int:
    table = build_comparison([load_run_rows(run_dir) for run_dir in args.runs])
    print(render_comparison(table))
    target = write_comparison(table, Path(args.out or ".") / "comparison.csv")
    print(f"wrote {target}")
    return EXIT_OK


_COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "grad-check": cmd_grad_check,
    "report": cmd_report,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (NumericFailure, DegenerateVectorError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, (DatasetError, DimensionError, OSError)):
        return EXIT_IO
    return EXIT_CONFIG


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (DebiasCLError, OSError) as exc:
        code = exit_code_for(exc)
        _LOGGER.error("command_failed", extra={"event": "command_failed", "command": args.command, "exit_code": code})
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(run())
