"""Command-line experiment runner.

Subcommands: ``run`` (experiment from a config file), ``repro`` (a named
reproduction case with documented defaults), ``export`` and ``import``
(serialize and validate shift specs, sparse families, coefficient maps, and
step functions).  Exit status: 0 when every check passes, 1 on any failing
check, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import CASES, ExperimentConfig, default_config, run_experiment
from .grid import DyadicGrid, StepFunction, step_from_csv, step_to_csv
from .reporting import Report, report_to_csv, report_to_json
from .shifts import hilbert_as_shift, random_shift, shift_validate, spec_from_json, spec_to_json
from .sparse import (
    coefficients_from_json,
    family_from_json,
    family_to_json,
    sparse_from_stopping,
    sparse_validate,
)

USAGE_ERROR = 2


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--trials", type=int, default=None, help="trial count override")
    sub.add_argument(
        "--resolution", type=int, default=None, help="quadrature samples per cell"
    )
    sub.add_argument("--workers", type=int, default=None, help="parallel trial workers")
    sub.add_argument(
        "--maximal", choices=("full", "dyadic"), default=None,
        help="which maximal operator drives testing ratios",
    )
    sub.add_argument(
        "--format", choices=("csv", "json"), default="json", dest="fmt",
        help="report file format",
    )
    sub.add_argument("--out", type=Path, default=None, help="report output path")
    sub.add_argument(
        "--no-timestamp", action="store_true", help="omit the timestamp field"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoweight",
        description="Two-weight testing experiments on dyadic windows",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", type=Path, required=True, help="JSON config file")
    _add_common_flags(p_run)

    p_repro = subs.add_parser("repro", help="run a named reproduction case")
    p_repro.add_argument("case", choices=sorted(CASES), help="case identifier")
    _add_common_flags(p_repro)

    p_exp = subs.add_parser("export", help="serialize an object to a file")
    p_exp.add_argument(
        "--what",
        choices=("hilbert-spec", "random-shift", "stopping-family", "step"),
        required=True,
    )
    p_exp.add_argument("--out", type=Path, required=True)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--m", type=int, default=1)
    p_exp.add_argument("--k", type=int, default=1)
    p_exp.add_argument("--dimension", type=int, default=1)
    p_exp.add_argument("--top-level", type=int, default=0)
    p_exp.add_argument("--bottom-level", type=int, default=-6)

    p_imp = subs.add_parser("import", help="read a serialized object and validate it")
    p_imp.add_argument(
        "--what",
        choices=("shift-spec", "sparse-family", "coefficients", "step"),
        required=True,
    )
    p_imp.add_argument("--path", type=Path, required=True)
    return parser


def _emit_report(report: Report, args: argparse.Namespace) -> int:
    for line in report.lines():
        print(line)
    include_ts = not args.no_timestamp
    if args.out is not None:
        text = (
            report_to_json(report, include_ts)
            if args.fmt == "json"
            else report_to_csv(report, include_ts)
        )
        args.out.write_text(text)
        print(f"report written to {args.out}")
    else:
        print(report_to_json(report, include_ts))
    return 0 if report.passed else 1


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    from dataclasses import replace

    updates = {}
    for field in ("seed", "trials", "resolution", "workers", "maximal"):
        val = getattr(args, field, None)
        if val is not None:
            updates[field] = val
    return replace(config, **updates) if updates else config


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        data = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        config = ExperimentConfig.from_dict(data)
        config = _apply_overrides(config, args)
    except (TypeError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return _emit_report(run_experiment(config), args)


def _cmd_repro(args: argparse.Namespace) -> int:
    try:
        config = _apply_overrides(default_config(args.case), args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return _emit_report(run_experiment(config), args)


def _cmd_export(args: argparse.Namespace) -> int:
    grid = DyadicGrid(
        dimension=args.dimension,
        top_level=args.top_level,
        bottom_level=args.bottom_level,
    )
    rng = np.random.default_rng(args.seed)
    if args.what == "hilbert-spec":
        spec, gamma = hilbert_as_shift(grid)
        spec_to_json(spec, args.out)
        print(f"hilbert spec (gamma={gamma!r}) written to {args.out}")
    elif args.what == "random-shift":
        spec = random_shift(grid, args.m, args.k, seed=args.seed)
        spec_to_json(spec, args.out)
        print(f"random shift ({args.m},{args.k}) written to {args.out}")
    elif args.what == "stopping-family":
        f = StepFunction(grid, rng.uniform(0.0, 1.0, grid.shape) ** 4)
        family = sparse_from_stopping(f, grid.top_cube, 2.0)
        family_to_json(family, args.out)
        print(f"stopping family ({family.cube_count()} cubes) written to {args.out}")
    else:
        f = StepFunction(grid, rng.standard_normal(grid.shape))
        step_to_csv(f, args.out)
        print(f"step function written to {args.out}")
    return 0


def _cmd_import(args: argparse.Namespace) -> int:
    if not args.path.exists():
        print(f"error: no such file {args.path}", file=sys.stderr)
        return USAGE_ERROR
    if args.what == "shift-spec":
        spec = spec_from_json(args.path)
        report = shift_validate(spec)
        print(
            f"shift spec: type ({spec.m},{spec.k}), complexity {spec.complexity}, "
            f"{sum(len(t) for t in spec.terms.values())} terms, gamma={spec.gamma!r}"
        )
    elif args.what == "sparse-family":
        family = family_from_json(args.path)
        report = sparse_validate(family)
        print(
            f"sparse family: {len(family.generations)} generations, "
            f"{family.cube_count()} cubes"
        )
    elif args.what == "coefficients":
        alpha = coefficients_from_json(args.path)
        print(f"coefficient map: {len(alpha.weights)} nonzero entries")
        return 0
    else:
        f = step_from_csv(args.path)
        print(
            f"step function: {f.grid.cell_count} cells on "
            f"[{f.grid.shift[0]}, {f.grid.shift[0] + 2.0 ** f.grid.top_level})"
        )
        return 0
    if not report.ok:
        for v in report.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 1
    print("validation: ok")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "repro": _cmd_repro,
        "export": _cmd_export,
        "import": _cmd_import,
    }
    try:
        return handlers[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
