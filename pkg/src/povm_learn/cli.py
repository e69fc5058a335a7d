"""Command-line entry point: ``povm-learn run | validate | bounds``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import experiments
from .calculus import ChannelError
from .data import DistributionError
from .learners import LearnerError
from .quantum import QuantumError
from .zoo import ClassSpecError, load_class

EXIT_OK = 0
EXIT_CRITERION = 2
EXIT_CONFIG = 3

_CONFIG_ERRORS = (experiments.ConfigError, ClassSpecError, DistributionError, QuantumError, ChannelError,
                  LearnerError, OSError, json.JSONDecodeError)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors, keeping exit code 2 for missed criteria
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="povm-learn", description="Quantum measurement-class learning experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("experiment", help=", ".join(sorted(experiments.EXPERIMENTS)))
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=_u64, required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--svg", action="store_true", help="also write curves.svg")
    v = sub.add_parser("validate", help="check a class description file")
    v.add_argument("class_file")
    b = sub.add_parser("bounds", help="print the bounds report as CSV")
    b.add_argument("--config", required=True)
    b.add_argument("--seed", type=_u64, default=None)
    return p


def _cmd_run(args) -> int:
    cfg = experiments.ExperimentConfig.load(args.config, seed=args.seed, output_dir=args.out)
    if cfg.experiment != args.experiment:
        raise experiments.ConfigError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    rec = experiments.run(cfg)
    experiments.write_outputs(rec, args.out, svg=args.svg)
    for c in rec.criteria:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  (value={c['value']})")
    print(f"record {rec.record_hash[:16]}  wall {rec.wall_time:.1f}s")
    return EXIT_OK if rec.passed else EXIT_CRITERION


def _cmd_validate(args) -> int:
    cls = load_class(args.class_file)
    for i in range(len(cls)):
        cls.member(i)
    print(json.dumps({"variant": cls.variant, "dim": cls.dim, "members": len(cls),
                      "domain": type(cls.domain).__name__}))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = experiments.ExperimentConfig.load(args.config, seed=args.seed)
    if cfg.experiment != "bounds_report":
        raise experiments.ConfigError("bounds needs a bounds_report config")
    rec = experiments.run(cfg)
    w = csv.writer(sys.stdout)
    w.writerow(experiments.BoundReport.CSV_HEADER)
    for row in experiments.standard_bounds():
        w.writerow(row.csv_row())
    for c in rec.criteria:
        print(f"# {'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    return EXIT_OK if rec.passed else EXIT_CRITERION


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "bounds": _cmd_bounds}[args.command]
    try:
        return handler(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
