"""Command-line interface.

    vicinal run   --config FILE [--out-dir DIR] [--format csv|json]
    vicinal sweep --config FILE [--out-dir DIR] [--format csv|json]
    vicinal check [--quick] [--out-dir DIR]

Exit codes: 0 success, 1 verdict failure, 2 configuration error,
3 numerical failure (collision, step-size underflow, NaN, singular solve).
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vicinal",
        description="Step-flow and continuum slope dynamics on vicinal surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out-dir", default=None)
    run.add_argument("--format", default=None, choices=("csv", "json"))

    sweep = sub.add_parser("sweep", help="run an epsilon sweep from a JSON config")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out-dir", default=None)
    sweep.add_argument("--format", default=None, choices=("csv", "json"))

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("--quick", action="store_true",
                       help="reduced parameters (smoke pass)")
    check.add_argument("--out-dir", default=None,
                       help="also write acceptance results as JSON")
    return parser


def _run_config(args, force_kind=None):
    from .harness import load_config, run_experiment

    cfg = load_config(args.config)
    if force_kind and cfg.kind != force_kind:
        raise ConfigError(
            f"this subcommand expects kind={force_kind}, config says {cfg.kind}"
        )
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.format:
        cfg.format = args.format
    artifacts = run_experiment(cfg)
    failed = [v for v in artifacts.verdicts if not v.satisfied]
    for v in artifacts.verdicts:
        status = "ok  " if v.satisfied else "FAIL"
        print(f"{status} {v.name}: lhs={v.lhs:.6g} rhs={v.rhs:.6g}")
    print(f"artifacts in {Path(artifacts.metadata_path).parent}")
    return EXIT_VERDICT if failed else EXIT_OK


def _run_check(args):
    from .checks import run_acceptance

    results = run_acceptance(quick=args.quick, verbose=True)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "acceptance.json").write_text(json.dumps(
            [{"index": r.index, "name": r.name, "passed": r.passed,
              "detail": r.detail} for r in results], indent=1))
    n_failed = sum(0 if r.passed else 1 for r in results)
    print(f"{len(results) - n_failed}/{len(results)} criteria passed")
    return EXIT_VERDICT if n_failed else EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_config(args)
        if args.command == "sweep":
            return _run_config(args, force_kind="eps_sweep")
        if args.command == "check":
            return _run_check(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
