# kincal/cli.py
"""
CLI de kincal

    kincal run --config <path> --mode bo|random|both --out <dir> [--seed N]
    kincal kernel-check --config <path> --out <dir>
    kincal calibrate --config <path> --data <csv> --out <dir>
    kincal compare --config <path> --seeds N --out <dir>

Códigos de salida: 0 ok, 1 error de kincal, 2 error inesperado.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from kincal import __version__
from kincal.core.config import settings
from kincal.core.exceptions import KincalError
from kincal.core.logging import configure_logging
from kincal.schemas.results import RunMode
from kincal.services.experiment_service import (
    ExperimentService,
    compare,
    load_config,
    resolve_seed,
    run_experiment,
)
from kincal.services.kernel_check_service import run_kernel_check
from kincal.services.results_writer import read_measurements_csv, write_json

logger = logging.getLogger(__name__)


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    results = run_experiment(config, mode=args.mode, out_dir=args.out, seed=args.seed)
    for mode, result in results.results.items():
        print(f"{mode.value}: final objective {result.summary.final_objective:.6f}")
    return 0


def _cmd_kernel_check(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    report = run_kernel_check(config, seed=resolve_seed(config, args.seed))
    path = write_json(Path(args.out) / "kernel_check.json", report)
    print(f"kernel check {'PASSED' if report.passed else 'FAILED'} ({path})")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    service = ExperimentService(config, seed=args.seed)
    measurements = read_measurements_csv(args.data, config.n_joints)
    result = service.calibrate_measurements(measurements)
    path = write_json(Path(args.out) / "calibration.json", result)
    print(f"calibration {'converged' if result.converged else 'stopped'}: residual RMS {result.residual_rms:.3e} ({path})")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seeds = args.seeds if args.seed is None else [args.seed + i for i in range(args.seeds)]
    report = compare(config, seeds=seeds, out_dir=args.out)
    print(
        f"median |final objective|: bo={report.bo_median_abs_final:.6f}, "
        f"random={report.random_median_abs_final:.6f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kincal",
        description="Experimental design for kinematic calibration with GP-UCB on poses",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="override KINCAL_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = True) -> None:
        p.add_argument("--config", type=Path, default=settings.DEFAULT_CONFIG, help="experiment JSON")
        p.add_argument("--out", type=Path, default=settings.OUTPUT_DIR, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="overrides KINCAL_SEED and the config seed")

    run = sub.add_parser("run", help="run the design loop and the final calibration")
    common(run)
    run.add_argument("--mode", choices=[m.value for m in RunMode], default=RunMode.BOTH.value)
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("kernel-check", help="kernel validity report")
    common(check)
    check.set_defaults(func=_cmd_kernel_check)

    cal = sub.add_parser("calibrate", help="offline calibration from a measurement CSV")
    common(cal)
    cal.add_argument("--data", type=Path, required=True, help="measurement CSV (theta_*, qw..qz, px..pz)")
    cal.set_defaults(func=_cmd_calibrate)

    cmp_ = sub.add_parser("compare", help="BO vs random over paired seeds")
    common(cmp_)
    cmp_.add_argument("--seeds", type=int, default=10, help="number of paired seeds")
    cmp_.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.func(args)
    except KincalError as e:
        print(f"error [{e.code}]: {e.message}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
