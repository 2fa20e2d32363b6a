"""
ferrosim entry point: train, calibrate and eval subcommands.

    python -m cli.main train --config run.toml --train-subset 2000 --test-subset 500
    python -m cli.main calibrate --rows 64 --cols 64 --cycles 100
    python -m cli.main eval --from runs/latest
"""
import argparse
import os
import sys
import traceback
from typing import List, Optional

# Add parent directory to path
REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, REPO_ROOT)

from cli.config import apply_overrides, parse_config
from cli.experiment import run_calibration, run_evaluation, run_experiment
from shared.errors import FerrosimError
from trainer.models.network import UPDATE_MODES


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help="TOML experiment config")
    parser.add_argument('--seed', type=int, help="Master seed (u64)")
    parser.add_argument('--model', help="Macro-model parameter file, 'noiseless' or 'default'")
    parser.add_argument('--out', dest='out_dir', help="Output directory (default $FERROSIM_OUT_DIR or runs/latest)")
    parser.add_argument('--test-subset', type=int, help="Use only the first N test samples")
    parser.add_argument('--test-images', help="IDX test images (default from $FERROSIM_DATA_DIR)")
    parser.add_argument('--test-labels', help="IDX test labels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ferrosim',
        description="FeFET hybrid-precision training simulator",
    )
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help="Train an MLP on MNIST with FeFET crossbar weights")
    _add_common_flags(train)
    train.add_argument('--epochs', type=int)
    train.add_argument('--mode', choices=UPDATE_MODES)
    train.add_argument('--train-subset', type=int, help="Use only the first N training samples")
    train.add_argument('--train-images', help="IDX training images")
    train.add_argument('--train-labels', help="IDX training labels")
    train.add_argument('--debug-dump', action='store_true', default=None,
                       help="Write per-layer accumulator and sign grids after training")

    calibrate = sub.add_parser('calibrate', help="Simulate or ingest calibration readings and fit the macro-model")
    _add_common_flags(calibrate)
    calibrate.add_argument('--rows', type=int, dest='calibration_rows')
    calibrate.add_argument('--cols', type=int, dest='calibration_cols')
    calibrate.add_argument('--cycles', type=int, dest='calibration_cycles')
    calibrate.add_argument('--measurements', help="Fit this measurement CSV instead of simulating")

    evaluate = sub.add_parser('eval', help="Evaluate a finished run's dumped model")
    _add_common_flags(evaluate)
    evaluate.add_argument('--from', dest='source_dir', required=True, help="Run directory to evaluate")
    return parser


def _origin(error: BaseException) -> str:
    """Top-level package of the innermost repo frame that raised the error."""
    for frame in reversed(traceback.extract_tb(error.__traceback__)):
        path = os.path.abspath(frame.filename)
        if path.startswith(REPO_ROOT + os.sep):
            return os.path.relpath(path, REPO_ROOT).split(os.sep)[0].removesuffix('.py')
    return 'ferrosim'


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: value for key, value in vars(args).items()
        if key not in ('command', 'config', 'measurements', 'source_dir')
    }
    try:
        config = apply_overrides(parse_config(args.config), **overrides)
        if args.command == 'train':
            return run_experiment(config)
        if args.command == 'calibrate':
            return run_calibration(config, args.measurements)
        return run_evaluation(config, args.source_dir)
    except (FerrosimError, OSError) as e:
        print(f"❌ {_origin(e)}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
