"""Command-line front end: reservoir simulate | sweep | figures"""

import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

from . import runner
from .artifacts import RunManifest
from .catalogue import close_catalogue, open_catalogue, record_run
from .config import METHODS, SWEEP_AXES, load_config, parse_values
from .errors import ConfigurationError, InvalidStateError, NumericalQualityError, ReservoirError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIGURATION = 2
EXIT_QUALITY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reservoir", description="Atom-reservoir entanglement in a Lorentzian structured reservoir")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run one scenario")
    simulate.add_argument("--config", required=True, help="scenario INI file")
    simulate.add_argument("--out", help="output directory (overrides [output] directory)")
    simulate.add_argument("--method", choices=METHODS, help="overrides [output] method")
    simulate.add_argument("--catalogue", help="SQLite file to record the run in")

    sweep = commands.add_parser("sweep", help="run a scenario over a list of values of one parameter")
    sweep.add_argument("--config", required=True, help="base scenario INI file")
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--workers", type=int, help=f"parallel points (default ${runner.WORKERS_ENV} or the CPU count)")
    sweep.add_argument("--out", help="output directory (overrides [output] directory)")
    sweep.add_argument("--method", choices=METHODS, help="overrides [output] method")
    sweep.add_argument("--catalogue", help="SQLite file to record the runs in")

    figures = commands.add_parser("figures", help="emit plot-ready data for one figure")
    figures.add_argument("--which", required=True, help=f"one of {', '.join(runner.FIGURES)}")
    figures.add_argument("--out", required=True, help="output directory")
    return parser


def _load(args: argparse.Namespace):
    config = load_config(args.config)
    overrides = {}
    if args.out:
        overrides["directory"] = args.out
    if args.method:
        overrides["method"] = args.method
    return dataclasses.replace(config, **overrides) if overrides else config


def _record(path: Optional[str], manifests: List[RunManifest], kind: str, labels: List[Optional[str]]):
    if not path:
        return
    session = open_catalogue(path)
    try:
        for manifest, label in zip(manifests, labels):
            record_run(session, manifest, kind, label)
    finally:
        close_catalogue(session)


def _simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    try:
        manifest = runner.run_scenario(config)
    except NumericalQualityError as exc:
        if exc.manifest is not None:
            _record(args.catalogue, [exc.manifest], "simulate", [None])
        raise
    _record(args.catalogue, [manifest], "simulate", [None])
    logger.info("Wrote %d files to %s", len(manifest.files), config.directory)
    return EXIT_OK


def _sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    result = runner.run_sweep(config, args.axis, parse_values(args.values), workers=args.workers)
    recorded = [point for point in result.points if point.manifest is not None]
    _record(args.catalogue, [point.manifest for point in recorded], "sweep", [point.label for point in recorded])
    if result.failed:
        labels = ", ".join(point.label for point in result.failed)
        raise NumericalQualityError(f"sweep points failed: {labels}", {"failed": [point.label for point in result.failed]})
    logger.info("Sweep summary written to %s", result.summary_path)
    return EXIT_OK


def _figures(args: argparse.Namespace) -> int:
    records = runner.emit_figure_data(args.which, args.out)
    logger.info("Wrote %s to %s", ", ".join(record.name for record in records), args.out)
    return EXIT_OK


COMMANDS = {
    "simulate": _simulate,
    "sweep": _sweep,
    "figures": _figures,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIGURATION
    except (NumericalQualityError, InvalidStateError) as exc:
        logger.error("Numerical quality failure: %s", exc)
        return EXIT_QUALITY
    except ReservoirError as exc:
        logger.error("Run failed: %s", exc)
        return EXIT_QUALITY


if __name__ == "__main__":
    sys.exit(main())
