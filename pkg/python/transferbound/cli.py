"""
Command line interface, use as ``python -m transferbound <command> ...``.

Exit codes: 0 on success, 1 if a bound is violated or a verdict is contradicted
by simulation, 2 on invalid inputs, 3 if a campaign did not converge, 4 on a numerical
failure (a singular gram matrix, failed root finding).
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List
from typing import Optional

import pydantic

import transferbound
from transferbound import harness
from transferbound import lti
from transferbound.benchmark import timeit
from transferbound.logginging import configure_logging

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_NUMERICAL_FAILURE = 4


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--catalog",
        type=Path,
        default=None,
        help="path to a JSON catalog of systems; default to the built-in catalog",
    )
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="path to a JSON config; default to the built-in defaults",
    )
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path.cwd(),
        help="directory where the artifacts are written",
    )


def get_cli(argv: Optional[List[str]] = None) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else argv
    parser = argparse.ArgumentParser(
        "transferbound",
        description="Estimate and verify tracking-error bounds of transferred inverse models.",
    )
    parser.add_argument("--version", action="version", version=transferbound.__version__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="display debug messages"
    )
    parser.add_argument(
        "--no-color", action="store_true", help="don't color the log messages"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparser = subparsers.add_parser("estimate", help="estimate the error bound of every source")
    _add_common_arguments(subparser)
    subparser.add_argument("--seed", type=int, default=0)
    subparser.add_argument(
        "--max-iters", type=int, default=None, help="override the iteration budget of a campaign"
    )
    subparser.add_argument(
        "--jobs", type=int, default=1, help="number of axis campaigns run in parallel"
    )

    subparser = subparsers.add_parser("verify", help="check estimated bounds on trajectories")
    _add_common_arguments(subparser)
    subparser.add_argument(
        "--estimates", type=Path, required=True, help="estimates.json written by 'estimate'"
    )
    subparser.add_argument(
        "--suite",
        type=Path,
        default=None,
        help="JSON trajectory suite; default to 5 random trajectories",
    )
    subparser.add_argument("--seed", type=int, default=0)

    subparser = subparsers.add_parser(
        "asymmetry", help="decompose the error of a pair and simulate the transfer both ways"
    )
    _add_common_arguments(subparser)
    subparser.add_argument(
        "pair", nargs=2, metavar=("TARGET", "SOURCE"), help="names of two catalog systems"
    )
    subparser.add_argument("--axis", default="x", choices=harness.AXES)
    subparser.add_argument("--grid-size", type=int, default=1000)
    subparser.add_argument(
        "--omega", type=float, default=1.0, help="frequency of the simulated sinusoid, rad/s"
    )

    subparser = subparsers.add_parser("oracle", help="dense-grid reference of the error bounds")
    _add_common_arguments(subparser)
    subparser.add_argument(
        "--grid-size", type=int, default=None, help="override the oracle grid size of the config"
    )

    subparser = subparsers.add_parser("init", help="write editable default input files")
    subparser.add_argument("--out-dir", type=Path, default=Path.cwd())
    subparser.add_argument("--force", action="store_true", help="overwrite existing files")

    return parser.parse_args(argv)


def _run(cli: argparse.Namespace) -> int:
    if cli.command == "estimate":
        result = harness.cmd_estimate(
            catalog_path=cli.catalog,
            config_path=cli.config,
            seed=cli.seed,
            out_dir=cli.out_dir,
            max_iterations=cli.max_iters,
            jobs=cli.jobs,
        )
        if not result.converged:
            LOGGER.error("at least one campaign did not converge, estimates are partial")
            return EXIT_NOT_CONVERGED
        return EXIT_OK

    if cli.command == "verify":
        result = harness.cmd_verify(
            catalog_path=cli.catalog,
            estimates_path=cli.estimates,
            suite_path=cli.suite,
            seed=cli.seed,
            out_dir=cli.out_dir,
            config_path=cli.config,
        )
        return EXIT_OK if result.passed else EXIT_VIOLATION

    if cli.command == "asymmetry":
        harness.cmd_asymmetry(
            catalog_path=cli.catalog,
            pair=tuple(cli.pair),
            out_dir=cli.out_dir,
            axis=cli.axis,
            grid_size=cli.grid_size,
            config_path=cli.config,
            demo_omega=cli.omega,
        )
        return EXIT_OK

    if cli.command == "oracle":
        harness.cmd_oracle(
            catalog_path=cli.catalog,
            out_dir=cli.out_dir,
            grid_size=cli.grid_size,
            config_path=cli.config,
        )
        return EXIT_OK

    if cli.command == "init":
        harness.cmd_init(cli.out_dir, force=cli.force)
        return EXIT_OK

    raise ValueError(f"unsupported command '{cli.command}'")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and return its exit code instead of exiting.
    """
    cli = get_cli(argv)
    configure_logging(
        level=logging.DEBUG if cli.verbose else logging.INFO,
        colored=not cli.no_color,
    )
    LOGGER.debug(f"started {cli.command} with {vars(cli)}")

    try:
        with timeit(f"{cli.command} finished in ", LOGGER.info):
            return _run(cli)
    except harness.CatalogError as error:
        LOGGER.error(str(error))
        return EXIT_INVALID_INPUT
    except pydantic.ValidationError as error:
        LOGGER.error(f"invalid input file:\n{error}")
        return EXIT_INVALID_INPUT
    except (lti.ImproperSystemError, lti.UnstableSystemError) as error:
        LOGGER.error(str(error))
        return EXIT_INVALID_INPUT
    except (ValueError, FileNotFoundError, FileExistsError) as error:
        LOGGER.error(str(error))
        return EXIT_INVALID_INPUT
    except RuntimeError as error:
        LOGGER.exception(f"numerical failure: {error}")
        return EXIT_NUMERICAL_FAILURE
