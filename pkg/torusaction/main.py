"""Command-line entry point."""
import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from torusaction.exceptions import ConfigurationError, TorusActionError
from torusaction.handlers.command_handler import COMMANDS, CommandHandler
from torusaction.storage.file_storage import FileReportStore
from torusaction.utils.config import Config

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def parse_tolerances(values: Optional[List[str]]) -> Dict[str, Any]:
    """Parse --tol entries: KEY=VALUE pairs, or a bare number for `quad`."""
    overrides: Dict[str, Any] = {}
    for entry in values or []:
        key, sep, value = entry.partition('=')
        if not sep:
            key, value = 'quad', entry
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise ConfigurationError(f"Invalid tolerance override: {entry}")
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='torusaction',
        description='Linking numbers, rotation vectors and action functions of torus isotopies.',
    )
    parser.add_argument('command', choices=COMMANDS + ('suite',))
    parser.add_argument('target', nargs='?',
                        help='scenario file, or scenario directory for suite')
    parser.add_argument('--config', default='data/config.json', help='configuration file')
    parser.add_argument('--grid', type=int, help='quadrature grid size N')
    parser.add_argument('--seed', type=int, help='seed for the deterministic jitter')
    parser.add_argument('--tol', action='append', metavar='T',
                        help='tolerance override KEY=VALUE, or a number for quad')
    parser.add_argument('--out', help='report output directory')
    parser.add_argument('--threads', type=int, help='worker threads')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    return parser


async def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line; returns the exit code."""
    config = Config(args.config)
    store = FileReportStore(args.out or config.reports_dir)
    handler = CommandHandler(store, config, grid=args.grid, seed=args.seed,
                             tol_overrides=parse_tolerances(args.tol), threads=args.threads)

    if args.command == 'suite':
        result = await handler.run_suite(args.target or config.scenarios_dir)
        for line in result.lines:
            print(line)
        print(f"{'PASS' if result.passed else 'FAIL'}: {len(result.reports)} scenarios")
        return EXIT_OK if result.passed else EXIT_FAILED

    if not args.target:
        raise ConfigurationError(f"Command {args.command} needs a scenario file")
    report = await handler.run(args.target, args.command)
    summary = {r.operation: r.value for r in report.results}
    print(json.dumps(summary, indent=2, default=str))
    if report.command == 'verify' and not report.passed:
        failed = [name for name, ok in report.verdicts.items() if not ok]
        logger.error("Verification failed for %s: %s", report.scenario, ", ".join(failed))
        return EXIT_FAILED
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return asyncio.run(run(args))
    except TorusActionError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
