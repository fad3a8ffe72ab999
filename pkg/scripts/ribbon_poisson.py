#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ribbon-poisson - command-line front end

Subcommands:
    axioms        r-matrix axioms for a range of k
    verify        Poisson-structure verification suites on ribbon graphs
    ruijsenaars   minimal-leaf checks and flows on the one-holed torus
    graph         validate / surface / faces / move / gallery
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional


def get_project_root():
    """Get the project root directory"""
    current_file = Path(__file__).resolve()
    return current_file.parent.parent


def setup_environment():
    """Make the src package importable when run from a checkout"""
    project_root = get_project_root()
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))
    return project_root


setup_environment()

from src.core.commands import (EXIT_USAGE, GRAPH_ACTIONS, RUIJSENAARS_ACTIONS, CommandResult,  # noqa: E402
                               error_result, run_command)
from src.core.exceptions import RibbonPoissonError  # noqa: E402
from src.core.config_manager import SUITES, ConfigManager, RunConfig  # noqa: E402
from src.core.report_writer import ReportWriter, print_summary  # noqa: E402
from src.utils.logger import PACKAGE_LOGGER, get_logger  # noqa: E402
from src.utils.validators import parse_complex, parse_complex_list, parse_k_range  # noqa: E402

DEFAULT_CONFIG = str(get_project_root() / "config" / "default_config.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with errors routed through the JSON error report"""

    def error(self, message):
        raise UsageError(message)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--k', type=str, default=None, help='Matrix size (axioms also accepts a range such as 2..4)')
    parser.add_argument('--flavor', choices=['sl', 'gl', 'SL', 'GL'], default=None, help='Structure group')
    parser.add_argument('--seed', type=lambda s: int(s, 0), default=None,
                        help='Run seed (default: $RP_DEFAULT_SEED, then the configured seed)')
    parser.add_argument('--samples', type=int, default=None, help='Samples per suite')
    parser.add_argument('--tol', type=float, default=None, help='Override the tolerance of the selected check')
    parser.add_argument('--out', type=str, default=None, help='Output file (default: stdout)')
    parser.add_argument('--config', type=str, default=DEFAULT_CONFIG, help='Configuration file')
    parser.add_argument('--log-level', type=str, default=None, help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--summary', action='store_true', help='Print a readable summary to stderr')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='ribbon-poisson', description='Poisson structures on ribbon-graph connections')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    axioms = sub.add_parser('axioms', help='Check CYBE, symmetric part and Casimir completeness')
    _common(axioms)

    verify = sub.add_parser('verify', help='Run Poisson-structure verification suites')
    _common(verify)
    verify.add_argument('--suite', choices=list(SUITES) + ['all'], default='all')
    verify.add_argument('--graph', type=str, default=None, help='Named graph or graph JSON file')
    verify.add_argument('--move', type=str, default=None, help='Move as JSON or shorthand (glue:1,2)')
    verify.add_argument('--assignment', choices=['polyuble', 'uniform'], default=None,
                        help='Vertex r-matrices for move-poisson')
    verify.add_argument('--face', type=str, default=None, help='Face ends for leaf-submanifold, comma separated')
    verify.add_argument('--sample-index', type=int, default=None, help='Replay one sample')

    ruij = sub.add_parser('ruijsenaars', help='Minimal-leaf checks on the one-holed torus')
    ruij.add_argument('action', choices=RUIJSENAARS_ACTIONS)
    _common(ruij)
    ruij.add_argument('--lambda', dest='lam', type=parse_complex_list, default=None, help='Eigenvalues of A')
    ruij.add_argument('--q', type=parse_complex_list, default=None, help='Diagonal of B before rescaling')
    ruij.add_argument('--x', type=parse_complex, default=None, help='Hole-monodromy parameter')
    ruij.add_argument('--leaf', type=str, default=None, help='Leaf spec JSON file')
    ruij.add_argument('--times', type=parse_complex_list, default=None, help='Flow times t_1..t_{k-1}')
    ruij.add_argument('--steps', type=int, default=None, help='Trajectory steps')
    ruij.add_argument('--hamiltonian', action='store_true', help='Use the Hamiltonian flow orientation')
    ruij.add_argument('--sample-index', type=int, default=None, help='Replay one sample')

    graph = sub.add_parser('graph', help='Ribbon-graph utilities')
    graph.add_argument('action', choices=GRAPH_ACTIONS)
    _common(graph)
    graph.add_argument('--name', type=str, default=None, help='Named graph')
    graph.add_argument('--graph', type=str, default=None, help='Graph JSON file')
    graph.add_argument('--move', type=str, default=None, help='Move as JSON or shorthand')
    return parser


def resolve_config(args: argparse.Namespace, manager: ConfigManager) -> RunConfig:
    k_range = parse_k_range(args.k) if args.k is not None else None
    if k_range is not None and len(k_range) > 1 and args.command != 'axioms':
        raise UsageError("a k range is only accepted by axioms")
    suite = getattr(args, 'suite', None)
    if args.command in ('ruijsenaars', 'axioms'):
        suite = args.action if args.command == 'ruijsenaars' else 'axioms'
    options = {
        'k_range': k_range,
        'action': getattr(args, 'action', None),
        'move': getattr(args, 'move', None),
        'assignment': getattr(args, 'assignment', None),
        'face': getattr(args, 'face', None),
        'sample_index': getattr(args, 'sample_index', None),
        'name': getattr(args, 'name', None),
        'lam': getattr(args, 'lam', None),
        'q': getattr(args, 'q', None),
        'x': getattr(args, 'x', None),
        'leaf': getattr(args, 'leaf', None),
        'times': getattr(args, 'times', None),
        'steps': getattr(args, 'steps', None),
        'hamiltonian': getattr(args, 'hamiltonian', False) or None,
    }
    return RunConfig.build(
        args.command, manager,
        k=k_range[0] if k_range else None,
        flavor=args.flavor,
        graph=getattr(args, 'graph', None),
        seed=args.seed,
        samples=args.samples,
        tolerance=args.tol,
        suite=None if suite == 'all' else suite,
        output=args.out,
        **options,
    )


def emit(result: CommandResult, args: Optional[argparse.Namespace], writer: ReportWriter) -> None:
    """Tables go to --out (or stdout); the JSON report then goes to stdout or is logged"""
    if result.table is not None:
        writer.write_csv(result.table)
        if writer.output:
            writer.write_report(result.report, output="-")
        else:
            logging.getLogger(PACKAGE_LOGGER).info(writer.render(result.report))
    else:
        writer.write_report(result.report)
    if args is not None and args.summary:
        print_summary(result.report)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    writer = ReportWriter()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: axioms, verify, ruijsenaars or graph")
        manager = ConfigManager(args.config)
        logging_config = manager.get_logging_config()
        logger = get_logger(log_level=args.log_level or logging_config.get('level', 'WARNING'),
                            log_dir=logging_config.get('log_dir'))
        config_errors = manager.validate_config()
        if config_errors:
            raise UsageError("; ".join(config_errors))
        config = resolve_config(args, manager)
        writer = ReportWriter(config.output, indent=int(manager.get_output_config().get('indent', 2)))
        logger.info(f"ribbon-poisson {config.command} k={config.k} seed={config.seed}")
        result = run_command(config)
    except (UsageError, ValueError) as e:
        result = CommandResult(EXIT_USAGE, {"error": "usage", "message": str(e)})
        args = None
    except RibbonPoissonError as e:
        result = error_result(e)
        args = None

    try:
        emit(result, args, writer)
    except OSError as e:
        sys.stderr.write(f"❌ Could not write output: {e}\n")
        return EXIT_USAGE
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
