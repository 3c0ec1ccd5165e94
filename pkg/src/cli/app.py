"""Command-line entry: parser, dispatch, run reports and exit codes."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.cli import analysis_commands, data_commands, modeling_commands, spod_commands
from src.cli.common import CommandResult, config_echo, configuration_from_args
from src.cli.models import ErrorResponse, RunReport
from src.modeling.errors import ModelFileError, SurrogateError
from src.modeling.surrogate import TOOL_VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

COMMAND_MODULES = (data_commands, analysis_commands, modeling_commands, spod_commands)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaos-surrogate",
        description="Generative stochastic surrogates of chaotic time series.",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Override the root log level",
    )
    parser.add_argument(
        "--report",
        default=None,
        help="Run report path; '-' for stdout (default: <out>.report.json, else stdout)",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def _report_target(args: argparse.Namespace) -> Optional[Path]:
    if args.report == "-":
        return None
    if args.report:
        return Path(args.report)
    out = getattr(args, "out", None)
    return Path(f"{out}.report.json") if out else None


def _write_report(args: argparse.Namespace, report: RunReport) -> None:
    text = report.model_dump_json(indent=2) + "\n"
    target = _report_target(args)
    if target is None:
        sys.stdout.write(text)
        return
    try:
        target.write_text(text)
    except OSError as e:
        logger.error(f"could not write run report to {target}: {e}")
        sys.stdout.write(text)


def _error_response(e: Exception) -> ErrorResponse:
    detail = type(e).__name__
    if isinstance(e, ModelFileError):
        detail = f"{detail} (field {e.field})"
    elif isinstance(e, ValidationError):
        detail = f"{detail}: " + "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
    return ErrorResponse(code=EXIT_RUNTIME, message=str(e).splitlines()[0] if str(e) else detail, detail=detail)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; 0 on success, 2 on usage errors, 1 on runtime errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    if args.log_level:
        logging.getLogger().setLevel(args.log_level)

    report = RunReport(tool_version=TOOL_VERSION, command=args.command)
    status = EXIT_OK
    try:
        cfg = configuration_from_args(args)
        report.config = config_echo(args, cfg)
        result: CommandResult = args.handler(args, cfg)
        report.outputs = result.outputs
        report.diagnostics = result.diagnostics
        report.warnings = result.warnings
        report.seeds = result.seeds
    except (SurrogateError, OSError, ValidationError, ValueError, LookupError) as e:
        logger.error(f"{args.command} failed: {e}")
        report.status = "error"
        report.error = _error_response(e)
        status = EXIT_RUNTIME

    _write_report(args, report)
    return status
