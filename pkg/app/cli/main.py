#!/usr/bin/env python3
# File: app/cli/main.py
"""
Command line for the laboratory.

Usage:
    nls-lab solve --dim 1 --p 1.3 --mass 3 --out results/solve
    nls-lab figure1 --out results/figure1
    nls-lab dimer-curve --config configs/dimer.env --threads 4
    nls-lab validate-config --config configs/dimer.env

Exit status: 0 success, 1 invalid configuration, 2 some solve did not converge.
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from app.config.config_file import build_spec, effective_config, load_config
from app.config.logging import configure_logging
from app.config.settings import settings
from app.core.entities.experiment import ExperimentSpec, RunRecord
from app.core.errors import ConfigError
from app.core.use_cases.run_experiment import EXPERIMENTS, run
from app.core.use_cases.validate_config import validate_config

console = Console()
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nls-lab", description="Ground states of the orthonormal NLS system")
    parser.add_argument("verb", choices=sorted(EXPERIMENTS) + ["validate-config"], help="Experiment to run")
    parser.add_argument("--config", help="Key-value config file (KEY=VALUE per line)")
    parser.add_argument("--out", dest="output", help="Output directory")
    parser.add_argument("--seed", type=int, help="Seed of random restarts")
    parser.add_argument("--threads", type=int, help="Worker threads")
    parser.add_argument("--dim", type=int, help="Dimension d (1, 2 or 3)")
    parser.add_argument("--p", type=float, help="Exponent p in (1, 1 + 2/d)")
    parser.add_argument("--mass", type=float, help="Mass lambda")
    parser.add_argument("--n-max", dest="n_max", type=int, help="Largest integer mass for tables and figures")
    parser.add_argument("--masses", type=_csv_list, help="Comma separated masses for sweeps")
    parser.add_argument("--p-list", dest="p_list", type=_csv_list, help="Comma separated exponents for gap-vs-p")
    parser.add_argument("--r-list", dest="r_list", type=_csv_list, help="Comma separated separations for dimer curves")
    parser.add_argument("--grid-n", dest="grid_n", type=int, help="Grid points per axis (even)")
    parser.add_argument("--box-l", dest="box_l", type=float, help="Box side length")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, object]:
    keys = ["output", "seed", "threads", "dim", "p", "mass", "n_max", "masses", "p_list", "r_list", "grid_n", "box_l"]
    values = {key: getattr(args, key) for key in keys if getattr(args, key) is not None}
    if args.verb != "validate-config":
        values["kind"] = args.verb
    return values


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    overrides = overrides_from_args(args)
    if args.config:
        return load_config(args.config, overrides)
    return build_spec(overrides)


def print_config(values: Dict[str, object], notes: List[str]) -> None:
    table = Table(title="Effective configuration")
    table.add_column("Key")
    table.add_column("Value")
    for key in sorted(values):
        table.add_row(key, str(values[key]))
    console.print(table)
    for note in notes:
        console.print(f"[dim]{note}[/dim]")


def print_record(record: RunRecord) -> None:
    table = Table(title=f"{record.spec.kind}: convergence")
    table.add_column("Solve")
    table.add_column("Converged")
    for label, ok in record.converged.items():
        table.add_row(label, "[green]yes[/green]" if ok else "[red]no[/red]")
    console.print(table)
    style = "green" if record.all_converged else "yellow"
    files = "\n".join(record.files) or "(none)"
    console.print(Panel(f"{files}\nwall time {record.wall_time:.2f} s", title=str(record.spec.output), border_style=style))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.verb == "validate-config":
            if not args.config:
                raise ConfigError("validate-config needs --config")
            report = validate_config(args.config, overrides_from_args(args))
            print_config(report.effective, report.notes)
            return EXIT_OK
        spec = resolve_spec(args)
    except (ConfigError, ValidationError) as exc:
        console.print(f"[bold red]Invalid configuration:[/bold red] {exc}")
        return EXIT_CONFIG

    logger.debug("Effective configuration: %s", effective_config(spec))
    record = run(spec)
    print_record(record)
    return EXIT_OK if record.all_converged else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
