"""Command-line interface.

Subcommands:

- ``metasim run <scenario.json> [--out DIR] [--log-scale]``
- ``metasim sweep <sweep.json> [--out DIR] [--jobs N]``
- ``metasim catalog [--emit DIR]``
- ``metasim lambda0 <scenario.json>``

Exit codes: 0 success, 2 configuration or validation error,
3 integration blowup, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    ConfigurationError,
    IntegrationBlowupError,
    InvalidStateError,
    NoRootError,
    NotLinearError,
)
from .runner import run_scenario, run_sweep
from .scenarios import catalog, load_scenario, load_sweep, scenario_to_dict
from .spectral import malthus_exponent

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metasim",
        description="Simulator for metastatic populations under shared "
        "angiogenesis inhibition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its artifacts")
    p_run.add_argument("scenario", help="path to a scenario JSON file")
    p_run.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p_run.add_argument(
        "--log-scale",
        action="store_true",
        help="plot burden and count on a log axis",
    )

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("sweep", help="path to a sweep JSON file")
    p_sweep.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p_sweep.add_argument(
        "--jobs", type=int, default=None, metavar="N", help="worker process count"
    )

    p_cat = sub.add_parser("catalog", help="list or emit the built-in scenarios")
    p_cat.add_argument(
        "--emit",
        default=None,
        metavar="DIR",
        help="write each catalog scenario as a JSON file into DIR",
    )

    p_lam = sub.add_parser(
        "lambda0",
        help="print the growth exponent of the uncoupled model (e = 0)",
    )
    p_lam.add_argument("scenario", help="path to a scenario JSON file")

    return parser


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    result = run_scenario(sc, out_dir=args.out, log_scale=args.log_scale or None)
    for path in result.files:
        print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.jobs is not None and args.jobs < 1:
        raise ConfigurationError("--jobs must be a positive integer")
    sw = load_sweep(args.sweep)
    rows = run_sweep(sw, out_dir=args.out, jobs=args.jobs)
    print(os.path.join(args.out, "summary.csv"))
    failures = [row for row in rows if row["error"] is not None]
    for row in failures:
        print(f"{sw.axis}={row['value']:g} failed: {row['error']}", file=sys.stderr)
    if rows and len(failures) == len(rows):
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_catalog(args) -> int:
    scenarios = catalog()
    if args.emit is None:
        for sc in scenarios:
            print(sc.name)
        return EXIT_OK
    os.makedirs(args.emit, exist_ok=True)
    for sc in scenarios:
        path = os.path.join(args.emit, f"{sc.name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(scenario_to_dict(sc), fh, indent=2)
            fh.write("\n")
        print(path)
    return EXIT_OK


def _cmd_lambda0(args) -> int:
    sc = load_scenario(args.scenario)
    result = malthus_exponent(sc.params)
    print(
        json.dumps(
            {
                "name": sc.name,
                "lambda0": result.lambda0,
                "tau_max": result.tau_max,
                "quadrature_nodes": result.quadrature_nodes,
                "residual": result.residual,
            },
            indent=2,
        )
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "catalog": _cmd_catalog,
        "lambda0": _cmd_lambda0,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, InvalidStateError, NotLinearError, NoRootError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationBlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
