"""Command-line front end.

::

    squeezeclock compare-clocks --scenario paper-repro --out runs/repro
    squeezeclock run --scenario my.scenario
    squeezeclock adev --scenario adev.scenario --validate-only

Exit codes: 0 success, 2 scenario/schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .cavity import FitError
from .clock import ConfigurationError
from .geometry import QuadratureError
from .io import csv_text, json_text, sha256_text, write_text
from .pipelines import PIPELINES
from .presets import CalibrationError
from .scenario import COMMANDS, ScenarioError, canonical_json, diagnostics, load, parse, read_text
from .stats import EstimatorError

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERICAL = 0, 2, 3
MANIFEST_VERSION = 1
NUMERICAL_ERRORS = (FitError, QuadratureError, EstimatorError, CalibrationError,
                    ConfigurationError, FloatingPointError, np.linalg.LinAlgError, ValueError)


def validate(scenario_file, command=None):
    """Schema and invariant diagnostics for a scenario file; empty if valid."""
    try:
        return diagnostics(parse(read_text(scenario_file)), command)
    except ScenarioError as exc:
        return exc.diagnostics


def run(scenario_file, out=None, seed=None, threads=1, command=None):
    """Run a scenario and write its artifacts; returns the output directory.

    Raises :class:`ScenarioError` for invalid scenarios and lets numerical
    errors from the pipelines propagate unchanged.
    """
    sc = load(scenario_file, command, seed)
    out_dir = Path(out or sc.get("output_dir") or Path("runs") / sc["name"])
    with np.errstate(invalid="raise", divide="raise", over="raise"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = PIPELINES[sc["command"]](sc["parameters"], sc["seed"], threads)

    files = {}
    for name, (columns, rows) in result.tables.items():
        files[f"{name}.csv"] = csv_text(columns, rows)
    for name, obj in result.documents.items():
        files[f"{name}.json"] = json_text(obj)
    files["summary.json"] = json_text({"command": sc["command"], "name": sc["name"],
                                       "seed": sc["seed"], **result.summary})
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "package_version": __version__,
        "scenario": sc,
        "config_hash": sha256_text(canonical_json(sc)),
        "outputs": {k: sha256_text(v) for k, v in sorted(files.items())},
    }
    files["run_manifest.json"] = json_text(manifest)
    for name, text in files.items():
        write_text(out_dir / name, text)
    return out_dir


def _parser():
    p = argparse.ArgumentParser(prog="squeezeclock",
                                description="Spin-squeezed optical clock simulations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run",) + COMMANDS:
        s = sub.add_parser(name, help="run the scenario's own command" if name == "run"
                           else f"run a {name} scenario")
        s.add_argument("--scenario", required=True,
                       help="scenario file, run manifest, or bundled preset name")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int, help="master seed, overrides the scenario")
        s.add_argument("--threads", type=int, default=1, help="worker threads")
        s.add_argument("--validate-only", action="store_true",
                       help="check the scenario and exit without computing")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    command = None if args.command == "run" else args.command
    if args.validate_only:
        diag = validate(args.scenario, command)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            diag.append("--seed: must be in 0..2**64-1")
        for d in diag:
            print(d, file=sys.stderr)
        if not diag:
            print("ok")
        return EXIT_SCHEMA if diag else EXIT_OK
    if args.threads < 1:
        print("--threads: must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        out = run(args.scenario, args.out, args.seed, args.threads, command)
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_SCHEMA
    except NUMERICAL_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
