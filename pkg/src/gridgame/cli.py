"""Command-line entry point.

One subcommand per pipeline stage plus ``scenario`` for the whole study.
Reports are written to --out (or printed to stdout when --out is omitted)
only after the stage has fully computed, so a failed run leaves no partial
files.  Exit codes: 0 success, 1 usage or config error, 2 numerical or
solver failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .attack import AttackSynthesisError
from .estimation import ObservabilityError
from .grid import FixtureError
from .market import DispatchError
from .report import scenario_report, stage_report, stage_tables, to_canonical_json
from .scenario import STAGE_DEPS, STAGES, Pipeline, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gridgame",
        description="State-estimation attack and market-game study runner")
    sub = parser.add_subparsers(dest="stage", required=True)
    for st in STAGES:
        p = sub.add_parser(st, help=f"run the {st} stage" if st != "scenario"
                           else "run the full pipeline")
        p.add_argument("--config", required=True,
                       help="fixture/scenario TOML file")
        p.add_argument("--out", default=None,
                       help="output directory (default: print to stdout)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario RNG seed")
        p.add_argument("--stage-only", action="store_true",
                       help="write only this stage's files, not its "
                            "dependencies' reports")
    return parser


def _collect_outputs(pipe, stage, stage_only):
    files = {}
    if stage == "scenario":
        files["scenario.json"] = to_canonical_json(scenario_report(pipe))
        files.update(stage_tables(pipe, "scenario"))
        return files
    wanted = (stage,) if stage_only else STAGE_DEPS[stage] + (stage,)
    for st in wanted:
        files.update(stage_report(pipe, st))
    return files


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    stage = args.stage
    try:
        config = load_scenario(args.config, seed=args.seed)
    except (FileNotFoundError, FixtureError, ValueError) as exc:
        print(f"gridgame {stage}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        pipe = Pipeline(config)
        pipe.stage(stage)
        files = _collect_outputs(pipe, stage, args.stage_only)
    except (DispatchError, AttackSynthesisError, ObservabilityError,
            np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"gridgame {stage}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.out is None:
        name = "scenario.json" if stage == "scenario" else f"{stage}.json"
        sys.stdout.write(files[name])
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for fname, text in sorted(files.items()):
            (outdir / fname).write_text(text)
        print(f"gridgame {stage}: wrote {len(files)} file(s) to {outdir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
