"""Command-line entry point: ``marketscale <stage> BSE.csv NYSE.csv [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .errors import AnalysisError
from .pipeline import PipelineConfig, run_pipeline

# subcommand -> pipeline stages it runs (ingest always runs first)
COMMANDS = {
    "ingest": ("ingest",),
    "decompose": ("ingest", "decompose"),
    "cwt": ("ingest", "cwt"),
    "coherence": ("ingest", "cwt", "coherence"),
    "causality": ("ingest", "causality"),
    "all": ("ingest", "decompose", "descriptive", "cwt", "coherence", "causality"),
}


def _add_common(p: argparse.ArgumentParser, seed_required: bool) -> None:
    p.add_argument("inputs", nargs="+", help="daily quote files (CSV with header)")
    p.add_argument("-o", "--output-dir", default="out")
    p.add_argument("--labels", nargs="+", help="series labels (default: file stems)")
    p.add_argument("--date-column", default="Date")
    p.add_argument("--close-column", default="Close")
    p.add_argument("--start", default="1986-01", help="first month, YYYY-MM")
    p.add_argument("--end", default="2010-12", help="last month, YYYY-MM")
    p.add_argument("--dwt-levels", type=int, default=4)
    p.add_argument("--dwt-mode", default="antireflect",
                   choices=["symmetric", "reflect", "antireflect", "periodic"])
    p.add_argument("--cwt-s0", type=float, default=2.0, help="smallest scale in months")
    p.add_argument("--cwt-dj", type=float, default=1.0 / 12, help="octave spacing of scales")
    p.add_argument("--cwt-max-scale", type=float, default=128.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--surrogates", type=int, default=300)
    p.add_argument("--seed", type=int, required=seed_required, default=None)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--criterion", default="aic", choices=["aic", "hq", "sc", "fpe"])
    p.add_argument("--raw-levels", action="store_true",
                   help="run the level VAR on unnormalized monthly averages")
    p.add_argument("--no-enforce-diagnostics", dest="enforce_diagnostics", action="store_false",
                   help="report Wald tests even when VAR diagnostics fail")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marketscale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(sub.add_parser(name), seed_required=name in ("coherence", "all"))
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        inputs=tuple(args.inputs), output_dir=args.output_dir,
        labels=tuple(args.labels) if args.labels else None,
        date_column=args.date_column, close_column=args.close_column,
        start=args.start, end=args.end, dwt_levels=args.dwt_levels, dwt_mode=args.dwt_mode,
        cwt_s0=args.cwt_s0, cwt_dj=args.cwt_dj, cwt_max_scale=args.cwt_max_scale,
        alpha=args.alpha, surrogates=args.surrogates, seed=args.seed,
        max_lag=args.max_lag, criterion=args.criterion, raw_levels=args.raw_levels,
        enforce_diagnostics=args.enforce_diagnostics, workers=args.workers,
    )


def _fail(code: str, message: str) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = run_pipeline(config_from_args(args), COMMANDS[args.command])
    except AnalysisError as exc:
        return _fail(exc.code, str(exc))
    except OSError as exc:
        return _fail("IOError", str(exc))
    if result.diagnostics_failed:
        print(json.dumps({"error": "DiagnosticsFailed", "cells": result.diagnostics_failed}),
              file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
