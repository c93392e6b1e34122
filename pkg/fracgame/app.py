#!/usr/bin/env python3
# fracgame/app.py
import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path

from fracgame.core.config import load_scenario_config
from fracgame.core.dispatcher import SUITES, Dispatcher, RunOutcome
from fracgame.core.errors import EXIT_CHECK_FAILED, EXIT_OK, FracGameError, exit_code_for
from fracgame.core.reports import summarize, write_json, write_jsonl, write_trace_csv

PKG_DIR = Path(__file__).resolve().parent
CONFIG_DIR = PKG_DIR / "config"
DEFAULT_CONFIG = CONFIG_DIR / "default.json"

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


def _configure_logging() -> None:
    level = os.getenv("FRACGAME_LOG_LEVEL", "WARNING").upper()
    root = logging.getLogger()
    if not any(getattr(h, "_fracgame", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._fracgame = True
        root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.WARNING))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracgame",
                                description="Verification suites for Caputo fractional differential games.")
    p.add_argument("subcommand", choices=list(SUITES))
    p.add_argument("--config", default=str(DEFAULT_CONFIG), help="scenario JSON file")
    p.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the scenario)")
    p.add_argument("--workers", type=int, default=1, help="worker count; results do not depend on it")
    return p


def _write_outputs(out_dir: Path, outcome: RunOutcome, scenario: dict, digest: str, seed: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "reports.jsonl", (r.to_record(digest, seed) for r in outcome.reports))
    write_trace_csv(out_dir / "trace.csv", outcome.trace_header, outcome.trace)
    summary = {
        "subcommand": outcome.subcommand,
        "scenario": scenario,
        "scenario_digest": digest,
        "seed": seed,
        "trials": outcome.trials,
        **summarize(outcome.reports),
        "details": outcome.details,
    }
    write_json(out_dir / "summary.json", summary)


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    _configure_logging()
    try:
        cfg = load_scenario_config(args.config).with_overrides(out=args.out, seed=args.seed)
        print(f'[app] scenario "{cfg.name}" loaded ({cfg.digest}, seed {cfg.seed})')
        dispatcher = Dispatcher(cfg, workers=args.workers)
        outcome = asyncio.run(dispatcher.run(args.subcommand))
        out_dir = Path(cfg.out_dir)
        scenario = cfg.to_dict()
        scenario.pop("out_dir", None)
        _write_outputs(out_dir, outcome, scenario, cfg.digest, cfg.seed)
    except FracGameError as e:
        print(f"[app] {type(e).__name__}: {e}", file=sys.stderr)
        return exit_code_for(e)

    print(f"[app] {args.subcommand}: {len(outcome.reports)} reports, {outcome.failures} failed "
          f"({outcome.elapsed:.1f} s) -> {out_dir}")
    for r in outcome.reports:
        if r.failed:
            print(f"[app] FAIL {r.check}: lhs={r.lhs!r} rhs={r.rhs!r} margin={r.margin!r}")
    return EXIT_OK if outcome.failures == 0 else EXIT_CHECK_FAILED


def main() -> None:
    try:
        import uvloop
        asyncio.set_event_loop_policy(uvloop.EventLoopPolicy())
    except Exception:
        pass

    try:
        sys.exit(run())
    except KeyboardInterrupt:
        sys.exit(130)


if __name__ == "__main__":
    main()
