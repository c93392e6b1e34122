# fracgame/core/dispatcher.py
"""Routes a subcommand to its suite and runs the suite's trials on a worker pool.

Every trial gets its own generator spawned from the scenario seed by trial index,
and results are stored by index, so outputs do not depend on the worker count.
"""
from __future__ import annotations

import asyncio
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import ModuleType
from typing import Any

import numpy as np

from fracgame.core.config import ScenarioConfig
from fracgame.core.errors import ConfigError
from fracgame.core.reports import CheckReport
from fracgame.suites import doubling, lemmas, simulate, validate, value, viscosity
from fracgame.suites.common import Trial, TrialResult

_LOG = logging.getLogger("fracgame.dispatcher")

LOG_EVERY = int(os.getenv("FRACGAME_LOG_EVERY", "0"))  # 0 disables progress lines
QUEUE_PER_WORKER = 2

SUITES: dict[str, ModuleType] = {
    "validate": validate,
    "simulate": simulate,
    "value": value,
    "lemmas": lemmas,
    "viscosity": viscosity,
    "doubling": doubling,
}


@dataclass
class RunOutcome:
    subcommand: str
    trials: list[str]
    reports: list[CheckReport] = field(default_factory=list)
    trace_header: list[str] = field(default_factory=list)
    trace: list[list[Any]] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def failures(self) -> int:
        return sum(1 for r in self.reports if r.failed)


class Dispatcher:
    def __init__(self, cfg: ScenarioConfig, workers: int = 1, log_every: int = LOG_EVERY):
        if int(workers) < 1:
            raise ConfigError(f"--workers must be >= 1, got {workers!r}")
        self.cfg = cfg
        self.workers = int(workers)
        self.log_every = int(log_every)

    def suite(self, subcommand: str) -> ModuleType:
        mod = SUITES.get((subcommand or "").strip())
        if mod is None:
            raise ConfigError(f"unknown subcommand {subcommand!r} (known: {', '.join(SUITES)})")
        return mod

    def plan(self, subcommand: str) -> list[Trial]:
        return list(self.suite(subcommand).trials(self.cfg))

    async def run(self, subcommand: str) -> RunOutcome:
        mod = self.suite(subcommand)
        trials = self.plan(subcommand)
        seeds = np.random.SeedSequence(self.cfg.seed).spawn(len(trials))
        results: list[TrialResult | None] = [None] * len(trials)
        errors: dict[int, BaseException] = {}
        queue: asyncio.Queue[int | None] = asyncio.Queue(maxsize=QUEUE_PER_WORKER * self.workers)
        n_workers = min(self.workers, max(1, len(trials)))

        loop = asyncio.get_running_loop()
        done = 0
        t_start = time.monotonic()

        async def worker(pool: ThreadPoolExecutor) -> None:
            nonlocal done
            while True:
                i = await queue.get()
                if i is None:
                    queue.task_done()
                    return
                trial = trials[i]
                try:
                    rng = np.random.default_rng(seeds[i])
                    results[i] = await loop.run_in_executor(pool, trial.run, rng)
                    done += 1
                    if self.log_every and done % self.log_every == 0:
                        print(f"[dispatch] {done}/{len(trials)} trials ({time.monotonic() - t_start:.1f} s)")
                except Exception as e:
                    _LOG.debug("[dispatch] trial %s failed: %s", trial.name, e)
                    errors[i] = e
                finally:
                    queue.task_done()

        async def feed() -> None:
            for i in range(len(trials)):
                await queue.put(i)
            for _ in range(n_workers):
                await queue.put(None)

        with ThreadPoolExecutor(max_workers=n_workers, thread_name_prefix="fracgame") as pool:
            await asyncio.gather(feed(), *(worker(pool) for _ in range(n_workers)))

        if errors:
            raise errors[min(errors)]

        outcome = RunOutcome(subcommand, [t.name for t in trials], trace_header=list(mod.TRACE_HEADER))
        for trial, res in zip(trials, results):
            outcome.reports.extend(res.reports)
            outcome.trace.extend(res.trace)
            if res.details:
                outcome.details[trial.name] = res.details
        outcome.elapsed = time.monotonic() - t_start
        _LOG.info("[dispatch] %s: %d trials, %d reports, %d failures in %.2f s", subcommand,
                  len(trials), len(outcome.reports), outcome.failures, outcome.elapsed)
        return outcome
