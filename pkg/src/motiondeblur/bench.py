"""Wall-clock benchmarking of the deconvolution pipeline.

Measurements use a wall-clock (not process-time) source, so statistics
over many runs absorb scheduling noise; the harness reports mean,
sample standard deviation and extremes per stage. Image I/O and
Fourier-plan precomputation stay outside the timed region, matching a
processing loop that reuses plans across many equally sized frames.
First-run outliers (cache effects) are reported, not discarded; an
optional warm-up performs one untimed run beforehand.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass

from .core import DeconvParams, Image, Psf
from .deconv import DeblurPipeline, Scenario

__all__ = ["StageStats", "TimingStats", "bench_pipeline", "report"]

STAGES = ("wiener", "rrrl_iteration", "rrrl_total", "total")


@dataclass(frozen=True)
class StageStats:
    """Summary statistics over one stage's wall-clock samples (ms)."""

    samples: int
    mean_ms: float
    std_ms: float
    min_ms: float
    max_ms: float

    @classmethod
    def from_samples(cls, xs) -> "StageStats":
        n = len(xs)
        if n == 0:
            return cls(0, 0.0, 0.0, 0.0, 0.0)
        mean = sum(xs) / n
        if n > 1:
            std = math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - 1))
        else:
            std = 0.0
        return cls(n, mean, std, min(xs), max(xs))


@dataclass(frozen=True)
class TimingStats:
    """Per-stage timing statistics for one benchmarked configuration.

    ``runs`` counts pipeline executions; the rrrl_iteration stage pools
    every iteration of every run, so its sample count is runs times the
    iteration count.
    """

    scenario: str
    runs: int
    per_stage: dict[str, StageStats]

    @property
    def mean_ms(self) -> float:
        return self.per_stage["total"].mean_ms

    @property
    def std_ms(self) -> float:
        return self.per_stage["total"].std_ms

    @property
    def min_ms(self) -> float:
        return self.per_stage["total"].min_ms

    @property
    def max_ms(self) -> float:
        return self.per_stage["total"].max_ms


def bench_pipeline(f: Image, h: Psf, params: DeconvParams,
                   scenario: Scenario | None = None, runs: int = 100,
                   warmup: bool = False, workers: int = 1,
                   split_first_iteration: bool = False) -> TimingStats:
    """Time ``runs`` executions of the Wiener+RRRL pipeline on one image.

    ``split_first_iteration`` adds separate stages for the first and
    the remaining iterations of each run, exposing first-iteration
    cache effects.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    pipeline = DeblurPipeline(f.shape, h, params, scenario, workers=workers)
    if warmup:
        pipeline.run(f)
    wiener, iteration, rrrl_totals, totals = [], [], [], []
    first, later = [], []
    for _ in range(runs):
        _, t = pipeline.run_timed(f)
        wiener.append(t.wiener_ms)
        iteration.extend(t.iteration_ms)
        rrrl_totals.append(t.rrrl_total_ms)
        totals.append(t.total_ms)
        if t.iteration_ms:
            first.append(t.iteration_ms[0])
            later.extend(t.iteration_ms[1:])
    per_stage = {
        "wiener": StageStats.from_samples(wiener),
        "rrrl_iteration": StageStats.from_samples(iteration),
        "rrrl_total": StageStats.from_samples(rrrl_totals),
        "total": StageStats.from_samples(totals),
    }
    if split_first_iteration:
        per_stage["rrrl_first_iteration"] = StageStats.from_samples(first)
        per_stage["rrrl_later_iterations"] = StageStats.from_samples(later)
    return TimingStats(pipeline.scenario.value, runs, per_stage)


def report(stats: TimingStats, format: str = "human") -> str:
    """Render timing statistics as a human-readable table or CSV."""
    if format == "csv":
        out = io.StringIO()
        out.write("scenario,stage,runs,mean_ms,std_ms,min_ms,max_ms\n")
        for stage, s in stats.per_stage.items():
            out.write(
                f"{stats.scenario},{stage},{s.samples},"
                f"{s.mean_ms:.3f},{s.std_ms:.3f},{s.min_ms:.3f},{s.max_ms:.3f}\n"
            )
        return out.getvalue()
    if format == "human":
        width = max(len(stage) for stage in stats.per_stage)
        lines = [f"scenario {stats.scenario}, {stats.runs} runs"]
        for stage, s in stats.per_stage.items():
            lines.append(
                f"  {stage:<{width}}  {s.mean_ms:8.3f} +- {s.std_ms:6.3f} ms"
                f"  ({s.min_ms:.3f} .. {s.max_ms:.3f}, n={s.samples})"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
