from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

import config as config
from arena import ModelParams, run
from empirical import (EmpiricalOptions, analyze_channels, channel_summary_frame, load_dataset,
                       profiles_frame, read_views_csv, video_metrics_frame)
from metrics import summarize
from sweep import SweepGrid, emit_stackplot, rows_to_frame, run_sweep, trend_table
from utils import check_outputs, write_frame_csv, write_json

MANIFEST = "manifest.json"


class RunConfig(BaseModel):
    """Resolved configuration of one command: exactly the block matching `mode` is set."""
    model_config = ConfigDict(extra="forbid")

    mode: Literal["simulate", "sweep", "empirical"]
    output_dir: Path
    overwrite: bool = False
    params: Optional[ModelParams] = None
    grid: Optional[SweepGrid] = None
    empirical: Optional[EmpiricalOptions] = None
    workers: int = Field(default=1, ge=1)
    emit_stackplots: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_block(self) -> RunConfig:
        blocks = {"simulate": self.params, "sweep": self.grid, "empirical": self.empirical}
        present = [mode for mode, block in blocks.items() if block is not None]
        if present != [self.mode]:
            expected = {"simulate": "params", "sweep": "grid", "empirical": "empirical"}[self.mode]
            raise ValueError(f"mode '{self.mode}' requires exactly the '{expected}' block, got {present}")
        if self.emit_stackplots is not None:
            if self.mode != "sweep":
                raise ValueError("emit_stackplots is only valid in sweep mode")
            if self.emit_stackplots > self.grid.iterations:
                raise ValueError(
                    f"emit_stackplots ({self.emit_stackplots}) exceeds iterations ({self.grid.iterations})"
                )
        return self


def _manifest(run_config: RunConfig, outputs: List[str], **extra: Any) -> Dict[str, Any]:
    manifest = {
        "tool": "junk-news-bubbles",
        "version": config.VERSION,
        "config": run_config.model_dump(mode="json", exclude_none=True),
        "outputs": sorted(outputs),
    }
    manifest.update(extra)
    return manifest


def _prepare(run_config: RunConfig, outputs: List[str]) -> None:
    config.OUTPUT_DIR_PATH = Path(run_config.output_dir)
    check_outputs(outputs + [MANIFEST], run_config.overwrite)


def simulate_entry(run_config: RunConfig) -> List[str]:
    params = run_config.params
    logging.info("Simulating alpha=%s n=%d c=%s iterations=%d seed=%d burn_in=%d",
                 params.alpha, params.n, params.c, params.iterations, params.seed, params.burn_in)

    trace = run(params)
    summary = summarize(trace)
    if trace.degenerate_resets:
        logging.warning("Uniform fallback fired %d time(s): %s",
                        len(trace.degenerate_resets), trace.degenerate_resets)

    outputs = ["trace.csv", "events.csv", "summary.json"]
    _prepare(run_config, outputs)
    write_frame_csv(trace.to_frame(), "trace.csv")
    write_frame_csv(trace.events_to_frame(), "events.csv")
    write_json(summary.to_dict(params), "summary.json")
    write_json(_manifest(run_config, outputs, seeds=[params.seed],
                         degenerate_resets=trace.degenerate_resets), MANIFEST)
    return outputs + [MANIFEST]


def sweep_entry(run_config: RunConfig) -> List[str]:
    grid = run_config.grid
    seeds = grid.resolved_seeds()
    rows = run_sweep(grid, workers=run_config.workers)

    stackplots = {}
    if run_config.emit_stackplots is not None:
        for alpha, n, c in grid.cells():
            trace = run(grid.params_for(alpha, n, c, seeds[0]))
            name = f"stackplot_n{n}_c{c:g}_alpha{alpha:g}_seed{seeds[0]}.csv"
            stackplots[name] = emit_stackplot(trace, run_config.emit_stackplots)

    outputs = ["aggregate.csv", "trends.csv"] + list(stackplots)
    _prepare(run_config, outputs)
    write_frame_csv(rows_to_frame(rows), "aggregate.csv")
    write_frame_csv(trend_table(rows), "trends.csv")
    for name, frame in stackplots.items():
        write_frame_csv(frame, name)
    write_json(_manifest(run_config, outputs, seeds=seeds), MANIFEST)
    return outputs + [MANIFEST]


def empirical_entry(run_config: RunConfig) -> List[str]:
    options = run_config.empirical
    channels = load_dataset(read_views_csv(options.input), until=options.until)
    report = analyze_channels(
        channels,
        min_videos=options.min_videos,
        min_concurrent=options.min_concurrent,
        min_observed_hours=options.min_observed_hours,
    )

    outputs = ["video_metrics.csv", "channel_summary.csv", "profiles.csv"]
    _prepare(run_config, outputs)
    write_frame_csv(video_metrics_frame(report.video_metrics), "video_metrics.csv")
    write_frame_csv(channel_summary_frame(report.summaries), "channel_summary.csv")
    write_frame_csv(profiles_frame(report.profiles), "profiles.csv")
    write_json(_manifest(run_config, outputs, skipped_channels=report.skipped), MANIFEST)
    return outputs + [MANIFEST]
