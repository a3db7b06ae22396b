from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Annotated, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

import config as config
from arena import ModelParams, RunTrace, run
from metrics import MetricsSummary, summarize

METRIC_NAMES = ("mean_slope", "mean_lifecycle", "turnover_ratio", "mean_peak_height", "mean_gini")


class SweepGrid(BaseModel):
    """
    Parameter grid of a sweep. Seeds are either listed explicitly or generated as
    base_seed, base_seed + 1, ..., base_seed + seed_count - 1.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    alphas: List[Annotated[float, Field(ge=0)]] = Field(min_length=1)
    ns: List[Annotated[int, Field(ge=2)]] = Field(min_length=1)
    cs: List[Annotated[float, Field(gt=0)]] = Field(min_length=1)
    iterations: int = Field(default=config.DEFAULT_ITERATIONS, ge=2)
    burn_in: int = Field(default=config.DEFAULT_BURN_IN, ge=0)
    seeds: Optional[List[Annotated[int, Field(ge=0, lt=2 ** 64)]]] = Field(default=None, min_length=1)
    base_seed: int = Field(default=config.DEFAULT_BASE_SEED, ge=0)
    seed_count: int = Field(default=config.DEFAULT_SEED_COUNT, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> SweepGrid:
        if self.burn_in >= self.iterations:
            raise ValueError(
                f"burn_in ({self.burn_in}) must be smaller than iterations ({self.iterations})"
            )
        if self.seeds is not None and len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be pairwise distinct")
        return self

    @classmethod
    def full_default(cls) -> SweepGrid:
        return cls(
            alphas=config.DEFAULT_ALPHAS,
            ns=config.DEFAULT_NS,
            cs=config.DEFAULT_CS,
            iterations=config.DEFAULT_ITERATIONS,
            burn_in=config.DEFAULT_BURN_IN,
            base_seed=config.DEFAULT_BASE_SEED,
            seed_count=config.DEFAULT_SEED_COUNT,
        )

    def resolved_seeds(self) -> List[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return list(range(self.base_seed, self.base_seed + self.seed_count))

    def cells(self) -> List[Tuple[float, int, float]]:
        """(alpha, n, c) cells ordered by n, then c, then alpha."""
        return [
            (alpha, n, c)
            for n in sorted(set(self.ns))
            for c in sorted(set(self.cs))
            for alpha in sorted(set(self.alphas))
        ]

    def params_for(self, alpha: float, n: int, c: float, seed: int) -> ModelParams:
        return ModelParams(
            alpha=alpha, n=n, c=c, iterations=self.iterations, seed=seed, burn_in=self.burn_in
        )


@dataclass
class AggregateRow:
    """One point of a metric-vs-alpha curve: seed mean and sample std per metric."""
    alpha: float
    n: int
    c: float
    seeds: int
    means: Dict[str, Optional[float]] = field(default_factory=dict)
    stds: Dict[str, Optional[float]] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)


def _summarize_run(params: ModelParams) -> MetricsSummary:
    return summarize(run(params))


def aggregate_cell(alpha: float, n: int, c: float, summaries: List[MetricsSummary]) -> AggregateRow:
    """
    Reduce per-seed summaries (in seed order) to means and sample standard deviations.

    A single contributing seed has std 0; no contributing seed gives None.
    """
    frame = pd.DataFrame(
        [[getattr(s, name) for name in METRIC_NAMES] for s in summaries],
        columns=list(METRIC_NAMES),
        dtype=float,
    )
    row = AggregateRow(alpha=alpha, n=n, c=c, seeds=len(summaries))
    for name in METRIC_NAMES:
        values = frame[name].dropna()
        row.counts[name] = int(values.size)
        if values.empty:
            row.means[name] = None
            row.stds[name] = None
        elif values.size == 1:
            row.means[name] = float(values.iloc[0])
            row.stds[name] = 0.0
        else:
            row.means[name] = float(values.mean())
            row.stds[name] = float(values.std(ddof=1))
    return row


def run_sweep(grid: SweepGrid, workers: int = 1) -> List[AggregateRow]:
    cells = grid.cells()
    seeds = grid.resolved_seeds()
    tasks: Dict[Tuple[int, int], ModelParams] = {
        (idx, seed): grid.params_for(alpha, n, c, seed)
        for idx, (alpha, n, c) in enumerate(cells)
        for seed in seeds
    }
    logging.info("Sweep: %d cells x %d seeds = %d runs (workers=%d)",
                 len(cells), len(seeds), len(tasks), workers)

    results: Dict[Tuple[int, int], MetricsSummary] = {}
    if workers <= 1:
        for key, params in tasks.items():
            results[key] = _summarize_run(params)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            future_to_key = {ex.submit(_summarize_run, params): key for key, params in tasks.items()}
            for fut in as_completed(future_to_key):
                results[future_to_key[fut]] = fut.result()

    rows = []
    for idx, (alpha, n, c) in enumerate(cells):
        # fixed seed order keeps the reduction schedule-independent
        rows.append(aggregate_cell(alpha, n, c, [results[(idx, seed)] for seed in seeds]))
        logging.info("Cell alpha=%s n=%d c=%s aggregated over %d seeds", alpha, n, c, len(seeds))
    return rows


def rows_to_frame(rows: List[AggregateRow]) -> pd.DataFrame:
    """Long format: n,c,alpha,metric,mean,std,seeds (seeds = contributing seeds)."""
    records = []
    for row in rows:
        for name in METRIC_NAMES:
            records.append({
                "n": row.n,
                "c": row.c,
                "alpha": row.alpha,
                "metric": name,
                "mean": row.means[name],
                "std": row.stds[name],
                "seeds": row.counts[name],
            })
    return pd.DataFrame(records, columns=["n", "c", "alpha", "metric", "mean", "std", "seeds"])


def trend_table(rows: List[AggregateRow]) -> pd.DataFrame:
    """
    Per (n, c, metric): Spearman correlation of seed means against alpha, plus the
    first and last increments of the curve. plateau is True when the last increment
    is smaller in magnitude than the first.
    """
    frame = rows_to_frame(rows)
    records = []
    for (n, c, metric), group in frame.groupby(["n", "c", "metric"], sort=True):
        group = group.dropna(subset=["mean"]).sort_values("alpha")
        spearman = np.nan
        first_inc = last_inc = np.nan
        plateau = None
        if len(group) >= 2:
            means = group["mean"].astype(float).reset_index(drop=True)
            alphas = group["alpha"].reset_index(drop=True)
            # Spearman rho as Pearson correlation of ranks
            spearman = alphas.rank().corr(means.rank())
            first_inc = float(means.iloc[1] - means.iloc[0])
            last_inc = float(means.iloc[-1] - means.iloc[-2])
            plateau = bool(abs(last_inc) < abs(first_inc))
        records.append({
            "n": n,
            "c": c,
            "metric": metric,
            "points": len(group),
            "spearman": spearman,
            "first_increment": first_inc,
            "last_increment": last_inc,
            "plateau": plateau,
        })
    return pd.DataFrame(
        records,
        columns=["n", "c", "metric", "points", "spearman", "first_increment", "last_increment", "plateau"],
    )


def emit_stackplot(trace: RunTrace, max_t: int) -> pd.DataFrame:
    """Long-format (t, item_id, visibility) rows for t <= max_t, ready for a stacked-area plot."""
    if max_t < 1 or max_t > trace.iterations:
        raise ValueError(f"max_t must be within [1, {trace.iterations}], got {max_t}")
    frame = trace.to_frame()
    frame = frame[frame["t"] <= max_t]
    return frame[["t", "item_id", "visibility"]].reset_index(drop=True)
