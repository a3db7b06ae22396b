from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from arena import ModelParams, RunTrace


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class LifecycleRecord:
    item_id: int
    slot: int
    birth_t: int
    death_t: Optional[int]
    peak_height: float
    peak_t: int

    @property
    def completed(self) -> bool:
        return self.death_t is not None

    @property
    def length(self) -> Optional[int]:
        if self.death_t is None:
            return None
        return self.death_t - self.birth_t


@dataclass
class MetricsSummary:
    """
    Aggregate statistics of one run.

    mean_lifecycle and mean_peak_height are None when no completed lifecycle starts
    after the burn-in.
    """
    mean_slope: float
    mean_lifecycle: Optional[float]
    turnover_ratio: float
    mean_peak_height: Optional[float]
    mean_gini: float
    completed_lifecycles: int

    def to_dict(self, params: Optional[ModelParams] = None) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        if params is not None:
            data.update({f"param_{k}": v for k, v in params.model_dump().items()})
        data.update(asdict(self))
        return data


def _check_rows(trace: RunTrace, burn_in: int) -> None:
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if trace.iterations <= burn_in + 1:
        raise InsufficientDataError(
            f"trace has {trace.iterations} rows, need more than {burn_in + 1} for burn_in={burn_in}"
        )


def segment_lifecycles(trace: RunTrace) -> List[LifecycleRecord]:
    """
    Cut every slot's column into item lifetimes.

    An item occupies its slot from birth_t up to death_t - 1; its successor is born at
    death_t. Records are returned in item id order.
    """
    births_by_slot: Dict[int, List[tuple]] = {
        slot: [(1, int(trace.identity[0, slot]))] for slot in range(trace.n)
    }
    for event in sorted(trace.events, key=lambda e: (e.t, e.slot)):
        births_by_slot[event.slot].append((event.t, event.new_id))

    records: List[LifecycleRecord] = []
    last_t = trace.iterations
    for slot, births in births_by_slot.items():
        for k, (birth_t, item_id) in enumerate(births):
            death_t = births[k + 1][0] if k + 1 < len(births) else None
            end_t = (death_t - 1) if death_t is not None else last_t
            column = trace.visibility[birth_t - 1:end_t, slot]
            # a newborn sits at zero, so every lifetime spans at least one row
            peak_idx = int(np.argmax(column))
            peak_height = float(column[peak_idx])
            records.append(LifecycleRecord(
                item_id=item_id,
                slot=slot,
                birth_t=birth_t,
                death_t=death_t,
                peak_height=peak_height,
                peak_t=birth_t + peak_idx,
            ))

    records.sort(key=lambda r: r.item_id)
    return records


def mean_slope(trace: RunTrace, burn_in: int) -> float:
    """Mean |pi_i^t - pi_i^(t-1)| over all slots and all pairs with t > burn_in."""
    _check_rows(trace, burn_in)
    diffs = np.abs(np.diff(trace.visibility, axis=0))
    # diffs[k] is the pair ending at t = k + 2
    return float(diffs[max(burn_in - 1, 0):].mean())


def turnover_ratio(trace: RunTrace, burn_in: int) -> float:
    _check_rows(trace, burn_in)
    entries = sum(1 for e in trace.events if e.t > burn_in)
    return entries / (trace.n * (trace.iterations - burn_in))


def _qualifying(records: List[LifecycleRecord], burn_in: int) -> List[LifecycleRecord]:
    return [r for r in records if r.completed and r.birth_t > burn_in]


def mean_lifecycle(records: List[LifecycleRecord], burn_in: int) -> Optional[float]:
    lengths = [r.length for r in _qualifying(records, burn_in)]
    if not lengths:
        return None
    return float(np.mean(lengths))


def mean_peak_height(records: List[LifecycleRecord], burn_in: int) -> Optional[float]:
    peaks = [r.peak_height for r in _qualifying(records, burn_in)]
    if not peaks:
        return None
    return float(np.mean(peaks))


def gini(values) -> float:
    """
    Population Gini index from the sorted-rank formula.

    G = 2 * sum(i * x_(i)) / (n * sum(x)) - (n + 1) / n, with x_(i) ascending and
    i starting at 1. Returns 0.0 for an all-zero or empty vector.
    """
    x = np.asarray(values, dtype=float).ravel()
    if np.any(x < 0):
        raise ValueError("gini requires non-negative values")
    return float(gini_rows(x[np.newaxis, :])[0]) if x.size else 0.0


def gini_rows(matrix: np.ndarray) -> np.ndarray:
    """
    Row-wise gini of a non-negative 2-D array.

    NaN entries are treated as missing: each row is measured over its observed
    entries only.
    """
    # np.sort places NaN last, so observed values keep ranks 1..k
    m = np.sort(np.asarray(matrix, dtype=float), axis=1)
    observed = ~np.isnan(m)
    counts = observed.sum(axis=1).astype(float)
    m = np.where(observed, m, 0.0)
    totals = m.sum(axis=1)
    ranks = np.arange(1, m.shape[1] + 1, dtype=float)
    weighted = m @ ranks

    result = np.zeros(m.shape[0])
    positive = totals > 0
    k = counts[positive]
    result[positive] = 2.0 * weighted[positive] / (k * totals[positive]) - (k + 1) / k
    upper = np.where(counts > 0, (counts - 1) / np.maximum(counts, 1.0), 0.0)
    return np.clip(result, 0.0, upper)


def summarize(trace: RunTrace) -> MetricsSummary:
    burn_in = trace.params.burn_in
    records = segment_lifecycles(trace)
    qualifying = _qualifying(records, burn_in)

    return MetricsSummary(
        mean_slope=mean_slope(trace, burn_in),
        mean_lifecycle=mean_lifecycle(records, burn_in),
        turnover_ratio=turnover_ratio(trace, burn_in),
        mean_peak_height=mean_peak_height(records, burn_in),
        mean_gini=float(gini_rows(trace.visibility[burn_in:]).mean()),
        completed_lifecycles=len(qualifying),
    )
