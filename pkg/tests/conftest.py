from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from arena import ModelParams, ReplacementEvent, RunTrace


def _identity_from_events(n: int, iterations: int, events) -> np.ndarray:
    identity = np.tile(np.arange(n, dtype=np.int64), (iterations, 1))
    for e in sorted(events, key=lambda e: e.t):
        identity[e.t - 1:, e.slot] = e.new_id
    return identity


@pytest.fixture
def make_trace():
    """Build a RunTrace from scripted rows (row k is iteration k + 1) and (t, slot, old, new) events."""

    def _make(rows, events=(), burn_in=0, alpha=1.0, c=12.0, seed=0):
        visibility = np.asarray(rows, dtype=float)
        iterations, n = visibility.shape
        events = [ReplacementEvent(*e) for e in events]
        params = ModelParams(alpha=alpha, n=n, c=c, iterations=iterations, seed=seed, burn_in=burn_in)
        return RunTrace(
            params=params,
            visibility=visibility,
            identity=_identity_from_events(n, iterations, events),
            events=events,
        )

    return _make


@pytest.fixture
def view_rows():
    """Long CSV-shaped rows for one video, one row per hour (including zero hours)."""

    def _rows(channel_id, video_id, published_at, hourly):
        return pd.DataFrame({
            "channel_id": channel_id,
            "video_id": video_id,
            "published_at": published_at,
            "t_hour": list(range(len(hourly))),
            "views": list(hourly),
        })

    return _rows
