from __future__ import annotations

import numpy as np
import pytest

from arena import ModelParams, run
from metrics import (InsufficientDataError, LifecycleRecord, gini, gini_rows, mean_lifecycle,
                     mean_peak_height, mean_slope, segment_lifecycles, summarize, turnover_ratio)


def pairwise_gini(values) -> float:
    x = np.asarray(values, dtype=float)
    if x.sum() == 0:
        return 0.0
    n = x.size
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * n * n * x.mean()))


@pytest.fixture
def scripted(make_trace):
    """
    3 slots, 20 iterations. Slot 0's first item dies at t=5, slot 2's at t=15;
    slot 0's newborn rises to 0.5 at t=15.
    """
    rows = [[0.5, 0.5, 0.0]] * 4 + [[0.0, 0.5, 0.5]] * 10 + [[0.5, 0.5, 0.0]] * 6

    def _build(burn_in):
        return make_trace(rows, events=[(5, 0, 0, 3), (15, 2, 2, 4)], burn_in=burn_in)

    return _build


class TestGini:
    def test_equal_shares(self):
        assert gini([0.25, 0.25, 0.25, 0.25]) == 0.0

    def test_one_hot(self):
        assert gini([0, 0, 1, 0]) == 0.75

    def test_ranked_values(self):
        assert gini([1, 2, 3, 4]) == pytest.approx(0.25, abs=1e-15)
        assert gini([1, 2, 3, 4]) == pytest.approx(pairwise_gini([1, 2, 3, 4]), abs=1e-15)

    def test_zero_vector(self):
        assert gini([0, 0, 0]) == 0.0
        assert gini([]) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            gini([0.5, -0.1, 0.6])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            size = int(rng.integers(2, 201))
            values = rng.random(size) * rng.choice([1e-3, 1, 1e3])
            values[rng.random(size) < 0.2] = 0.0
            assert gini(values) == pytest.approx(pairwise_gini(values), abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            values = rng.exponential(size=int(rng.integers(1, 50)))
            g = gini(values)
            assert 0.0 <= g <= (values.size - 1) / values.size

    def test_scale_invariance(self):
        values = np.random.default_rng(4).random(37)
        assert gini(2 * values) == gini(values)
        assert gini(0.5 * values) == gini(values)
        assert gini(3.7 * values) == pytest.approx(gini(values), abs=1e-15)

    def test_rows_match_scalar(self):
        matrix = np.random.default_rng(5).random((10, 8))
        assert gini_rows(matrix) == pytest.approx([gini(row) for row in matrix], abs=1e-15)

    def test_rows_skip_missing_entries(self):
        matrix = np.array([
            [1.0, np.nan, 3.0, np.nan],
            [np.nan, np.nan, np.nan, np.nan],
            [0.0, np.nan, 0.0, 0.0],
            [np.nan, 5.0, np.nan, np.nan],
        ])
        assert gini_rows(matrix) == pytest.approx([gini([1.0, 3.0]), 0.0, 0.0, 0.0], abs=1e-15)

    def test_rows_with_missing_match_pairwise_oracle(self):
        rng = np.random.default_rng(6)
        matrix = rng.random((50, 12))
        matrix[rng.random(matrix.shape) < 0.4] = np.nan
        expected = [pairwise_gini(row[~np.isnan(row)]) if (~np.isnan(row)).any() else 0.0 for row in matrix]
        assert gini_rows(matrix) == pytest.approx(expected, abs=1e-12)


class TestSegmentation:
    def test_entry_to_replacement_length(self, make_trace):
        rows = [[0.5, 0.5]] * 60
        trace = make_trace(rows, events=[(10, 0, 0, 2), (50, 0, 2, 3)])
        records = {r.item_id: r for r in segment_lifecycles(trace)}
        assert records[2].birth_t == 10
        assert records[2].death_t == 50
        assert records[2].length == 40
        assert records[3].death_t is None

    def test_no_events_all_censored(self, make_trace):
        trace = make_trace([[0.25, 0.25, 0.25, 0.25]] * 5)
        records = segment_lifecycles(trace)
        assert len(records) == 4
        assert all(not r.completed for r in records)
        assert all(r.birth_t == 1 for r in records)

    def test_hand_stepped_example(self, make_trace):
        trace = make_trace([[0.3, 0.7], [0.1, 0.9], [0.0, 1.0]], events=[(3, 0, 0, 2)])
        records = segment_lifecycles(trace)
        completed = [r for r in records if r.completed]
        assert len(completed) == 1
        assert completed[0].item_id == 0
        assert (completed[0].birth_t, completed[0].death_t) == (1, 3)
        assert completed[0].peak_height == 0.3
        assert completed[0].peak_t == 1

    def test_peak_ties_break_to_earliest(self, scripted):
        records = {r.item_id: r for r in segment_lifecycles(scripted(0))}
        assert records[1].peak_t == 1
        assert records[2].peak_t == 5
        assert records[3].peak_t == 15
        assert records[4].peak_height == 0.0

    def test_lifecycles_tile_each_slot(self):
        trace = run(ModelParams(alpha=2, n=10, c=12, iterations=3000, seed=6, burn_in=0))
        records = segment_lifecycles(trace)
        for slot in range(trace.n):
            own = sorted((r for r in records if r.slot == slot), key=lambda r: r.birth_t)
            assert own[0].birth_t == 1
            for prev, nxt in zip(own, own[1:]):
                assert prev.death_t == nxt.birth_t
            assert own[-1].death_t is None
            for r in own:
                end = r.death_t if r.death_t is not None else trace.iterations
                assert r.birth_t <= r.peak_t <= end
                assert 0.0 <= r.peak_height <= 1.0


class TestSlopeAndTurnover:
    def test_constant_trace(self, make_trace):
        assert mean_slope(make_trace([[0.5, 0.5]] * 10), 0) == 0.0

    def test_alternating_trace(self, make_trace):
        rows = [[1.0, 0.0], [0.0, 1.0]] * 5
        assert mean_slope(make_trace(rows), 0) == 1.0

    def test_too_few_rows(self, make_trace):
        trace = make_trace([[0.5, 0.5]] * 5, burn_in=4)
        with pytest.raises(InsufficientDataError):
            mean_slope(trace, 4)
        with pytest.raises(InsufficientDataError):
            turnover_ratio(trace, 4)

    def test_turnover_without_events(self, make_trace):
        assert turnover_ratio(make_trace([[0.5, 0.5]] * 10), 0) == 0.0

    def test_turnover_upper_bound(self, make_trace):
        rows = [[0.5, 0.5]] * 5
        events, next_id = [], 2
        ids = [0, 1]
        for t in range(2, 6):
            for slot in range(2):
                events.append((t, slot, ids[slot], next_id))
                ids[slot] = next_id
                next_id += 1
        trace = make_trace(rows, events=events, burn_in=1)
        assert turnover_ratio(trace, 1) == 1.0


class TestLifecycleMeans:
    def test_single_record(self):
        record = LifecycleRecord(item_id=5, slot=0, birth_t=10, death_t=50, peak_height=0.4, peak_t=20)
        assert mean_lifecycle([record], 0) == 40.0
        assert mean_peak_height([record], 0) == 0.4

    def test_censored_only(self):
        record = LifecycleRecord(item_id=5, slot=0, birth_t=10, death_t=None, peak_height=0.4, peak_t=20)
        assert mean_lifecycle([record], 0) is None
        assert mean_peak_height([record], 0) is None

    def test_burn_in_filters_on_birth(self):
        early = LifecycleRecord(item_id=1, slot=0, birth_t=1, death_t=30, peak_height=0.9, peak_t=2)
        late = LifecycleRecord(item_id=2, slot=0, birth_t=30, death_t=40, peak_height=0.1, peak_t=31)
        assert mean_lifecycle([early, late], 10) == 10.0
        assert mean_peak_height([early, late], 10) == 0.1


class TestSummarize:
    def test_scripted_trace(self, scripted):
        summary = summarize(scripted(0))
        assert summary.mean_slope == pytest.approx(2 / 57, abs=1e-15)
        assert summary.turnover_ratio == pytest.approx(1 / 30, abs=1e-15)
        assert summary.mean_lifecycle == 9.0
        assert summary.mean_peak_height == 0.5
        assert summary.mean_gini == pytest.approx(1 / 3, abs=1e-12)
        assert summary.completed_lifecycles == 2

    def test_scripted_trace_with_burn_in(self, scripted):
        summary = summarize(scripted(4))
        assert summary.mean_slope == pytest.approx(1 / 24, abs=1e-15)
        assert summary.turnover_ratio == pytest.approx(1 / 24, abs=1e-15)
        assert summary.mean_lifecycle is None
        assert summary.mean_peak_height is None
        assert summary.completed_lifecycles == 0

    def test_to_dict_serializes_absent_as_none(self, scripted):
        trace = scripted(4)
        data = summarize(trace).to_dict(trace.params)
        assert data["mean_lifecycle"] is None
        assert data["param_n"] == 3
        assert data["param_alpha"] == trace.params.alpha
        assert set(data) == {"param_alpha", "param_n", "param_c", "param_iterations", "param_seed", "param_burn_in",
                             "mean_slope", "mean_lifecycle", "turnover_ratio",
                             "mean_peak_height", "mean_gini", "completed_lifecycles"}

    @pytest.mark.parametrize("alpha", [0, 1.5, 3])
    def test_ranges_on_random_runs(self, alpha):
        trace = run(ModelParams(alpha=alpha, n=20, c=12, iterations=2000, seed=12))
        summary = summarize(trace)
        assert summary.mean_slope >= 0
        assert 0 <= summary.turnover_ratio <= 1
        assert 0 <= summary.mean_gini <= 19 / 20
        if summary.completed_lifecycles:
            assert summary.mean_lifecycle >= 1
            assert 0 <= summary.mean_peak_height <= 1
        assert summarize(trace) == summary

