import numpy as np
import pytest

from conftest import make_row, varied_weekly_rows, weekly_rows
from driftlab import drift
from driftlab.drift import (DETECTORS, InsufficientWeeklySupportError, WeeklyProportions,
                            WeekEntry, act_drift, decide_drift, detect,
                            weekly_delay_proportions)
from driftlab.stats import DegenerateSampleError
from driftlab.windowing import batch_sequence, partition_by_year


def proportions(values, year=2003):
    entries = tuple(WeekEntry(year=year, week_of_year=w + 1, n_flights=100,
                              delay_proportion=float(v))
                    for w, v in enumerate(values))
    return WeeklyProportions(entries=entries)


def noisy(mean, n=52, seed=0, scale=0.03):
    rng = np.random.default_rng(seed)
    return np.clip(rng.normal(mean, scale, size=n), 0.0, 1.0)


class TestWeeklyProportions:
    def test_uniform_construction(self):
        rows = weekly_rows(2003, weeks=52, per_week=100, delayed_per_week=20)
        stream = partition_by_year(rows, (2003, 2003))
        weekly = weekly_delay_proportions(batch_sequence(stream, 2003, 1))
        assert len(weekly) == 52
        assert np.allclose(weekly.proportions, 0.2)

    def test_week_without_flights_has_no_entry(self):
        rows = [r for r in weekly_rows(2003, weeks=10, per_week=20, delayed_per_week=5)
                if r.week_of_year != 4]
        stream = partition_by_year(rows, (2003, 2003))
        weekly = weekly_delay_proportions(batch_sequence(stream, 2003, 1))
        assert len(weekly) == 9
        assert all(e.week_of_year != 4 for e in weekly.entries)

    def test_two_year_window_has_104_entries(self):
        rows = weekly_rows(2003) + weekly_rows(2004)
        stream = partition_by_year(rows, (2003, 2004))
        weekly = weekly_delay_proportions(batch_sequence(stream, 2004, 2))
        assert len(weekly) == 104
        years = [e.year for e in weekly.entries]
        assert years == sorted(years)

    def test_thin_weeks_dropped(self):
        rows = weekly_rows(2003, weeks=8, per_week=3, delayed_per_week=1)
        rows += weekly_rows(2004, weeks=8, per_week=10, delayed_per_week=2)
        stream = partition_by_year(rows, (2003, 2004))
        weekly = weekly_delay_proportions(batch_sequence(stream, 2004, 2),
                                          min_week_flights=5)
        assert all(e.year == 2004 for e in weekly.entries)

    def test_all_weeks_thin_errors(self):
        rows = weekly_rows(2003, weeks=6, per_week=2, delayed_per_week=1)
        stream = partition_by_year(rows, (2003, 2003))
        with pytest.raises(InsufficientWeeklySupportError):
            weekly_delay_proportions(batch_sequence(stream, 2003, 1))


class TestDetect:
    def test_identical_vectors_no_drift(self):
        vec = proportions(noisy(0.2, seed=1))
        for dd in DETECTORS:
            assert not detect(dd, vec, vec).drift

    def test_mean_shift_detected(self):
        prev = proportions(noisy(0.20, seed=2))
        cur = proportions(noisy(0.45, seed=3))
        decision = detect("mean", cur, prev)
        assert decision.drift
        assert decision.mean_test is not None and decision.variance_test is None

    def test_union_is_exact_or(self):
        rng_seeds = range(20)
        for seed in rng_seeds:
            prev = proportions(noisy(0.2, seed=seed))
            cur = proportions(noisy(0.2 + 0.02 * (seed % 3), seed=seed + 100,
                                    scale=0.03 * (1 + seed % 2)))
            dm = detect("mean", cur, prev)
            dv = detect("variance", cur, prev)
            du = detect("mean_variance", cur, prev)
            assert du.drift == (dm.drift or dv.drift)
            assert du.mean_test.reject == dm.mean_test.reject
            assert du.variance_test.reject == dv.variance_test.reject

    def test_swap_symmetry_of_drift_flag(self):
        for seed in range(10):
            a = proportions(noisy(0.2, seed=seed))
            b = proportions(noisy(0.26, seed=seed + 50, scale=0.05))
            for dd in DETECTORS:
                assert detect(dd, a, b).drift == detect(dd, b, a).drift

    def test_short_vectors_rejected(self):
        short = proportions([0.2, 0.3, 0.25])
        ok = proportions(noisy(0.2, seed=4))
        with pytest.raises(ValueError):
            detect("mean", short, ok)

    def test_constant_vector_propagates_degenerate_error(self):
        const = proportions([0.2] * 52)
        ok = proportions(noisy(0.2, seed=5))
        with pytest.raises(DegenerateSampleError):
            detect("mean", const, ok)

    def test_unknown_detector(self):
        vec = proportions(noisy(0.2, seed=6))
        with pytest.raises(ValueError):
            detect("median", vec, vec)

    def test_normality_dispatch_recorded(self):
        normal_vec = proportions(noisy(0.5, seed=7, scale=0.05))
        skewed = proportions(np.concatenate([np.full(45, 0.02), np.linspace(0.3, 0.9, 7)]))
        decision = detect("mean_variance", normal_vec, skewed)
        assert decision.normal_b is False
        assert decision.mean_test.test_name == "wilcoxon"
        assert decision.variance_test.test_name == "levene"
        both_normal = detect("mean_variance", normal_vec,
                             proportions(noisy(0.5, seed=8, scale=0.05)))
        if both_normal.normal_a and both_normal.normal_b:
            assert both_normal.mean_test.test_name == "welch_t"
            assert both_normal.variance_test.test_name == "f_variance"


class TestActDrift:
    def _windows(self, rates=(20, 20, 20)):
        rows = []
        for i, delayed in enumerate(rates):
            rows += weekly_rows(2003 + i, weeks=52, per_week=100,
                                delayed_per_week=delayed)
        stream = partition_by_year(rows, (2003, 2003 + len(rates) - 1))
        return stream

    def test_passive_always_trains(self):
        stream = self._windows()
        d_i = batch_sequence(stream, 2004, 1)
        d_j = batch_sequence(stream, 2003, 1)
        assert act_drift("mean", "passive", d_i, d_j) is True
        assert act_drift("mean", "passive", d_i, None) is True

    def test_baseline_trains_only_without_lagged_window(self):
        stream = self._windows()
        d_i = batch_sequence(stream, 2004, 1)
        d_j = batch_sequence(stream, 2003, 1)
        assert act_drift("mean", "baseline", d_i, None) is True
        assert act_drift("mean", "baseline", d_i, d_j) is False

    def test_active_identical_distributions_no_retrain(self):
        rows = varied_weekly_rows(2003) + varied_weekly_rows(2004)
        stream = partition_by_year(rows, (2003, 2004))
        d_i = batch_sequence(stream, 2004, 1)
        d_j = batch_sequence(stream, 2003, 1)
        assert act_drift("mean", "active", d_i, d_j) is False
        assert act_drift("mean_variance", "active", d_i, d_j) is False

    def test_active_first_step_forced(self):
        stream = self._windows()
        assert act_drift("mean", "active", batch_sequence(stream, 2003, 1), None) is True

    def test_active_errored_detection_defaults_to_drift(self, caplog):
        # constant proportions make the tests degenerate -> fail-safe retrain
        stream = self._windows((20, 20))
        d_i = batch_sequence(stream, 2004, 1)
        d_j = batch_sequence(stream, 2003, 1)
        with caplog.at_level("WARNING"):
            train, decision = decide_drift("mean", "active", d_i, d_j)
        assert train is True and decision is None
        assert "treating as drift" in caplog.text

    def test_detection_is_label_only(self):
        # same labels, different features -> identical decision
        rows_a = (varied_weekly_rows(2003, base=14)
                  + varied_weekly_rows(2004, base=30))
        stream_a = partition_by_year(rows_a, (2003, 2004))
        rows_b = []
        for r in [row for b in stream_a for row in b.rows]:
            rows_b.append(make_row(year=r.year, week=r.week_of_year, delayed=r.delayed,
                                   features=tuple(np.sqrt(r.numeric_features))))
        stream_b = partition_by_year(rows_b, (2003, 2004))
        for dd in DETECTORS:
            da = detect(dd, weekly_delay_proportions(batch_sequence(stream_a, 2004, 1)),
                        weekly_delay_proportions(batch_sequence(stream_a, 2003, 1)))
            db = detect(dd, weekly_delay_proportions(batch_sequence(stream_b, 2004, 1)),
                        weekly_delay_proportions(batch_sequence(stream_b, 2003, 1)))
            assert da.drift == db.drift
