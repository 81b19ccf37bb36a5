import numpy as np
import pytest

from conftest import varied_weekly_rows
from driftlab.learn import ModelSpec
from driftlab.strategy import ModelStore, StrategyState, methodology_step, run_stream
from driftlab.windowing import partition_by_year
from driftlab import synth

NB = ModelSpec(kind="NB", hyperparameters={"smoothing": 0.5}, seed=0)


def stationary_stream(first=2003, last=2006, **kwargs):
    rows = []
    for year in range(first, last + 1):
        rows += varied_weekly_rows(year, **kwargs)
    return partition_by_year(rows, (first, last))


def alternating_stream(first=2003, last=2008):
    """Delay level flips hard between consecutive years so every transition
    drifts."""
    rows = []
    for i, year in enumerate(range(first, last + 1)):
        rows += varied_weekly_rows(year, base=10 if i % 2 == 0 else 55)
    return partition_by_year(rows, (first, last))


class TestBookkeeping:
    def test_baseline_trains_once(self):
        run = run_stream(stationary_stream(), 1, "mean", "baseline", NB)
        assert run.state.trainings_done == 1
        assert len(run.steps) == 3
        assert [s.trained for s in run.steps] == [True, False, False]

    def test_passive_trains_every_step(self):
        run = run_stream(stationary_stream(), 1, "mean", "passive", NB)
        assert run.state.trainings_done == 3
        assert all(s.trained for s in run.steps)

    def test_active_without_drift_matches_baseline_count(self):
        run = run_stream(stationary_stream(), 1, "mean", "active", NB)
        drifts = sum(1 for s in run.steps if s.drift is not None and s.drift.drift)
        assert run.state.trainings_done == 1 + drifts
        baseline = run_stream(stationary_stream(), 1, "mean", "baseline", NB)
        if drifts == 0:
            assert run.state.trainings_done == baseline.state.trainings_done

    def test_active_bookkeeping_identity_on_drifting_stream(self):
        run = run_stream(alternating_stream(), 1, "mean", "active", NB)
        drifts = sum(1 for s in run.steps if s.drift is not None and s.drift.drift)
        assert drifts >= 1
        assert run.state.trainings_done == 1 + drifts

    def test_replicate_arithmetic(self):
        # 4 batches, b=1 -> 3 steps; RF x 5 replicates -> 15 trainings, NB -> 3
        stream = stationary_stream(2003, 2006, per_week=30)
        rf_trainings = 0
        for rep in range(5):
            spec = ModelSpec(kind="RF", seed=100 + rep,
                             hyperparameters={"trees_count": 3, "predictors_per_split": 2})
            rf_trainings += run_stream(stream, 1, "mean", "passive", spec,
                                       replicate=rep).state.trainings_done
        assert rf_trainings == 15
        assert run_stream(stream, 1, "mean", "passive", NB).state.trainings_done == 3

    def test_first_step_drift_is_absent(self):
        run = run_stream(stationary_stream(), 1, "mean", "active", NB)
        assert run.steps[0].drift is None
        assert run.steps[0].trained


class TestWindows:
    def test_b2_first_step_needs_full_window(self):
        run = run_stream(stationary_stream(2003, 2007), 2, "mean", "passive", NB)
        assert [s.t for s in run.steps] == [2004, 2005, 2006]

    def test_year_range_restricts_steps(self):
        run = run_stream(stationary_stream(2003, 2008), 1, "mean", "passive", NB,
                         year_range=(2005, 2006))
        assert [s.t for s in run.steps] == [2005, 2006]

    def test_too_short_stream(self):
        from driftlab.windowing import WindowUnderflowError
        with pytest.raises(WindowUnderflowError):
            run_stream(stationary_stream(2003, 2004), 2, "mean", "passive", NB)

    def test_empty_test_batch_skipped(self):
        rows = varied_weekly_rows(2003) + varied_weekly_rows(2004) + varied_weekly_rows(2006)
        stream = partition_by_year(rows, (2003, 2006))
        run = run_stream(stream, 1, "mean", "passive", NB)
        # t=2004 skipped (test batch 2005 empty); t=2005 skipped too because
        # passive would have to train on the empty 2005 window
        assert run.skipped_years == [2004, 2005]
        assert [s.t for s in run.steps] == [2003]
        # baseline can still evaluate t=2005: it reuses its stored model
        baseline = run_stream(stream, 1, "mean", "baseline", NB)
        assert [s.t for s in baseline.steps] == [2003, 2005]
        assert baseline.skipped_years == [2004]

    def test_empty_training_window_skipped(self):
        rows = varied_weekly_rows(2004) + varied_weekly_rows(2005)
        stream = partition_by_year(rows, (2003, 2005))
        run = run_stream(stream, 1, "mean", "passive", NB)
        # t=2003 cannot train (empty window), t=2004 proceeds
        assert run.skipped_years == [2003]
        assert [s.t for s in run.steps] == [2004]


class TestModelReuse:
    def test_active_without_drift_reuses_same_object(self):
        stream = stationary_stream(2003, 2007)
        state = StrategyState(key=("SB", "NB", "mean", "active", 1))
        seen = []
        for t in (2003, 2004, 2005, 2006):
            step = methodology_step(state, stream, t, 1, "mean", "active", NB)
            assert step is not None
            seen.append((step.trained, state.current_model))
        for (trained, model), (_, prev_model) in zip(seen[1:], seen[:-1]):
            if not trained:
                assert model is prev_model

    def test_passive_equals_active_when_every_step_drifts(self):
        stream = alternating_stream()
        passive = run_stream(stream, 1, "mean", "passive", NB)
        active = run_stream(stream, 1, "mean", "active", NB)
        assert all(s.drift.drift for s in active.steps[1:])
        for p_step, a_step in zip(passive.steps, active.steps):
            assert p_step.confusion == a_step.confusion
            assert p_step.metrics == a_step.metrics


class TestStepResults:
    def test_metrics_recomputable_from_confusion(self):
        from driftlab.learn import compute_metrics
        run = run_stream(stationary_stream(), 1, "mean", "passive", NB)
        for step in run.steps:
            assert step.metrics == compute_metrics(step.confusion)

    def test_confusion_covers_test_batch(self):
        stream = stationary_stream()
        run = run_stream(stream, 1, "mean", "passive", NB)
        for step in run.steps:
            test_batch = next(b for b in stream if b.year == step.t + 1)
            assert step.confusion.total == len(test_batch)


class TestModelStore:
    def test_save_and_load_latest(self, tmp_path):
        stream = stationary_stream()
        store = ModelStore(tmp_path / "models")
        run = run_stream(stream, 1, "mean", "passive", NB, store=store,
                         store_airport=None, replicate=0)
        assert run.state.trainings_done == 3
        loaded = store.load_latest(None, "NB", "mean", "passive", 1, 0)
        assert loaded.training_window == (2005, 1)  # last trained step
        from driftlab.learn import predict
        rows = stream[-1].rows
        assert np.array_equal(predict(loaded, rows),
                              predict(run.state.current_model, rows))

    def test_manifest_tracks_history(self, tmp_path):
        import json
        stream = stationary_stream()
        store = ModelStore(tmp_path / "models")
        run_stream(stream, 1, "mean", "passive", NB, store=store, store_airport="SBGR")
        key_dir = tmp_path / "models" / "SBGR__NB__mean__passive__b1__r0"
        manifest = json.loads((key_dir / "manifest.json").read_text())
        assert manifest["latest"] == "model_t2005.json"
        assert manifest["history"] == ["model_t2003.json", "model_t2004.json",
                                       "model_t2005.json"]
        assert manifest["key"]["airport"] == "SBGR"

    def test_missing_key_errors(self, tmp_path):
        store = ModelStore(tmp_path / "models")
        with pytest.raises(FileNotFoundError):
            store.load_latest(None, "NB", "mean", "active", 1, 0)


class TestOnSyntheticDrift:
    def test_active_retrains_at_injected_shift(self):
        spec = synth.SyntheticSpec(years=6, flights_per_week=120, base_delay_rate=0.2,
                                   drift_events=(synth.DriftEvent(at_year=4, kind="prior_shift",
                                                                  magnitude=0.25),),
                                   seed=13)
        rows, _ = synth.generate_stream(spec)
        stream = partition_by_year(rows, (2001, 2006))
        run = run_stream(stream, 1, "mean", "active", NB)
        by_t = {s.t: s for s in run.steps}
        assert by_t[2004].drift.drift  # window 2004 vs 2003 straddles the shift
        assert by_t[2004].trained
        assert run.state.trainings_done == 1 + sum(
            1 for s in run.steps if s.drift is not None and s.drift.drift)
