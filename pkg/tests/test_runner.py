import json

import numpy as np
import pytest

from driftlab import runner, synth
from driftlab.runner import (ExperimentGrid, correlate_drifts_performance,
                             count_drifts, drift_analysis, export_results, grid_cells,
                             load_results, row_key, topk_frequency)

FAST_HP = {
    "NB": {"smoothing": 0.5},
    "RF": {"trees_count": 3, "predictors_per_split": 2},
    "MLP": {"hidden_neurons": 4, "learning_rate": 0.5, "epochs": 6, "batch_size": 64},
}


def synth_rows(years=6, seed=0, events=(), flights=40, weeks=26):
    spec = synth.SyntheticSpec(years=years, weeks_per_year=weeks, flights_per_week=flights,
                               base_delay_rate=0.2, drift_events=tuple(events), seed=seed)
    rows, _ = synth.generate_stream(spec)
    return rows


def tiny_grid(**overrides):
    defaults = dict(airports=(None,), classifiers=("NB",), years=(2002, 2005),
                    bss=(1,), detectors=("mean",), strategies=("active",), replicates=5)
    defaults.update(overrides)
    return ExperimentGrid(**defaults)


class TestGridCells:
    def test_restricted_cell_rows(self, tmp_path):
        rows = synth_rows(years=4)
        grid = tiny_grid(years=(2001, 2004))
        results = drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=FAST_HP)
        assert len(results) == 3  # 4-year stream, b=1, active NB: t = 2001..2003
        assert all(r["strategy"] == "active" and r["detector"] == "mean" for r in results)

    def test_full_grid_cell_count(self):
        grid = ExperimentGrid(airports=(None,), classifiers=("NB", "NN", "RF"))
        cells = grid_cells(grid)
        # per classifier and b: baseline + passive + 3 active detectors;
        # NB collapses to one replicate
        expected = 3 * (5 * 1) + 2 * 3 * (5 * 5)
        assert len(cells) == expected == 165

    def test_nn_alias_canonicalized(self):
        grid = ExperimentGrid(classifiers=("NN",))
        assert grid.classifiers == ("MLP",)

    def test_cells_are_deterministic(self):
        grid = ExperimentGrid(airports=(None, "SBGR"))
        assert grid_cells(grid) == grid_cells(grid)


class TestDriftAnalysis:
    def test_full_sweep_row_count_matches_analytic(self, tmp_path):
        rows = synth_rows(years=6)
        grid = ExperimentGrid(airports=(None,), classifiers=("NB", "NN", "RF"),
                              years=(2002, 2005), bss=(1, 2, 3))
        results = drift_analysis(rows, grid, tmp_path / "res.csv",
                                 hyperparameters=FAST_HP, base_seed=7)
        # the partition is padded so every t in [2002, 2005] has a full
        # b-window for every b (same test years across BSS, as in the
        # sweep protocol): 4 steps for every cell
        expected = 4 * len(grid_cells(grid))
        assert len(results) == expected == 660
        assert not any(r["error"] for r in results)
        keys = {row_key(r) for r in results}
        assert len(keys) == len(results)

    def test_resume_appends_nothing_when_complete(self, tmp_path):
        rows = synth_rows(years=5)
        grid = tiny_grid(years=(2001, 2004), classifiers=("NB", "RF"))
        out = tmp_path / "res.csv"
        first = drift_analysis(rows, grid, out, hyperparameters=FAST_HP)
        content = out.read_text()
        second = drift_analysis(rows, grid, out, hyperparameters=FAST_HP)
        assert out.read_text() == content
        assert len(second) == len(first)

    def test_resume_after_interruption_no_duplicates(self, tmp_path):
        rows = synth_rows(years=5)
        grid = tiny_grid(years=(2001, 2004), classifiers=("NB", "RF"),
                         strategies=("baseline", "passive", "active"))
        out = tmp_path / "res.csv"
        full = drift_analysis(rows, grid, out, hyperparameters=FAST_HP)
        lines = out.read_text().splitlines(keepends=True)
        cut = len(lines) - 7  # drop a partial tail mid-cell
        (tmp_path / "res.csv").write_text("".join(lines[:cut]))
        resumed = drift_analysis(rows, grid, out, hyperparameters=FAST_HP)
        assert len(resumed) == len(full)
        keys = [row_key(r) for r in resumed]
        assert len(keys) == len(set(keys))
        assert sorted(map(str, keys)) == sorted(str(row_key(r)) for r in full)
        # deterministic seeds: recomputed rows identical to the originals
        by_key_full = {row_key(r): r for r in full}
        for row in resumed:
            assert row == by_key_full[row_key(row)]

    def test_failing_cell_records_error_marker(self, tmp_path):
        rows = synth_rows(years=5)
        bad_hp = dict(FAST_HP)
        bad_hp["RF"] = {"trees_count": 2, "predictors_per_split": 99}  # > feature count
        grid = tiny_grid(years=(2001, 2004), classifiers=("NB", "RF"))
        results = drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=bad_hp)
        errors = [r for r in results if r["error"]]
        assert errors and all(r["classifier"] == "RF" for r in errors)
        assert any(not r["error"] and r["classifier"] == "NB" for r in results)

    def test_manifest_written(self, tmp_path):
        rows = synth_rows(years=4)
        out = tmp_path / "res.csv"
        drift_analysis(rows, tiny_grid(years=(2001, 2003)), out, hyperparameters=FAST_HP)
        manifest = json.loads((tmp_path / "res.csv.manifest.json").read_text())
        assert manifest["version"] == runner.RESULTS_VERSION
        assert manifest["grid"]["airports"] == ["SB"]
        assert manifest["columns"][0] == "airport"

    def test_airport_scale_filters_rows(self, tmp_path):
        rows = synth_rows(years=4)
        # no SBGR rows in a synthetic stream: every cell errors (no non-empty batch)
        grid = tiny_grid(airports=("SBGR",), years=(2001, 2003), strategies=("passive",))
        results = drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=FAST_HP)
        assert all(r["airport"] == "SBGR" for r in results)
        assert all(r["error"] for r in results)

    def test_grid_search_used_when_hyperparameters_absent(self, tmp_path):
        rows = synth_rows(years=4, flights=20, weeks=10)
        grid = tiny_grid(years=(2001, 2003), classifiers=("NB",), strategies=("passive",))
        results = drift_analysis(rows, grid, tmp_path / "res.csv",
                                 hyperparameters=None, cv_folds=3)
        assert results and not any(r["error"] for r in results)


class TestExport:
    def _rows(self, tmp_path):
        rows = synth_rows(years=5)
        grid = tiny_grid(years=(2001, 2004), strategies=("baseline", "passive", "active"))
        return drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=FAST_HP)

    def test_round_trip_exact(self, tmp_path):
        results = self._rows(tmp_path)
        out = tmp_path / "export.csv"
        export_results(results, out)
        assert load_results(out) == results
        export_results(load_results(out), tmp_path / "export2.csv")
        assert (tmp_path / "export2.csv").read_text() == out.read_text()

    def test_empty_results_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        export_results([], out)
        lines = out.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].split(",") == list(runner.RESULT_COLUMNS)

    def test_three_rows_three_lines(self, tmp_path):
        results = self._rows(tmp_path)[:3]
        out = tmp_path / "three.csv"
        export_results(results, out)
        assert len(out.read_text().splitlines()) == 4

    def test_tsv(self, tmp_path):
        results = self._rows(tmp_path)[:2]
        out = tmp_path / "t.tsv"
        export_results(results, out, fmt="tsv")
        assert "\t" in out.read_text().splitlines()[0]
        with pytest.raises(ValueError):
            export_results(results, out, fmt="xlsx")


def fake_row(airport="SB", classifier="NB", bss=1, detector="mean", strategy="active",
             replicate=0, t=2003, drift=False, f1=0.5, accuracy=0.8, precision=0.6,
             recall=0.5, error=None):
    return {"airport": airport, "classifier": classifier, "bss": bss, "detector": detector,
            "strategy": strategy, "replicate": replicate, "t": t, "trained": True,
            "drift": drift, "tp": 1, "fp": 1, "fn": 1, "tn": 1, "accuracy": accuracy,
            "precision": precision, "recall": recall, "f1": f1, "error": error}


class TestCountDrifts:
    def test_counts_unique_steps_across_replicates(self):
        rows = []
        for rep in range(5):
            for t, flag in ((2004, True), (2005, False), (2006, True)):
                rows.append(fake_row(replicate=rep, t=t, drift=flag, classifier="RF"))
        report = count_drifts(rows)
        assert report.counts == [{"airport": "SB", "detector": "mean", "bss": 1, "drifts": 2}]

    def test_union_dominance_on_synthetic_sweep(self, tmp_path):
        rows = synth_rows(years=6, events=[synth.DriftEvent(at_year=3, kind="prior_shift",
                                                            magnitude=0.2)])
        grid = tiny_grid(years=(2001, 2005), detectors=("mean", "variance", "mean_variance"))
        results = drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=FAST_HP)
        groups = count_drifts(results).groups()
        union = groups[("SB", "mean_variance", 1)]
        assert union >= max(groups[("SB", "mean", 1)], groups[("SB", "variance", 1)])

    def test_two_injected_shifts_counted(self, tmp_path):
        events = [synth.DriftEvent(at_year=3, kind="prior_shift", magnitude=0.25),
                  synth.DriftEvent(at_year=6, kind="prior_shift", magnitude=-0.2)]
        rows = synth_rows(years=8, events=events, flights=150, weeks=52)
        grid = tiny_grid(years=(2001, 2007))
        results = drift_analysis(rows, grid, tmp_path / "res.csv", hyperparameters=FAST_HP)
        count = count_drifts(results).groups()[("SB", "mean", 1)]
        assert 2 <= count <= 4  # both shifts plus at most a small false-alarm budget

    def test_ab_summary(self):
        rows = []
        for airport, drifts in (("SBGR", (True, True)), ("SBRJ", (True, False))):
            for t, flag in zip((2004, 2005), drifts):
                rows.append(fake_row(airport=airport, t=t, drift=flag))
        report = count_drifts(rows)
        summary = report.ab_summary[0]
        assert summary["mean"] == pytest.approx(1.5)
        assert summary["sd"] == pytest.approx(np.std([2, 1], ddof=1))


class TestTopK:
    def _results(self):
        rows = []
        combos = [("baseline", "na", "NB", 1), ("passive", "na", "NB", 1),
                  ("active", "mean", "NB", 1), ("active", "variance", "NB", 1)]
        scores = {combos[0]: 0.2, combos[1]: 0.8, combos[2]: 0.6, combos[3]: 0.4}
        for combo in combos:
            for t in (2004, 2005, 2006):
                rows.append(fake_row(strategy=combo[0], detector=combo[1],
                                     classifier=combo[2], bss=combo[3],
                                     f1=scores[combo], t=t))
        return rows

    def test_ranking_by_median(self):
        report = topk_frequency(self._results(), [2])
        assert report.combos[0][0] == ("passive", "na", "NB", 1)
        assert report.strategy_freq[2] == {"active": 0.5, "passive": 0.5}

    def test_k_equal_total_gives_base_rates(self):
        report = topk_frequency(self._results(), [4])
        assert report.strategy_freq[4] == {"active": 0.5, "baseline": 0.25, "passive": 0.25}
        assert report.classifier_freq[4] == {"NB": 1.0}
        assert report.bss_freq[4] == {1: 1.0}

    def test_identical_metrics_tie_break_documented(self):
        rows = self._results()
        for r in rows:
            r["f1"] = 0.5
        r1 = topk_frequency(rows, [4])
        r2 = topk_frequency(rows, [4])
        assert r1.combos == r2.combos  # deterministic lexicographic tie-break
        assert r1.strategy_freq[4] == {"active": 0.5, "baseline": 0.25, "passive": 0.25}

    def test_undefined_metric_ranks_last(self):
        rows = self._results()
        for r in rows:
            if r["strategy"] == "passive":
                r["f1"] = None
        report = topk_frequency(rows, [4])
        assert report.combos[-1][0] == ("passive", "na", "NB", 1)
        assert report.combos[-1][1] == -np.inf

    def test_k_capped_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            report = topk_frequency(self._results(), [99])
        assert "capped" in caplog.text
        assert 4 in report.strategy_freq

    def test_bad_metric(self):
        with pytest.raises(ValueError):
            topk_frequency(self._results(), [2], rank_metric="auc")

    def test_empty_results(self):
        with pytest.raises(ValueError):
            topk_frequency([], [2])


class TestCorrelate:
    def _monotone_results(self):
        """Drift counts and f1 rise together across airports: r > 0."""
        rows = []
        for i, airport in enumerate(["SBAA", "SBBB", "SBCC", "SBDD", "SBEE"]):
            n_drifts = i + 1
            f1 = 0.3 + 0.1 * i
            for t in range(2004, 2010):
                rows.append(fake_row(airport=airport, t=t, drift=t - 2004 < n_drifts,
                                     f1=f1, accuracy=0.9 - 0.05 * i, recall=f1,
                                     precision=0.5))
        return rows

    def test_monotone_relation_sign(self):
        report = correlate_drifts_performance(self._monotone_results())
        i = report.columns.index("drifts_mean")
        j = report.columns.index("f1")
        assert report.r[i, j] > 0.9
        k = report.columns.index("accuracy")
        assert report.r[i, k] < -0.9

    def test_diagonal_is_one(self):
        report = correlate_drifts_performance(self._monotone_results())
        assert np.allclose(np.diag(report.r), 1.0)

    def test_constant_column_excluded_with_note(self):
        report = correlate_drifts_performance(self._monotone_results())
        assert "precision" not in report.columns
        assert any("precision" in note for note in report.notes)

    def test_requires_three_groups(self):
        rows = [fake_row(airport="SBAA"), fake_row(airport="SBBB")]
        with pytest.raises(ValueError, match="3"):
            correlate_drifts_performance(rows)

    def test_baseline_passive_ignored(self):
        rows = self._monotone_results()
        rows.append(fake_row(airport="SBAA", strategy="passive", detector="na",
                             drift=None, f1=0.99))
        with_extra = correlate_drifts_performance(rows)
        without = correlate_drifts_performance(self._monotone_results())
        assert np.allclose(with_extra.r, without.r, equal_nan=True)
