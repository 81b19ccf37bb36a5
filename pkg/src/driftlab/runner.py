"""Cross-product experiment execution over (airport, classifier, BSS,
detector, strategy, replicate), with a durable append-only results table
(resume skips completed work), plus the top-k, drift-count, and correlation
analyses over the finished table.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import learn, stats
from .drift import DETECTORS, STRATEGIES, STRATEGY_ACTIVE
from .ingest import TOP_AIRPORTS, FlightFeatureRow
from .learn import KIND_NB, ModelSpec, canonical_kind
from .strategy import ModelStore, run_stream
from .windowing import partition_by_year

log = logging.getLogger(__name__)

RESULTS_VERSION = "driftlab-results-1"

RESULT_COLUMNS = ("airport", "classifier", "bss", "detector", "strategy",
                  "replicate", "t", "trained", "drift",
                  "tp", "fp", "fn", "tn",
                  "accuracy", "precision", "recall", "f1", "error")

_INT_COLUMNS = ("bss", "replicate", "t", "tp", "fp", "fn", "tn")
_FLOAT_COLUMNS = ("accuracy", "precision", "recall", "f1")
METRIC_COLUMNS = _FLOAT_COLUMNS

SB_KEY = "SB"


@dataclass(frozen=True)
class ExperimentGrid:
    """Full cross-product by default (the system scale plus each of the ten
    airports); filter any field for a restricted sweep."""
    airports: tuple = (None,) + TOP_AIRPORTS
    classifiers: tuple = ("NB", "NN", "RF")
    years: tuple[int, int] = (2003, 2017)
    bss: tuple[int, ...] = (1, 2, 3)
    detectors: tuple[str, ...] = DETECTORS
    strategies: tuple[str, ...] = STRATEGIES
    replicates: int = 5

    def __post_init__(self):
        object.__setattr__(self, "classifiers",
                           tuple(canonical_kind(c) for c in self.classifiers))
        for dd in self.detectors:
            if dd not in DETECTORS:
                raise ValueError(f"unknown detector {dd!r}")
        for dh in self.strategies:
            if dh not in STRATEGIES:
                raise ValueError(f"unknown strategy {dh!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


@dataclass(frozen=True)
class Cell:
    airport: str | None
    classifier: str
    b: int
    strategy: str
    detector: str | None
    replicate: int

    @property
    def airport_key(self) -> str:
        return self.airport or SB_KEY

    @property
    def detector_key(self) -> str:
        return self.detector or "na"


def grid_cells(grid: ExperimentGrid) -> list[Cell]:
    """Deterministic cell enumeration; baseline and passive run once (their
    detector column records 'na'), active runs once per detector; the
    deterministic NB collapses to a single replicate."""
    cells = []
    for airport, kind, b in itertools.product(grid.airports, grid.classifiers, grid.bss):
        reps = 1 if kind == KIND_NB else grid.replicates
        for dh in grid.strategies:
            detectors = grid.detectors if dh == STRATEGY_ACTIVE else (None,)
            for dd, rep in itertools.product(detectors, range(reps)):
                cells.append(Cell(airport=airport, classifier=kind, b=b,
                                  strategy=dh, detector=dd, replicate=rep))
    return cells


def expected_step_years(stream_years: list[int], b: int,
                        year_range: tuple[int, int]) -> list[int]:
    lo, hi = year_range
    return [t for t in stream_years[b - 1:-1] if lo <= t <= hi]


# ---------------------------------------------------------------------------
# Result rows and table IO
# ---------------------------------------------------------------------------

def _format_value(column: str, value) -> str:
    if value is None:
        return ""
    if column in ("trained", "drift") and isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(column: str, raw: str):
    if raw == "":
        return None
    if column in _INT_COLUMNS:
        return int(raw)
    if column in _FLOAT_COLUMNS:
        return float(raw)
    if column in ("trained", "drift") and raw in ("true", "false"):
        return raw == "true"
    return raw


def row_key(row: dict) -> tuple:
    return (row["airport"], row["classifier"], row["bss"], row["detector"],
            row["strategy"], row["replicate"], row["t"])


def load_results(path: str | Path) -> list[dict]:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header in {path}")
        for fields_ in reader:
            rows.append({col: _parse_value(col, raw)
                         for col, raw in zip(RESULT_COLUMNS, fields_)})
    return rows


def export_results(rows: list[dict], path: str | Path, fmt: str = "csv") -> Path:
    """Write the table with the canonical column order; loading the file
    reproduces the rows exactly."""
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    delim = "," if fmt == "csv" else "\t"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delim)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_format_value(col, row.get(col)) for col in RESULT_COLUMNS])
    return path


def _step_to_row(cell: Cell, step) -> dict:
    m = step.metrics
    return {
        "airport": cell.airport_key,
        "classifier": cell.classifier,
        "bss": cell.b,
        "detector": cell.detector_key,
        "strategy": cell.strategy,
        "replicate": cell.replicate,
        "t": step.t,
        "trained": step.trained,
        "drift": step.drift.drift if step.drift is not None else None,
        "tp": step.confusion.tp, "fp": step.confusion.fp,
        "fn": step.confusion.fn, "tn": step.confusion.tn,
        "accuracy": m.accuracy, "precision": m.precision,
        "recall": m.recall, "f1": m.f1,
        "error": None,
    }


def _error_row(cell: Cell, message: str) -> dict:
    return {"airport": cell.airport_key, "classifier": cell.classifier, "bss": cell.b,
            "detector": cell.detector_key, "strategy": cell.strategy,
            "replicate": cell.replicate, "t": -1, "trained": None, "drift": None,
            "tp": None, "fp": None, "fn": None, "tn": None,
            "accuracy": None, "precision": None, "recall": None, "f1": None,
            "error": message}


# ---------------------------------------------------------------------------
# The sweep
# ---------------------------------------------------------------------------

def drift_analysis(rows: list[FlightFeatureRow], grid: ExperimentGrid,
                   out_path: str | Path,
                   hyperparameters: dict[str, dict] | None = None,
                   base_seed: int = 1000,
                   alpha: float = 0.05,
                   min_week_flights: int = 5,
                   cv_folds: int = 10,
                   model_store_dir: str | Path | None = None) -> list[dict]:
    """Run every grid cell, appending one line per (cell, step) to the
    durable table at out_path. Completed work is skipped on restart
    (append-only with keyed dedupe at (cell, t, replicate) granularity);
    because per-cell seeds are deterministic, a recomputed partial cell
    reproduces its already-written rows and only missing ones are appended.
    A failing cell writes an error-marker row and does not abort the sweep.

    hyperparameters maps kind -> hyperparameter dict; kinds left out are
    tuned by k-fold grid search on the first batch of their scale, frozen
    for every later retrain.
    """
    out_path = Path(out_path)
    existing_keys: set[tuple] = set()
    if out_path.exists():
        existing_keys = {row_key(r) for r in load_results(out_path)}
        log.info("resume: %d rows already in %s", len(existing_keys), out_path)
        fh = open(out_path, "a", newline="", encoding="utf-8")
        writer = csv.writer(fh)
    else:
        fh = open(out_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        fh.flush()
    manifest = {
        "version": RESULTS_VERSION,
        "grid": {"airports": [a or SB_KEY for a in grid.airports],
                 "classifiers": list(grid.classifiers),
                 "years": list(grid.years), "bss": list(grid.bss),
                 "detectors": list(grid.detectors), "strategies": list(grid.strategies),
                 "replicates": grid.replicates},
        "base_seed": base_seed, "alpha": alpha, "min_week_flights": min_week_flights,
        "columns": list(RESULT_COLUMNS),
    }
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2), encoding="utf-8")

    hyperparameters = dict(hyperparameters or {})
    store = ModelStore(model_store_dir) if model_store_dir else None
    first_year, last_year = grid.years
    batch_span = (first_year - (max(grid.bss) - 1), last_year + 1)

    written: list[dict] = []
    streams: dict[str | None, list] = {}
    specs: dict[tuple[str | None, str], dict] = {}
    try:
        for cell in grid_cells(grid):
            if cell.airport not in streams:
                scoped = [r for r in rows if cell.airport is None
                          or r.origin_airport == cell.airport]
                streams[cell.airport] = partition_by_year(scoped, batch_span)
            stream = streams[cell.airport]
            stream_years = [b.year for b in stream]
            expected = expected_step_years(stream_years, cell.b, grid.years)
            keys = [(cell.airport_key, cell.classifier, cell.b, cell.detector_key,
                     cell.strategy, cell.replicate, t) for t in expected]
            if keys and all(k in existing_keys for k in keys):
                continue
            try:
                hp = _cell_hyperparameters(cell, stream, hyperparameters, specs,
                                           cv_folds, base_seed)
                spec = ModelSpec(kind=cell.classifier, hyperparameters=hp,
                                 seed=base_seed + cell.replicate)
                run = run_stream(stream, cell.b, cell.detector or DETECTORS[0],
                                 cell.strategy, spec, year_range=grid.years,
                                 alpha=alpha, min_week_flights=min_week_flights,
                                 replicate=cell.replicate, store=store,
                                 store_airport=cell.airport)
                new_rows = [_step_to_row(cell, step) for step in run.steps]
            except Exception as exc:  # a failing cell must not abort the sweep
                log.exception("cell %s failed", cell)
                new_rows = [_error_row(cell, f"{type(exc).__name__}: {exc}")]
            appended = 0
            for row in new_rows:
                key = row_key(row)
                if key in existing_keys:
                    continue
                writer.writerow([_format_value(col, row.get(col)) for col in RESULT_COLUMNS])
                existing_keys.add(key)
                written.append(row)
                appended += 1
            if appended:
                fh.flush()
    finally:
        fh.close()
    return load_results(out_path)


def _cell_hyperparameters(cell: Cell, stream, hyperparameters, specs_cache,
                          cv_folds: int, base_seed: int) -> dict:
    if cell.classifier in hyperparameters:
        return hyperparameters[cell.classifier]
    cache_key = (cell.airport, cell.classifier)
    if cache_key not in specs_cache:
        first_nonempty = next((b for b in stream if not b.is_empty), None)
        if first_nonempty is None:
            raise ValueError("no non-empty batch available for hyperparameter search")
        rows = list(first_nonempty.rows)
        grid = learn.default_grid(cell.classifier, learn.feature_count(rows))
        spec = learn.grid_search_cv(cell.classifier, grid, rows,
                                    k=min(cv_folds, max(2, len(rows))), seed=base_seed)
        specs_cache[cache_key] = spec.hyperparameters
    return specs_cache[cache_key]


# ---------------------------------------------------------------------------
# Analyses
# ---------------------------------------------------------------------------

@dataclass
class DriftCountReport:
    counts: list[dict]          # airport, detector, bss, drifts
    ab_summary: list[dict]      # detector, bss, mean, sd over airports

    def groups(self) -> dict[tuple, int]:
        return {(r["airport"], r["detector"], r["bss"]): r["drifts"] for r in self.counts}


def count_drifts(results: list[dict]) -> DriftCountReport:
    """Detected drifts per (airport, detector, bss) among active cells; the
    drift flag is model-independent, so replicates/classifiers are collapsed
    by unique step year."""
    flags: dict[tuple, dict[int, bool]] = {}
    for row in results:
        if row["strategy"] != STRATEGY_ACTIVE or row["error"] or row["drift"] is None:
            continue
        group = (row["airport"], row["detector"], row["bss"])
        per_t = flags.setdefault(group, {})
        if row["t"] in per_t and per_t[row["t"]] != row["drift"]:
            log.warning("inconsistent drift flag for %s t=%d", group, row["t"])
        per_t[row["t"]] = row["drift"]
    counts = [{"airport": g[0], "detector": g[1], "bss": g[2],
               "drifts": sum(1 for v in per_t.values() if v)}
              for g, per_t in sorted(flags.items())]
    ab = [r for r in counts if r["airport"] != SB_KEY]
    ab_summary = []
    for detector in sorted({r["detector"] for r in ab}):
        for bss in sorted({r["bss"] for r in ab if r["detector"] == detector}):
            vals = [r["drifts"] for r in ab if r["detector"] == detector and r["bss"] == bss]
            ab_summary.append({
                "detector": detector, "bss": bss,
                "mean": statistics.mean(vals),
                "sd": statistics.stdev(vals) if len(vals) > 1 else 0.0,
            })
    return DriftCountReport(counts=counts, ab_summary=ab_summary)


@dataclass
class TopKReport:
    rank_metric: str
    combos: list[tuple[tuple, float]]  # ((strategy, detector, classifier, bss), score) ranked
    strategy_freq: dict[int, dict[str, float]] = field(default_factory=dict)
    bss_freq: dict[int, dict[int, float]] = field(default_factory=dict)
    classifier_freq: dict[int, dict[str, float]] = field(default_factory=dict)


def topk_frequency(results: list[dict], k_range, rank_metric: str = "f1") -> TopKReport:
    """Rank combinations (strategy, detector, classifier, bss) by the median
    rank_metric over all years/replicates/airports, then report how often
    each strategy (and bss / classifier) appears among the top k.

    Undefined metric values rank below any defined value; score ties break
    lexicographically on the combination key.
    """
    if rank_metric not in METRIC_COLUMNS:
        raise ValueError(f"rank_metric must be one of {METRIC_COLUMNS}")
    if not results:
        raise ValueError("no results to rank")
    values: dict[tuple, list[float]] = {}
    for row in results:
        if row["error"]:
            continue
        combo = (row["strategy"], row["detector"], row["classifier"], row["bss"])
        v = row[rank_metric]
        values.setdefault(combo, []).append(-math.inf if v is None else v)
    scored = [(combo, float(np.median(vals))) for combo, vals in values.items()]
    scored.sort(key=lambda cs: (-cs[1], tuple(str(x) for x in cs[0])))

    report = TopKReport(rank_metric=rank_metric, combos=scored)
    n = len(scored)
    for k in k_range:
        if k > n:
            log.warning("top-k capped: k=%d exceeds %d combinations", k, n)
            k = n
        top = [combo for combo, _ in scored[:k]]
        report.strategy_freq[k] = _freq([c[0] for c in top])
        report.bss_freq[k] = _freq([c[3] for c in top])
        report.classifier_freq[k] = _freq([c[2] for c in top])
    return report


def _freq(items) -> dict:
    out: dict = {}
    for item in items:
        out[item] = out.get(item, 0) + 1
    return {key: count / len(items) for key, count in sorted(out.items(), key=lambda kv: str(kv[0]))}


@dataclass
class CorrelationReport:
    columns: list[str]
    r: np.ndarray
    p: np.ndarray
    groups: list[tuple]
    notes: list[str] = field(default_factory=list)


def correlate_drifts_performance(results: list[dict]) -> CorrelationReport:
    """Pearson correlation matrix between per-group drift counts (one column
    per detector) and per-group median metrics, over groups (airport, bss)
    of active cells; baseline/passive have no drifts and are not considered.
    Constant columns are excluded with a note."""
    active = [r for r in results if r["strategy"] == STRATEGY_ACTIVE and not r["error"]]
    group_keys = sorted({(r["airport"], r["bss"]) for r in active})
    if len(group_keys) < 3:
        raise ValueError(f"correlation needs >= 3 (airport, bss) groups, got {len(group_keys)}")
    drift_counts = count_drifts(active).groups()
    detectors = sorted({r["detector"] for r in active})
    columns = [f"drifts_{d}" for d in detectors] + list(METRIC_COLUMNS)
    matrix = np.full((len(group_keys), len(columns)), np.nan)
    for gi, (airport, bss) in enumerate(group_keys):
        for di, d in enumerate(detectors):
            matrix[gi, di] = drift_counts.get((airport, d, bss), np.nan)
        rows = [r for r in active if r["airport"] == airport and r["bss"] == bss]
        for mi, metric in enumerate(METRIC_COLUMNS):
            defined = [r[metric] for r in rows if r[metric] is not None]
            if defined:
                matrix[gi, len(detectors) + mi] = float(np.median(defined))

    notes = []
    keep = []
    for ci, name in enumerate(columns):
        col = matrix[:, ci]
        finite = col[np.isfinite(col)]
        if finite.size < 3 or np.all(finite == finite[0]):
            notes.append(f"column {name} excluded (constant or insufficient data)")
        else:
            keep.append(ci)
    kept_names = [columns[ci] for ci in keep]
    m = len(keep)
    r = np.eye(m)
    p = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            xi = matrix[:, keep[i]]
            xj = matrix[:, keep[j]]
            ok = np.isfinite(xi) & np.isfinite(xj)
            try:
                res = stats.pearson_correlation(xi[ok], xj[ok])
                r[i, j] = r[j, i] = res.r
                p[i, j] = p[j, i] = res.p
            except (ValueError, stats.DegenerateSampleError) as exc:
                r[i, j] = r[j, i] = np.nan
                p[i, j] = p[j, i] = np.nan
                notes.append(f"pair ({kept_names[i]}, {kept_names[j]}): {exc}")
    return CorrelationReport(columns=kept_names, r=r, p=p, groups=group_keys, notes=notes)
