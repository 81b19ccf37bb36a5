"""Per-step execution of a drift handling strategy over a batch stream:
decide retraining, fit or reuse the stored model, predict the next batch,
and record confusion counts and metrics.

Training-count bookkeeping is exact by construction: the first evaluable
step always trains (there is no stored model to reuse, so no detection is
run), after which baseline never trains again, passive trains every step,
and active trains exactly when its detector flags drift.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import learn
from .drift import DEFAULT_MIN_WEEK_FLIGHTS, DriftDecision, STRATEGIES, decide_drift
from .learn import ConfusionCounts, Metrics, ModelSpec, TrainedModel
from .windowing import Batch, WindowUnderflowError, batch_sequence

log = logging.getLogger(__name__)


@dataclass
class StrategyState:
    key: tuple
    current_model: TrainedModel | None = None
    trainings_done: int = 0
    drift_log: list[DriftDecision | None] = field(default_factory=list)


@dataclass(frozen=True)
class StepResult:
    t: int
    trained: bool
    drift: DriftDecision | None
    confusion: ConfusionCounts
    metrics: Metrics
    replicate: int


@dataclass
class StreamRun:
    steps: list[StepResult]
    state: StrategyState
    skipped_years: list[int] = field(default_factory=list)


def methodology_step(state: StrategyState, stream: list[Batch], t: int, b: int,
                     dd: str, dh: str, spec: ModelSpec,
                     alpha: float = 0.05,
                     min_week_flights: int = DEFAULT_MIN_WEEK_FLIGHTS,
                     replicate: int = 0,
                     store: "ModelStore | None" = None,
                     store_airport: str | None = None) -> StepResult | None:
    """One time step: window ending at t trains/loads a model that predicts
    the batch at t+1. Returns None (with a log line) when the step cannot be
    evaluated: empty test batch, or a training required on an all-empty
    window."""
    d_i = batch_sequence(stream, t, b)
    try:
        d_j = batch_sequence(stream, t - 1, b)
    except WindowUnderflowError:
        d_j = None
    test_batch = batch_sequence(stream, t + 1, 1).batches[0]
    if test_batch.is_empty:
        log.warning("step t=%d skipped: test batch %d is empty", t, t + 1)
        return None

    if state.current_model is None:
        # nothing to reuse: forced training, no detection to run
        train_flag, decision = True, None
    else:
        train_flag, decision = decide_drift(dd, dh, d_i, d_j, alpha=alpha,
                                            min_week_flights=min_week_flights)
    state.drift_log.append(decision)

    if train_flag:
        if d_i.row_count == 0:
            log.warning("step t=%d skipped: refusing to train on an all-empty window", t)
            return None
        model = learn.train(spec, d_i.rows, training_window=(t, b))
        state.current_model = model
        state.trainings_done += 1
        if store is not None:
            store.save(model, airport=store_airport, kind=spec.kind, dd=dd, dh=dh,
                       b=b, replicate=replicate, t=t)
    else:
        model = state.current_model

    preds = learn.predict(model, test_batch.rows)
    truth = [row.delayed for row in test_batch.rows]
    confusion = learn.confusion_from_predictions(truth, preds)
    metrics = learn.compute_metrics(confusion)
    return StepResult(t=t, trained=train_flag, drift=decision,
                      confusion=confusion, metrics=metrics, replicate=replicate)


def run_stream(stream: list[Batch], b: int, dd: str, dh: str, spec: ModelSpec,
               year_range: tuple[int, int] | None = None,
               alpha: float = 0.05,
               min_week_flights: int = DEFAULT_MIN_WEEK_FLIGHTS,
               replicate: int = 0,
               store: "ModelStore | None" = None,
               store_airport: str | None = None) -> StreamRun:
    """Run one strategy over every evaluable step of the stream.

    A step t is evaluable when the b-window ending at t exists and batch t+1
    exists; year_range (inclusive, on t) restricts the sweep. Bookkeeping:
    baseline trains once, passive trains once per step, active trains
    1 + (steps with drift flagged).
    """
    if dh not in STRATEGIES:
        raise ValueError(f"unknown strategy {dh!r}")
    years = [batch.year for batch in stream]
    if len(years) < b + 1:
        raise WindowUnderflowError(f"stream of {len(years)} batches has no evaluable step for b={b}")
    candidate_ts = years[b - 1:-1]
    if year_range is not None:
        lo, hi = year_range
        candidate_ts = [t for t in candidate_ts if lo <= t <= hi]
    state = StrategyState(key=(store_airport, spec.kind, dd, dh, b))
    run = StreamRun(steps=[], state=state)
    for t in candidate_ts:
        step = methodology_step(state, stream, t, b, dd, dh, spec, alpha=alpha,
                                min_week_flights=min_week_flights, replicate=replicate,
                                store=store, store_airport=store_airport)
        if step is None:
            run.skipped_years.append(t)
            continue
        run.steps.append(step)
    return run


class ModelStore:
    """Directory of serialized models keyed by
    (airport|SB, kind, dd, dh, b, replicate); each key directory keeps one
    file per training step plus a manifest recording the latest model."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _key_name(airport: str | None, kind: str, dd: str, dh: str,
                  b: int, replicate: int) -> str:
        return f"{airport or 'SB'}__{kind}__{dd}__{dh}__b{b}__r{replicate}"

    def save(self, model: TrainedModel, airport: str | None, kind: str, dd: str,
             dh: str, b: int, replicate: int, t: int) -> Path:
        key_dir = self.root / self._key_name(airport, kind, dd, dh, b, replicate)
        key_dir.mkdir(parents=True, exist_ok=True)
        filename = f"model_t{t}.json"
        learn.save_model(model, key_dir / filename)
        manifest_path = key_dir / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        else:
            manifest = {"key": {"airport": airport or "SB", "kind": kind, "dd": dd,
                                "dh": dh, "b": b, "replicate": replicate},
                        "history": []}
        if filename not in manifest["history"]:
            manifest["history"].append(filename)
        manifest["latest"] = filename
        manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        return key_dir / filename

    def load_latest(self, airport: str | None, kind: str, dd: str, dh: str,
                    b: int, replicate: int) -> TrainedModel:
        key_dir = self.root / self._key_name(airport, kind, dd, dh, b, replicate)
        manifest_path = key_dir / "manifest.json"
        if not manifest_path.exists():
            raise FileNotFoundError(f"no stored model under {key_dir}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        return learn.load_model(key_dir / manifest["latest"])
