"""Seeded synthetic flight-like streams with ground-truth drift events.

Labels come from a logistic model over k uniform numeric features plus one
categorical feature. Two drift kinds are supported:

* ``prior_shift`` rescales the intercept (probe-calibrated) so the marginal
  delay rate moves by ``magnitude`` - a pure p(Y) change, the quantity the
  detectors watch;
* ``boundary_flip`` negates the largest-magnitude coefficient and re-centers
  the intercept to preserve the mean logit - the decision boundary moves
  substantially while the marginal rate moves only by the (second-order)
  Jensen residual, so the drift is largely invisible to p(Y)-only detectors.
  ``magnitude`` is ignored for flips.

Streams are deterministic given the spec seed and are emitted in the same
row format the ingest module produces (unnormalized features).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .ingest import FlightFeatureRow

log = logging.getLogger(__name__)

PRIOR_SHIFT = "prior_shift"
BOUNDARY_FLIP = "boundary_flip"
DRIFT_KINDS = (PRIOR_SHIFT, BOUNDARY_FLIP)

SYNTH_ORIGIN = "SYN0"
_CALIBRATION_PROBE = 100_000


@dataclass(frozen=True)
class DriftEvent:
    """at_year is 1-based within the stream when part of a spec; ground-truth
    events returned by generate_stream carry absolute years instead."""
    at_year: int
    kind: str
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    years: int
    weeks_per_year: int = 52
    flights_per_week: int = 200
    base_delay_rate: float = 0.2
    numeric_weights: tuple[float, ...] = (2.5, -2.0, 1.5)
    categorical_levels: tuple[str, ...] = ("S0", "S1", "S2", "S3")
    categorical_effects: tuple[float, ...] = (0.3, 0.1, -0.1, -0.3)
    drift_events: tuple[DriftEvent, ...] = ()
    seasonal_amplitude: float = 0.0
    seed: int = 0
    start_year: int = 2001

    def __post_init__(self):
        if self.years < 1 or self.weeks_per_year < 1 or self.flights_per_week < 1:
            raise ValueError("years, weeks_per_year and flights_per_week must be >= 1")
        if not 0.0 < self.base_delay_rate < 1.0:
            raise ValueError("base_delay_rate must lie in (0, 1)")
        if len(self.categorical_levels) != len(self.categorical_effects):
            raise ValueError("categorical levels/effects length mismatch")
        rate = self.base_delay_rate
        for ev in self.drift_events:
            if not 1 <= ev.at_year <= self.years:
                raise ValueError(f"drift year {ev.at_year} outside stream of {self.years} years")
            if ev.kind == PRIOR_SHIFT:
                rate += ev.magnitude
                if not 0.0 < rate < 1.0:
                    raise ValueError(
                        f"prior_shift at year {ev.at_year} pushes the delay rate to {rate:.3f}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(len(self.numeric_weights)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _calibrate_intercept(target: float, probe_logits: np.ndarray) -> float:
    """Intercept c with mean(sigmoid(c + probe_logits)) == target, by bisection."""
    lo, hi = -30.0, 30.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(_sigmoid(mid + probe_logits).mean()) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_stream(spec: SyntheticSpec) -> tuple[list[FlightFeatureRow], list[DriftEvent]]:
    """Generate the stream and the ground-truth events (absolute years)."""
    k = len(spec.numeric_weights)
    seeds = np.random.SeedSequence(spec.seed).spawn(2)
    calib_rng = np.random.default_rng(seeds[0])
    data_rng = np.random.default_rng(seeds[1])

    probe_x = calib_rng.uniform(size=(_CALIBRATION_PROBE, k))
    probe_cat = calib_rng.integers(0, len(spec.categorical_levels), size=_CALIBRATION_PROBE)
    effects = np.asarray(spec.categorical_effects)

    weights = np.asarray(spec.numeric_weights, dtype=float).copy()
    target_rate = spec.base_delay_rate
    intercept = _calibrate_intercept(target_rate, probe_x @ weights + effects[probe_cat])

    events_by_year: dict[int, list[DriftEvent]] = {}
    for ev in spec.drift_events:
        events_by_year.setdefault(ev.at_year, []).append(ev)

    realized: list[DriftEvent] = []
    rows: list[FlightFeatureRow] = []
    per_year = spec.weeks_per_year * spec.flights_per_week
    for offset in range(1, spec.years + 1):
        for ev in events_by_year.get(offset, ()):
            if ev.kind == PRIOR_SHIFT:
                target_rate += ev.magnitude
                intercept = _calibrate_intercept(
                    target_rate, probe_x @ weights + effects[probe_cat])
            else:
                flip = int(np.argmax(np.abs(weights)))
                # preserve the mean logit: E[x] = 1/2, so the intercept moves
                # by the flipped coefficient's original value
                intercept += weights[flip]
                weights[flip] = -weights[flip]
                log.info("boundary_flip at offset %d: negated coefficient %d", offset, flip)
            realized.append(DriftEvent(at_year=spec.start_year + offset - 1,
                                       kind=ev.kind, magnitude=ev.magnitude))
        year = spec.start_year + offset - 1
        x = data_rng.uniform(size=(per_year, k))
        cat = data_rng.integers(0, len(spec.categorical_levels), size=per_year)
        week = np.repeat(np.arange(1, spec.weeks_per_year + 1), spec.flights_per_week)
        seasonal = spec.seasonal_amplitude * np.sin(
            2.0 * math.pi * (week - 1) / spec.weeks_per_year)
        logit = intercept + x @ weights + effects[cat] + seasonal
        delayed = (data_rng.uniform(size=per_year) < _sigmoid(logit)).astype(int)
        for i in range(per_year):
            rows.append(FlightFeatureRow(
                origin_airport=SYNTH_ORIGIN,
                destination_state=spec.categorical_levels[cat[i]],
                week_of_year=int(week[i]),
                year=year,
                numeric_features=x[i],
                delayed=int(delayed[i]),
            ))
    return rows, realized


# ---------------------------------------------------------------------------
# Spec file IO (JSON)
# ---------------------------------------------------------------------------

def spec_to_dict(spec: SyntheticSpec) -> dict:
    doc = asdict(spec)
    doc["drift_events"] = [asdict(ev) for ev in spec.drift_events]
    return doc


def spec_from_dict(doc: dict) -> SyntheticSpec:
    events = tuple(DriftEvent(**ev) for ev in doc.get("drift_events", ()))
    kwargs = {k: v for k, v in doc.items() if k != "drift_events"}
    for key in ("numeric_weights", "categorical_levels", "categorical_effects"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return SyntheticSpec(drift_events=events, **kwargs)


def load_spec(path: str | Path) -> SyntheticSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_spec(spec: SyntheticSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2), encoding="utf-8")
