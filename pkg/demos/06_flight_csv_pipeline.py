"""The raw-CSV ingest path: load, filter, label, normalize."""

import tempfile
from pathlib import Path

from driftlab.ingest import (PreprocessConfig, apply_normalizer, fit_normalizer,
                             load_flights, preprocess)

# A tiny raw file in the expected layout: fixed columns plus wx_* weather.
csv_text = """flight_id,origin,destination,scheduled_departure,actual_departure,kind,wx_temp,wx_wind
F001,SBGR,SBBR,2003-03-10T08:00,2003-03-10T08:40,domestic,21.5,3.0
F002,SBGR,SBSV,2003-03-10T09:00,2003-03-10T09:05,domestic,22.0,4.5
F003,SBBR,SBGR,2003-03-11T07:30,,domestic,18.0,2.0
F004,SBGR,SBBR,2003-03-12T10:00,2003-03-13T12:00,domestic,20.0,
F005,SBGR,KJFK,2003-03-12T22:00,2003-03-12T22:30,international,19.5,5.0
F006,SBCF,SBRJ,2003-12-29T06:00,2003-12-29T06:20,domestic,24.0,1.0
BADLINE,SBGR,SBBR,not-a-date,2003-03-10T08:00,domestic,20.0,2.0
"""
raw = Path(tempfile.mkdtemp(prefix="driftlab_demo_")) / "flights.csv"
raw.write_text(csv_text)

loaded = load_flights(raw)
print(f"{len(loaded.records)} records, {loaded.malformed_count} malformed:")
for lineno, reason in loaded.malformed:
    print(f"  line {lineno}: {reason}")

# Filtering and labeling: domestic + top airports, delay >= 15 min -> 1,
# missing/26h departures excluded, destination mapped to its state,
# ISO (year, week) attached.
result = preprocess(loaded.records, PreprocessConfig())
print(f"\nkept {len(result.rows)} rows; excluded: {dict(result.excluded)}")
print("feature vector:", result.feature_names)
for row in result.rows:
    print(f"  {row.origin_airport}->{row.destination_state} year {row.year} "
          f"week {row.week_of_year:2d} delayed {row.delayed} features {row.numeric_features}")

# Min-max normalization is fitted on a training window only and applied with
# clamping (and mean imputation for the missing wx_wind above).
norm = fit_normalizer(result.rows)
scaled = apply_normalizer(norm, result.rows)
print("\nnormalized features (all in [0, 1]):")
for row in scaled:
    print(f"  {row.numeric_features.round(3)}")
