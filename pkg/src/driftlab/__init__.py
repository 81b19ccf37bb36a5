"""driftlab: batch-streaming concept drift experiments.

Yearly batches over labeled event streams, statistical drift detectors on
weekly delay-proportion distributions, baseline/passive/active retraining
strategies around embedded classifiers, and a resumable experiment grid
with top-k / drift-count / correlation analyses.
"""

__version__ = "0.1.0"

from . import drift, ingest, learn, runner, special, stats, strategy, synth, windowing  # noqa: F401
