"""Yearly batches and sliding batch-sequence windows over a row stream."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import chain

log = logging.getLogger(__name__)


class WindowUnderflowError(ValueError):
    """Requested a batch sequence extending before the start of the stream."""


@dataclass(frozen=True)
class Batch:
    """All rows of one time slice (one year)."""
    index: int
    year: int
    rows: tuple = field(repr=False)

    @property
    def is_empty(self) -> bool:
        return len(self.rows) == 0

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class BatchSequence:
    """b consecutive batches ending at end_index (a training window)."""
    end_index: int
    size: int
    batches: tuple

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("batch sequence size must be >= 1")
        if len(self.batches) != self.size:
            raise ValueError("batch sequence length does not match size")
        years = [b.year for b in self.batches]
        if years != list(range(years[0], years[0] + len(years))):
            raise ValueError(f"batches are not consecutive years: {years}")

    @property
    def end_year(self) -> int:
        return self.batches[-1].year

    @property
    def rows(self) -> list:
        return list(chain.from_iterable(b.rows for b in self.batches))

    @property
    def row_count(self) -> int:
        return sum(len(b) for b in self.batches)


def partition_by_year(rows, year_range: tuple[int, int]) -> list[Batch]:
    """One batch per year in [first, last], ascending; empty years are kept
    (and logged) so downstream indices stay aligned."""
    first, last = year_range
    if last < first:
        raise ValueError(f"empty year range {year_range}")
    buckets: dict[int, list] = {year: [] for year in range(first, last + 1)}
    for row in rows:
        if first <= row.year <= last:
            buckets[row.year].append(row)
    batches = [Batch(index=i, year=year, rows=tuple(buckets[year]))
               for i, year in enumerate(range(first, last + 1))]
    empty = [b.year for b in batches if b.is_empty]
    if empty:
        log.warning("partition_by_year: empty batches for years %s", empty)
    return batches


def batch_sequence(stream: list[Batch], end_year: int, b: int) -> BatchSequence:
    """The window of b consecutive batches ending at the batch for end_year."""
    years = [batch.year for batch in stream]
    try:
        pos = years.index(end_year)
    except ValueError:
        raise WindowUnderflowError(f"year {end_year} not in stream {years[0]}..{years[-1]}")
    if pos - b + 1 < 0:
        raise WindowUnderflowError(
            f"window underflow: need {b} batches ending at {end_year}, "
            f"stream starts at {years[0]}")
    return BatchSequence(end_index=pos, size=b, batches=tuple(stream[pos - b + 1:pos + 1]))


def sliding_window(stream: list[Batch], b: int) -> list[BatchSequence]:
    """All batch sequences of size b, in order: n - b + 1 windows."""
    n = len(stream)
    if n < b:
        raise WindowUnderflowError(f"stream of {n} batches cannot hold windows of size {b}")
    return [batch_sequence(stream, stream[j + b - 1].year, b) for j in range(n - b + 1)]
