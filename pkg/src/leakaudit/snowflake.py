"""Snowflake id arithmetic: timestamp decoding, digit prefixes, histograms.

Twitter ids minted since late 2010 pack a millisecond timestamp into the
high bits:

    id = ((unix_ms - 1288834974657) << 22) | (worker_id << 12) | sequence

so the creation time is recoverable as ``(id >> 22) + 1288834974657``. Two
consequences drive everything else in this package: ids sort by creation
time, and the leading decimal digits of an id are a coarse clock. Ids from
the sequential era (before the scheme) have a zero timestamp field and are
rejected rather than decoded to nonsense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IdParseError, PreSnowflakeIdError, TooShortIdError

TWITTER_EPOCH_MS = 1288834974657
# 2100-01-01T00:00:00Z; decodes past this are garbage ids, not timestamps.
MAX_PLAUSIBLE_MS = 4102444800000
MAX_ID = 2**63 - 1


@dataclass(frozen=True)
class SnowflakeConstants:
    """Bit layout of the id scheme. The defaults are Twitter's."""

    epoch_ms: int = TWITTER_EPOCH_MS
    worker_bits: int = 10
    sequence_bits: int = 12
    max_plausible_ms: int = MAX_PLAUSIBLE_MS

    @property
    def timestamp_shift(self) -> int:
        return self.worker_bits + self.sequence_bits


DEFAULT_CONSTANTS = SnowflakeConstants()


def parse_id(id_str: str) -> int:
    """Parse a canonical decimal id string.

    Accepts exactly the strings that render back identically: digits only,
    no leading zeros, value in [1, 2**63 - 1].

    Raises:
        IdParseError: for anything else.
    """
    if not isinstance(id_str, str) or not id_str.isdigit():
        raise IdParseError(f"id is not a decimal string: {id_str!r}")
    value = int(id_str)
    if not 1 <= value <= MAX_ID:
        raise IdParseError(f"id outside [1, 2**63 - 1]: {id_str!r}")
    if id_str[0] == "0":
        raise IdParseError(f"id has a leading zero: {id_str!r}")
    return value


def decode_timestamp(id_str: str, constants: SnowflakeConstants = DEFAULT_CONSTANTS) -> int:
    """Decode the creation time of a snowflake id, in unix milliseconds.

    Raises:
        IdParseError: if the id is not a canonical decimal string.
        PreSnowflakeIdError: if the timestamp field is zero (sequential-era
            id) or the decode falls after ``max_plausible_ms``.
    """
    value = parse_id(id_str)
    offset = value >> constants.timestamp_shift
    if offset == 0:
        raise PreSnowflakeIdError(
            f"id {id_str} has a zero timestamp field (pre-snowflake id)"
        )
    ts = offset + constants.epoch_ms
    if ts > constants.max_plausible_ms:
        raise PreSnowflakeIdError(
            f"id {id_str} decodes past the plausible window ({ts} ms)"
        )
    return ts


def try_decode_timestamp(
    id_str: str, constants: SnowflakeConstants = DEFAULT_CONSTANTS
) -> int | None:
    """decode_timestamp, but None instead of PreSnowflakeIdError."""
    try:
        return decode_timestamp(id_str, constants)
    except PreSnowflakeIdError:
        return None


def decode_parts(
    id_str: str, constants: SnowflakeConstants = DEFAULT_CONSTANTS
) -> tuple[int, int, int]:
    """Split an id into (timestamp_ms, worker_id, sequence) for debugging."""
    ts = decode_timestamp(id_str, constants)
    value = int(id_str)
    worker = (value >> constants.sequence_bits) & ((1 << constants.worker_bits) - 1)
    sequence = value & ((1 << constants.sequence_bits) - 1)
    return ts, worker, sequence


@dataclass(frozen=True)
class DigitPrefix:
    """The first k decimal digits of an id, most significant first."""

    digits: tuple[int, ...]

    def __post_init__(self):
        if len(self.digits) < 1:
            raise ValueError("empty digit prefix")
        if self.digits[0] == 0:
            raise ValueError("prefix starts with zero; ids have no leading zeros")

    @property
    def k(self) -> int:
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)


def prefix_digits(id_str: str, k: int) -> DigitPrefix:
    """First k digits of the id's canonical decimal rendering.

    Raises:
        IdParseError: if the id is not canonical.
        TooShortIdError: if the id has fewer than k digits.
        ValueError: if k < 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    parse_id(id_str)
    if len(id_str) < k:
        raise TooShortIdError(f"id {id_str} has {len(id_str)} digits, need {k}")
    return DigitPrefix(tuple(int(c) for c in id_str[:k]))


@dataclass(frozen=True)
class TimestampHistogram:
    """Per-label counts of records falling in fixed-width time buckets.

    Bucket keys are unix-epoch-aligned start times: bucket(ts) is
    ``(ts // bucket_ms) * bucket_ms``. Records whose ids decode to no
    timestamp are tallied in excluded_count, not in any bucket.
    """

    bucket_ms: int
    counts: dict[tuple[str, int], int] = field(default_factory=dict)
    excluded_count: int = 0

    def labels(self) -> list[str]:
        return sorted({label for label, _ in self.counts})

    def label_marginal(self, label: str) -> dict[int, int]:
        return {b: c for (lab, b), c in self.counts.items() if lab == label}

    def rows(self) -> list[tuple[str, int, int]]:
        """(label, bucket_start_ms, count) rows, sorted for stable output."""
        return sorted((lab, b, c) for (lab, b), c in self.counts.items())


def timestamp_histogram(dataset, bucket_ms: int) -> TimestampHistogram:
    """Histogram a dataset's decodable creation times, per label.

    Raises:
        ValueError: if bucket_ms < 1.
    """
    if bucket_ms < 1:
        raise ValueError(f"bucket_ms must be >= 1, got {bucket_ms}")
    counts: dict[tuple[str, int], int] = {}
    excluded = 0
    for record in dataset.records:
        ts = record.timestamp_ms
        if ts is None:
            ts = try_decode_timestamp(record.id)
        if ts is None:
            excluded += 1
            continue
        key = (record.label, (ts // bucket_ms) * bucket_ms)
        counts[key] = counts.get(key, 0) + 1
    return TimestampHistogram(bucket_ms=bucket_ms, counts=counts, excluded_count=excluded)


def ids_to_timestamp_array(ids) -> np.ndarray:
    """Vectorized decode for monotonicity checks; NaN where undecodable."""
    out = np.full(len(ids), np.nan, dtype=np.float64)
    for i, id_str in enumerate(ids):
        ts = try_decode_timestamp(id_str)
        if ts is not None:
            out[i] = float(ts)
    return out
