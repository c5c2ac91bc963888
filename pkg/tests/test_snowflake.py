"""Id decoding, digit prefixes, and timestamp histograms."""

from datetime import datetime, timezone

import numpy as np
import pytest

from leakaudit import (
    TWITTER_EPOCH_MS,
    DigitPrefix,
    SnowflakeConstants,
    build_dataset,
    decode_parts,
    decode_timestamp,
    parse_id,
    prefix_digits,
    timestamp_histogram,
    try_decode_timestamp,
)
from leakaudit.errors import IdParseError, PreSnowflakeIdError, TooShortIdError

from _synth import snowflake_id


def test_decode_smallest_snowflake_id():
    # timestamp field 1 -> exactly one ms past the epoch
    assert decode_timestamp(str(1 << 22)) == 1288834974658


def test_decode_known_2015_id():
    # oracle: this id is from early January 2015 (checked against the
    # calendar via an independent datetime conversion)
    ts = decode_timestamp("553588178687655936")
    dt = datetime.fromtimestamp(ts / 1000, tz=timezone.utc)
    assert (dt.year, dt.month) == (2015, 1)
    assert ts == 1420820681627


def test_pre_snowflake_ids_rejected():
    with pytest.raises(PreSnowflakeIdError):
        decode_timestamp("20")
    with pytest.raises(PreSnowflakeIdError):
        decode_timestamp(str((1 << 22) - 1))
    assert try_decode_timestamp("20") is None


def test_out_of_window_decode_rejected():
    # narrow layout makes a big id decode past year 2100
    tight = SnowflakeConstants(worker_bits=2, sequence_bits=2)
    with pytest.raises(PreSnowflakeIdError):
        decode_timestamp(str(2**63 - 1), tight)


@pytest.mark.parametrize("bad", ["", "abc", "12.3", "0", "007", "-5", str(2**63)])
def test_parse_id_rejects_non_canonical(bad):
    with pytest.raises(IdParseError):
        parse_id(bad)
    with pytest.raises(IdParseError):
        decode_timestamp(bad)


def test_parse_id_accepts_bounds():
    assert parse_id("1") == 1
    assert parse_id(str(2**63 - 1)) == 2**63 - 1


def test_decode_parts_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(200):
        offset = int(rng.integers(1, 2**41))
        worker = int(rng.integers(0, 1 << 10))
        seq = int(rng.integers(0, 1 << 12))
        sid = str((offset << 22) | (worker << 12) | seq)
        ts, got_worker, got_seq = decode_parts(sid)
        assert ts == offset + TWITTER_EPOCH_MS
        assert got_worker == worker
        assert got_seq == seq


def test_decode_monotone_in_id():
    rng = np.random.default_rng(4)
    ids = sorted(int(rng.integers(1 << 22, 2**63)) for _ in range(1000))
    times = [decode_timestamp(str(i)) for i in ids]
    assert times == sorted(times)


def test_low_22_bits_never_change_the_timestamp():
    rng = np.random.default_rng(5)
    for _ in range(200):
        base = int(rng.integers(1, 2**40)) << 22
        ts = decode_timestamp(str(base))
        for _ in range(5):
            jitter = int(rng.integers(0, 1 << 22))
            assert decode_timestamp(str(base | jitter)) == ts


def test_prefix_digits():
    assert prefix_digits("98765", 3).digits == (9, 8, 7)
    assert prefix_digits("98765", 1).digits == (9,)
    assert prefix_digits("98765", 5).digits == (9, 8, 7, 6, 5)


def test_prefix_digits_errors():
    with pytest.raises(TooShortIdError):
        prefix_digits("98765", 6)
    with pytest.raises(ValueError):
        prefix_digits("98765", 0)
    with pytest.raises(IdParseError):
        prefix_digits("0123", 2)


def test_prefix_digits_matches_string_slice():
    rng = np.random.default_rng(6)
    for _ in range(500):
        value = int(rng.integers(1, 2**63))
        sid = str(value)
        k = int(rng.integers(1, len(sid) + 1))
        assert prefix_digits(sid, k).digits == tuple(int(c) for c in sid[:k])


def test_digit_prefix_rejects_leading_zero():
    with pytest.raises(ValueError):
        DigitPrefix((0, 1))
    with pytest.raises(ValueError):
        DigitPrefix(())


def test_timestamp_histogram_buckets_and_exclusions():
    rng = np.random.default_rng(8)
    seen = set()
    day = 86_400_000
    base_a = 1_420_070_400_000
    base_b = 1_427_846_400_000
    rows = []
    for i in range(40):
        rows.append(
            {"id": snowflake_id(base_a + i * day // 8, rng, seen), "text": "x", "label": "a"}
        )
        rows.append(
            {"id": snowflake_id(base_b + i * day // 8, rng, seen), "text": "x", "label": "b"}
        )
    rows.append({"id": "99", "text": "pre-snowflake", "label": "a"})
    ds = build_dataset(rows, labels=["a", "b"])

    hist = timestamp_histogram(ds, bucket_ms=day)
    assert hist.excluded_count == 1
    assert sum(hist.counts.values()) == 80
    buckets_a = set(hist.label_marginal("a"))
    buckets_b = set(hist.label_marginal("b"))
    assert buckets_a and buckets_b
    assert not buckets_a & buckets_b  # eras are disjoint
    for (_, bucket), _count in hist.counts.items():
        assert bucket % day == 0

    with pytest.raises(ValueError):
        timestamp_histogram(ds, bucket_ms=0)


def test_timestamp_histogram_rows_sorted():
    rng = np.random.default_rng(9)
    seen = set()
    rows = [
        {"id": snowflake_id(1_420_070_400_000 + i * 10_000_000, rng, seen), "text": "t", "label": "a"}
        for i in range(20)
    ]
    ds = build_dataset(rows, labels=["a"])
    out = timestamp_histogram(ds, bucket_ms=3_600_000).rows()
    assert out == sorted(out)
