"""Decode creation times straight out of tweet ids.

Snowflake ids pack a millisecond clock into their high bits, so a bare
id column silently carries the posting time. This walk-through decodes
a few ids by hand and then summarizes a whole column at once.
"""

from datetime import datetime, timezone

import numpy as np

from leakaudit import (
    TWITTER_EPOCH_MS,
    build_dataset,
    decode_timestamp,
    timestamp_histogram,
    try_decode_timestamp,
)


def iso(ms):
    return datetime.fromtimestamp(ms / 1000, tz=timezone.utc).isoformat()


# one real-shaped id: the high 41 bits are milliseconds since the
# service epoch, the low 22 bits are worker/sequence noise
tweet_id = "553588178687655936"
ms = decode_timestamp(tweet_id)
print(f"id {tweet_id}")
print(f"  epoch offset : {ms - TWITTER_EPOCH_MS} ms")
print(f"  posted at    : {iso(ms)}")

# the low bits never move the clock
low_variant = str((int(tweet_id) & ~((1 << 22) - 1)) | 0x3FFFFF)
print(f"  low-bit variant decodes to the same ms: {decode_timestamp(low_variant) == ms}")

# ids from before the snowflake rollout have no clock in them;
# try_decode_timestamp returns None instead of raising
for bad in ("20", "12345"):
    print(f"id {bad!r} decodes to: {try_decode_timestamp(bad)}")

# a synthetic dataset whose ids are drawn from one afternoon
rng = np.random.default_rng(0)
start = 1_420_200_000_000
rows = []
for i, (delta, seq) in enumerate(zip(rng.integers(0, 3_600_000, 500),
                                     rng.integers(0, 4096, 500))):
    rid = ((start - TWITTER_EPOCH_MS + int(delta)) << 22) | int(seq)
    rows.append({"id": str(rid), "text": f"post {i}", "label": "all"})
dataset = build_dataset(rows, labels=("all",), name="afternoon")

hist = timestamp_histogram(dataset, bucket_ms=600_000)
print(f"\n{len(rows)} ids in 10-minute buckets:")
for label, bucket, count in hist.rows():
    print(f"  {iso(bucket)}  {'#' * (count // 10)} {count}")
print(f"excluded (no clock): {hist.excluded_count}")
