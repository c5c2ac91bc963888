"""Measure how much label signal hides in bare tweet ids.

The probe trains a small random forest on nothing but the first k
digits of each id. On a clean dataset that model can only hit the
class-prior baseline; anything above it means the ids themselves
predict the label, usually because each class was collected in its
own time window.

This script builds two synthetic datasets with identical texts and
label counts. In the first, each label sits in its own week; in the
second, labels are shuffled across time. Only the first one leaks.
"""

import numpy as np

from leakaudit import SplitSpec, build_dataset, make_split, run_id_leak_test

TWITTER_EPOCH_MS = 1_288_834_974_657
WEEK_MS = 7 * 24 * 3_600_000

rng = np.random.default_rng(7)
labels = ("true", "false", "unverified", "non-rumor")


def snowflake(ts_ms, seq):
    return str(((ts_ms - TWITTER_EPOCH_MS) << 22) | (seq & 0xFFF))


def rows_with_windows(label_of_row):
    # label i posts inside week i: the id prefix becomes a label code
    base = 1_420_070_400_000
    rows = []
    for i in range(1200):
        label = label_of_row(i)
        week = labels.index(label)
        ts = base + week * WEEK_MS + int(rng.integers(0, WEEK_MS))
        rows.append({
            "id": snowflake(ts, i),
            "text": f"report {i} about topic {i % 23}",
            "label": label,
        })
    return rows


leaky = build_dataset(rows_with_windows(lambda i: labels[i % 4]),
                      labels=labels, name="one-week-per-label")

# same time windows, but labels assigned independently of the window
shuffled = list(labels) * 300
rng.shuffle(shuffled)
clean_rows = rows_with_windows(lambda i: labels[i % 4])
for row, label in zip(clean_rows, shuffled):
    row["label"] = label
clean = build_dataset(clean_rows, labels=labels, name="windows-shuffled")

spec = SplitSpec(ratios=(0.7, 0.1, 0.2), seed=0, stratify=True)
for dataset in (leaky, clean):
    report = run_id_leak_test(dataset, make_split(dataset, spec), k=3)
    print(f"{dataset.name}:")
    print(f"  macro-F1 from 3 id digits : {report.macro_f1:.3f}")
    print(f"  chance baseline           : {report.baseline_macro_f1:.3f}")
    print(f"  leakage score             : {report.leakage_score:.3f}")
    print(f"  verdict                   : {report.verdict}")
    print()
