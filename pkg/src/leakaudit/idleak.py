"""The ID-digit leak probe.

Trains a forest to predict a record's label from nothing but the first k
decimal digits of its id. Ids encode mint time in their high bits, so any
accuracy above the stratified-random baseline means the label is readable
off the clock: classes were collected in different time windows and a
model can exploit that instead of content.

The probe's score is normalized headroom above chance,
``(macro - baseline) / (1 - baseline)``, clamped at 0, so 0.0 reads as
"no temporal signal" and 1.0 as "labels fully recoverable from id alone".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import AllIdsTooShortError, EmptySplitError
from .forest import ForestConfig, baseline_expected_macro_f1, fit_forest
from .metrics import ConfusionMatrix, result_from_matrix
from .splits import Split, SplitSpec, random_split


@dataclass(frozen=True)
class VerdictThresholds:
    """Score cutpoints for the human-readable verdict."""

    none_below: float = 0.05
    mild_below: float = 0.15
    moderate_below: float = 0.40

    def verdict(self, leakage_score: float) -> str:
        if leakage_score < self.none_below:
            return "none"
        if leakage_score < self.mild_below:
            return "mild"
        if leakage_score < self.moderate_below:
            return "moderate"
        return "severe"


DEFAULT_THRESHOLDS = VerdictThresholds()


@dataclass(frozen=True)
class IdLeakReport:
    """Outcome of one probe run (one split, one prefix length)."""

    k: int
    per_class_f1: dict[str, float]
    macro_f1: float
    baseline_macro_f1: float
    leakage_score: float
    verdict: str
    n_train: int
    n_test: int
    excluded_short_ids: int
    split_name: str = ""
    config: ForestConfig = field(default_factory=ForestConfig)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "per_class_f1": dict(self.per_class_f1),
            "macro_f1": self.macro_f1,
            "baseline_macro_f1": self.baseline_macro_f1,
            "leakage_score": self.leakage_score,
            "verdict": self.verdict,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "excluded_short_ids": self.excluded_short_ids,
            "split_name": self.split_name,
            "config": self.config.to_json_dict(),
        }


def digit_features(ids, k: int):
    """Ordinal feature rows (one int per digit position) for each id long
    enough; returns (rows, labels_kept_mask) style pair of X and kept
    index list. Ids shorter than k digits are excluded."""
    rows = []
    kept = []
    for i, id_str in enumerate(ids):
        if len(id_str) < k:
            continue
        rows.append([int(c) for c in id_str[:k]])
        kept.append(i)
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), k), kept


def leakage_score(macro_f1: float, baseline_macro_f1: float) -> float:
    """Normalized headroom above the chance baseline, clamped to [0, 1]."""
    if baseline_macro_f1 >= 1.0:
        return 0.0
    return max(0.0, (macro_f1 - baseline_macro_f1) / (1.0 - baseline_macro_f1))


def run_id_leak_test(
    dataset: Dataset,
    split: Split,
    k: int,
    config: ForestConfig | None = None,
    thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
) -> IdLeakReport:
    """Run the probe on one split at one prefix length.

    Trains on the split's train partition, scores on its test partition;
    the dev partition plays no part. The baseline is computed from the
    same post-exclusion label counts the forest saw.

    Raises:
        EmptySplitError: if train or test has no records.
        AllIdsTooShortError: if a partition loses every id to the k-digit
            requirement.
    """
    config = config or ForestConfig()
    by_id = dataset.by_id()
    train_recs = [by_id[i] for i in split.train_ids if i in by_id]
    test_recs = [by_id[i] for i in split.test_ids if i in by_id]
    if not train_recs or not test_recs:
        raise EmptySplitError(
            f"need non-empty train and test (got {len(train_recs)}/{len(test_recs)})"
        )

    X_train, kept_train = digit_features([r.id for r in train_recs], k)
    X_test, kept_test = digit_features([r.id for r in test_recs], k)
    excluded = (len(train_recs) - len(kept_train)) + (len(test_recs) - len(kept_test))
    if len(kept_train) == 0 or len(kept_test) == 0:
        raise AllIdsTooShortError(f"every id in a partition is shorter than {k} digits")

    y_train = [train_recs[i].label for i in kept_train]
    y_test = [test_recs[i].label for i in kept_test]

    model = fit_forest(X_train, y_train, config, dataset.label_set)
    preds = model.predict(X_test)

    matrix = ConfusionMatrix.from_pairs(y_test, preds, dataset.label_set)
    result = result_from_matrix(matrix)

    train_counts: dict[str, int] = {}
    for lab in y_train:
        train_counts[lab] = train_counts.get(lab, 0) + 1
    test_counts: dict[str, int] = {}
    for lab in y_test:
        test_counts[lab] = test_counts.get(lab, 0) + 1
    baseline = baseline_expected_macro_f1(train_counts, test_counts)

    score = leakage_score(result.macro_f1, baseline)
    return IdLeakReport(
        k=k,
        per_class_f1=result.per_class_f1(),
        macro_f1=result.macro_f1,
        baseline_macro_f1=baseline,
        leakage_score=score,
        verdict=thresholds.verdict(score),
        n_train=len(kept_train),
        n_test=len(kept_test),
        excluded_short_ids=excluded,
        split_name=split.name(),
        config=config,
    )


def _derived_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed % 2**64, index]).generate_state(1, np.uint64)[0])


def run_id_leak_suite(
    dataset: Dataset,
    k_values=(2, 3),
    split: Split | None = None,
    n_splits: int = 5,
    ratios=(0.7, 0.1, 0.2),
    seed: int = 0,
    config: ForestConfig | None = None,
    thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
) -> list[IdLeakReport]:
    """Probe at several prefix lengths.

    With a canonical split given, one report per k on that split. Without
    one, generates n_splits fresh stratified splits (seeded substreams of
    ``seed``) and reports every (split, k) pair, so downstream summaries
    can quote mean and spread instead of one arbitrary partition's luck.
    """
    reports: list[IdLeakReport] = []
    if split is not None:
        for k in k_values:
            reports.append(run_id_leak_test(dataset, split, k, config, thresholds))
        return reports
    for i in range(n_splits):
        spec = SplitSpec(
            ratios=tuple(ratios),
            seed=_derived_seed(seed, i),
            stratify=True,
            name=f"probe-split-{i}",
        )
        generated = random_split(dataset, spec)
        for k in k_values:
            reports.append(run_id_leak_test(dataset, generated, k, config, thresholds))
    return reports


def summarize_id_leak_suite(
    reports, thresholds: VerdictThresholds = DEFAULT_THRESHOLDS
) -> dict[int, dict]:
    """Per-k mean/std of macro-F1 and leak score across a suite's runs.

    Std is the sample standard deviation (ddof=1), 0.0 for a single run.
    The summary verdict grades the mean leak score.
    """
    by_k: dict[int, list[IdLeakReport]] = {}
    for report in reports:
        by_k.setdefault(report.k, []).append(report)
    out: dict[int, dict] = {}
    for k in sorted(by_k):
        macros = np.array([r.macro_f1 for r in by_k[k]])
        scores = np.array([r.leakage_score for r in by_k[k]])
        baselines = np.array([r.baseline_macro_f1 for r in by_k[k]])
        ddof = 1 if len(macros) > 1 else 0
        mean_score = float(scores.mean())
        out[k] = {
            "n_runs": len(macros),
            "macro_f1_mean": float(macros.mean()),
            "macro_f1_std": float(macros.std(ddof=ddof)),
            "baseline_mean": float(baselines.mean()),
            "leakage_mean": mean_score,
            "leakage_std": float(scores.std(ddof=ddof)),
            "verdict": thresholds.verdict(mean_score),
        }
    return out
