"""Core data model: records, label sets, datasets, and file loaders.

A Dataset is an ordered, immutable collection of labeled records with unique
ids. Loaders are strict (malformed input raises, with the offending line
number); ``validate`` is the opposite, a total checker that reports rule
violations as data and never raises, so programmatically built datasets can
be linted before use.

File formats:
  JSONL - one object per line: {"id", "text", "label"} required,
          {"event", "article_id", "reply_count"} optional.
  CSV   - RFC 4180 with a header row; the manifest maps canonical field
          names onto source columns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateIdError,
    IdParseError,
    RecordParseError,
    SchemaError,
    UnknownLabelError,
)
from .snowflake import MAX_ID, try_decode_timestamp

CANONICAL_FIELDS = ("id", "text", "label", "event", "article_id", "reply_count")
REQUIRED_FIELDS = ("id", "text", "label")


@dataclass(frozen=True)
class LabelSet:
    """Ordered set of distinct label strings.

    Order is significant: it fixes tie-breaking everywhere downstream
    (forest votes, article-vote ties, report columns), so two label sets
    with the same members in different orders are different label sets.
    """

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("label set is empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        if any(not isinstance(lab, str) or lab == "" for lab in self.labels):
            raise ValueError("labels must be non-empty strings")

    @classmethod
    def of(cls, *labels: str) -> "LabelSet":
        return cls(tuple(labels))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabelError(f"label {label!r} not in {self.labels}") from None

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Record:
    """One labeled social-media item.

    ``timestamp_ms`` is derived from the id at load time (None when the id
    carries no snowflake timestamp); it is never read from the input file.
    ``extra`` holds source columns outside the canonical schema so loaders
    round-trip without loss.
    """

    id: str
    text: str
    label: str
    event: str | None = None
    article_id: str | None = None
    reply_count: int | None = None
    timestamp_ms: int | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def with_derived_timestamp(self) -> "Record":
        return replace(self, timestamp_ms=try_decode_timestamp(self.id))


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of records plus its label vocabulary.

    Construction is permissive (so ``validate`` has something to check);
    the loaders below enforce id uniqueness, label membership, and id
    syntax strictly and raise on the first violation.
    """

    records: tuple[Record, ...]
    label_set: LabelSet
    name: str = ""
    source_notes: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, Record]:
        return {r.id: r for r in self.records}

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def label_distribution(self) -> dict[str, int]:
        return label_distribution(self)

    def subset(self, ids: Iterable[str], name: str | None = None) -> "Dataset":
        """Records whose id is in ``ids``, keeping dataset order."""
        wanted = set(ids)
        records = tuple(r for r in self.records if r.id in wanted)
        return Dataset(
            records=records,
            label_set=self.label_set,
            name=self.name if name is None else name,
            source_notes=self.source_notes,
        )


@dataclass(frozen=True)
class Violation:
    """One validation finding: which record, which rule, what happened."""

    record_id: str
    rule: str
    message: str


@dataclass(frozen=True)
class Manifest:
    """Describes how to read a source file: label vocabulary + field map.

    ``fields`` maps canonical field names to source column/key names.
    Unmapped canonical fields default to their own name; optional fields
    whose default column is absent simply load as None.
    """

    labels: tuple[str, ...]
    fields: Mapping[str, str] = field(default_factory=dict)
    name: str = ""
    source_notes: str = ""

    def __post_init__(self):
        unknown = set(self.fields) - set(CANONICAL_FIELDS)
        if unknown:
            raise SchemaError(f"manifest maps unknown fields: {sorted(unknown)}")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "Manifest":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if "labels" not in raw or not raw["labels"]:
            raise SchemaError(f"manifest {path} has no labels")
        return cls(
            labels=tuple(raw["labels"]),
            fields=dict(raw.get("fields", {})),
            name=raw.get("name", ""),
            source_notes=raw.get("source_notes", ""),
        )

    def label_set(self) -> LabelSet:
        return LabelSet(self.labels)

    def source_key(self, canonical: str) -> str:
        return self.fields.get(canonical, canonical)


def _check_id(id_str: object, line: int) -> str:
    # JSON writers commonly emit big ids as numbers; accept ints losslessly.
    if isinstance(id_str, int) and not isinstance(id_str, bool):
        id_str = str(id_str)
    if not isinstance(id_str, str) or not id_str.isdigit():
        raise RecordParseError(f"id is not a decimal string: {id_str!r}", line)
    if id_str[0] == "0":
        raise RecordParseError(f"id has a leading zero: {id_str!r}", line)
    if int(id_str) > MAX_ID:
        raise RecordParseError(f"id exceeds 2**63 - 1: {id_str!r}", line)
    return id_str


def _parse_reply_count(value: object, line: int) -> int | None:
    if value is None or value == "":
        return None
    try:
        count = int(value)
    except (TypeError, ValueError):
        raise RecordParseError(f"reply_count is not an integer: {value!r}", line) from None
    if count < 0:
        raise RecordParseError(f"reply_count is negative: {count}", line)
    return count


def _build_record(raw: Mapping[str, object], manifest: Manifest, line: int) -> Record:
    values: dict[str, object] = {}
    for canonical in CANONICAL_FIELDS:
        key = manifest.source_key(canonical)
        value = raw.get(key)
        if value is None and canonical in REQUIRED_FIELDS:
            raise RecordParseError(f"missing required field {key!r}", line)
        values[canonical] = value

    id_str = _check_id(values["id"], line)
    text = values["text"]
    if not isinstance(text, str):
        raise RecordParseError(f"text is not a string: {text!r}", line)
    label = values["label"]
    if label not in manifest.labels:
        raise UnknownLabelError(
            f"line {line}: label {label!r} not in manifest labels {list(manifest.labels)}"
        )

    mapped_keys = {manifest.source_key(c) for c in CANONICAL_FIELDS}
    extra = {k: v for k, v in raw.items() if k not in mapped_keys}
    event = values["event"]
    article_id = values["article_id"]
    return Record(
        id=id_str,
        text=text,
        label=str(label),
        event=str(event) if event not in (None, "") else None,
        article_id=str(article_id) if article_id not in (None, "") else None,
        reply_count=_parse_reply_count(values["reply_count"], line),
        timestamp_ms=try_decode_timestamp(id_str),
        extra=extra,
    )


def _assemble(records: list[Record], manifest: Manifest, lines: list[int], name: str) -> Dataset:
    seen: dict[str, int] = {}
    for record, line in zip(records, lines):
        if record.id in seen:
            raise DuplicateIdError(
                f"id {record.id} already seen on line {seen[record.id]}", line
            )
        seen[record.id] = line
    return Dataset(
        records=tuple(records),
        label_set=manifest.label_set(),
        name=name or manifest.name,
        source_notes=manifest.source_notes,
    )


def load_jsonl(path: str | Path, manifest: Manifest, name: str = "") -> Dataset:
    """Load a JSONL dataset strictly; line numbers are 1-based in errors."""
    records: list[Record] = []
    lines: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"invalid JSON: {exc}", line_no) from None
            if not isinstance(raw, dict):
                raise RecordParseError("line is not a JSON object", line_no)
            records.append(_build_record(raw, manifest, line_no))
            lines.append(line_no)
    return _assemble(records, manifest, lines, name or Path(path).stem)


def load_csv(path: str | Path, manifest: Manifest, name: str = "") -> Dataset:
    """Load an RFC 4180 CSV dataset with a header row."""
    records: list[Record] = []
    lines: list[int] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        header = set(reader.fieldnames)
        for canonical in REQUIRED_FIELDS:
            if manifest.source_key(canonical) not in header:
                raise SchemaError(
                    f"{path}: missing required column {manifest.source_key(canonical)!r}"
                )
        for canonical in CANONICAL_FIELDS:
            if canonical in manifest.fields and manifest.fields[canonical] not in header:
                raise SchemaError(
                    f"{path}: manifest maps {canonical!r} to missing column "
                    f"{manifest.fields[canonical]!r}"
                )
        for row_no, row in enumerate(reader, start=2):
            raw = {k: v for k, v in row.items() if k is not None}
            if None in row.values() or row.get(None):
                raise RecordParseError("row width does not match header", row_no)
            records.append(_build_record(raw, manifest, row_no))
            lines.append(row_no)
    return _assemble(records, manifest, lines, name or Path(path).stem)


def save_jsonl(dataset: Dataset, path: str | Path) -> None:
    """Write canonical JSONL (stable key order, extras preserved)."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in dataset.records:
            row: dict[str, object] = {"id": r.id, "text": r.text, "label": r.label}
            if r.event is not None:
                row["event"] = r.event
            if r.article_id is not None:
                row["article_id"] = r.article_id
            if r.reply_count is not None:
                row["reply_count"] = r.reply_count
            row.update(r.extra)
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def save_csv(dataset: Dataset, path: str | Path) -> None:
    """Write canonical CSV with the full canonical header."""
    extra_keys = sorted({k for r in dataset.records for k in r.extra})
    header = list(CANONICAL_FIELDS) + extra_keys
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in dataset.records:
            row = [
                r.id,
                r.text,
                r.label,
                r.event or "",
                r.article_id or "",
                "" if r.reply_count is None else r.reply_count,
            ]
            row += [r.extra.get(k, "") for k in extra_keys]
            writer.writerow(row)


def validate(dataset: Dataset) -> list[Violation]:
    """Total rule checker: returns violations, never raises.

    Rules: id syntax and range, duplicate ids, label membership,
    non-negative reply_count, text is a string.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    for r in dataset.records:
        rid = r.id if isinstance(r.id, str) else repr(r.id)
        if not isinstance(r.id, str) or not r.id.isdigit():
            violations.append(Violation(rid, "id-syntax", f"id is not a decimal string: {r.id!r}"))
        elif not 1 <= int(r.id) <= MAX_ID:
            violations.append(Violation(rid, "id-range", f"id outside [1, 2**63 - 1]: {r.id}"))
        elif r.id[0] == "0":
            violations.append(Violation(rid, "id-leading-zero", f"id has a leading zero: {r.id}"))
        if isinstance(r.id, str):
            if r.id in seen:
                violations.append(Violation(rid, "duplicate-id", f"id {r.id} occurs more than once"))
            seen.add(r.id)
        if r.label not in dataset.label_set:
            violations.append(
                Violation(rid, "unknown-label", f"label {r.label!r} not in label set")
            )
        if r.reply_count is not None and (
            not isinstance(r.reply_count, int) or r.reply_count < 0
        ):
            violations.append(
                Violation(rid, "negative-reply-count", f"reply_count is {r.reply_count!r}")
            )
        if not isinstance(r.text, str):
            violations.append(Violation(rid, "text-type", f"text is {type(r.text).__name__}"))
    return violations


def label_distribution(dataset: Dataset) -> dict[str, int]:
    """Counts per label, in label-set order, zeros included."""
    counts = {label: 0 for label in dataset.label_set}
    for r in dataset.records:
        if r.label in counts:
            counts[r.label] += 1
    return counts


def build_dataset(
    rows: Sequence[Mapping[str, object]],
    labels: Sequence[str],
    name: str = "",
) -> Dataset:
    """Assemble a dataset from in-memory dicts with loader-grade strictness.

    Convenience for tests and synthetic corpora; equivalent to writing the
    rows out as JSONL and loading them back.
    """
    manifest = Manifest(labels=tuple(labels), name=name)
    records = [_build_record(row, manifest, line) for line, row in enumerate(rows, start=1)]
    return _assemble(records, manifest, list(range(1, len(records) + 1)), name)
