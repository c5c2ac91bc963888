"""Command-level tests: exit codes, stdout lines, and emitted JSON files.

Every emitted JSON artifact is validated against the schema shipped in
leakaudit/schemas/, so the schemas are part of the tested contract.
"""

import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

import leakaudit
from leakaudit import Manifest, label_distribution, load_jsonl, save_jsonl
from leakaudit.cli import main, parse_window

LABELS = "true,false,unverified,non-rumor"
SCHEMA_DIR = Path(leakaudit.__file__).parent / "schemas"


def check_schema(payload, schema_name):
    schema = json.loads((SCHEMA_DIR / schema_name).read_text(encoding="utf-8"))
    jsonschema.validate(payload, schema)


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def env(tmp_path_factory, leaky, control, pool):
    root = tmp_path_factory.mktemp("cli")
    paths = {"root": root}
    for key, dataset in (("leaky", leaky), ("control", control), ("pool", pool)):
        paths[key] = root / f"{key}.jsonl"
        save_jsonl(dataset, paths[key])
    return paths


def test_parse_window():
    assert parse_window("5000") == 5000
    assert parse_window("90s") == 90_000
    assert parse_window("2m") == 120_000
    assert parse_window("1.5h") == 5_400_000
    assert parse_window("7d") == 604_800_000
    assert parse_window(" 7D ") == 604_800_000
    with pytest.raises(ValueError):
        parse_window("abc")
    with pytest.raises(ValueError):
        parse_window("")


def test_version_flag(capsys):
    # argparse version action exits directly instead of returning
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert capsys.readouterr().out.startswith("leakaudit ")


def test_audit_leaky_fails_gate(env, capsys):
    bundle_path = env["root"] / "bundle-leaky.json"
    rc = main([
        "audit", str(env["leaky"]), "--labels", LABELS,
        "--k", "3", "--n-splits", "2", "--json", str(bundle_path),
    ])
    out = capsys.readouterr().out
    assert rc == 2
    assert "[FAIL] worst id-leak score" in out
    assert "id-leak probe (2 generated splits):" in out
    assert "keyword scan:" in out
    assert "duplicates:" in out

    bundle = read_json(bundle_path)
    check_schema(bundle, "audit-bundle.schema.json")
    assert bundle["id_leak"]["gate"] == "fail"
    assert bundle["id_leak"]["worst_leakage_score"] > 0.9
    assert len(bundle["id_leak"]["reports"]) == 2
    assert set(bundle["id_leak"]["summary"]) == {"3"}
    assert bundle["fingerprint"]["n_records"] == 2000
    assert set(bundle["fingerprint"]["label_distribution"].values()) == {500}
    assert bundle["duplicates"] is not None
    assert bundle["contamination"] is None


def test_audit_high_gate_passes(env, capsys):
    bundle_path = env["root"] / "bundle-gate.json"
    rc = main([
        "audit", str(env["leaky"]), "--labels", LABELS,
        "--k", "2", "--n-splits", "1", "--fail-over", "1.1",
        "--skip-duplicates", "--json", str(bundle_path),
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "[PASS] worst id-leak score" in out
    bundle = read_json(bundle_path)
    check_schema(bundle, "audit-bundle.schema.json")
    assert bundle["id_leak"]["gate"] == "pass"
    assert bundle["duplicates"] is None
    assert bundle["contamination"] is None


def test_audit_control_passes_default_gate(env, capsys):
    bundle_path = env["root"] / "bundle-control.json"
    rc = main([
        "audit", str(env["control"]), "--labels", LABELS,
        "--k", "3", "--n-splits", "2", "--skip-duplicates",
        "--json", str(bundle_path),
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "[PASS]" in out
    bundle = read_json(bundle_path)
    check_schema(bundle, "audit-bundle.schema.json")
    assert bundle["id_leak"]["worst_leakage_score"] < 0.15


def test_audit_canonical_split_reports_contamination(env, capsys):
    split_path = env["root"] / "canonical.json"
    assert main([
        "split", str(env["leaky"]), "--labels", LABELS,
        "--seed", "5", "--out", str(split_path),
    ]) == 0

    bundle_path = env["root"] / "bundle-canonical.json"
    rc = main([
        "audit", str(env["leaky"]), "--labels", LABELS,
        "--split", str(split_path), "--k", "2,3", "--json", str(bundle_path),
    ])
    out = capsys.readouterr().out
    assert rc == 2
    assert "(canonical split):" in out
    assert "cross-split contamination:" in out

    bundle = read_json(bundle_path)
    check_schema(bundle, "audit-bundle.schema.json")
    # one report per k against the fixed split
    assert len(bundle["id_leak"]["reports"]) == 2
    assert set(bundle["id_leak"]["summary"]) == {"2", "3"}
    assert bundle["contamination"] is not None
    assert bundle["contamination"]["n_pairs"] >= 0


def test_audit_usage_errors(env, capsys):
    # no label vocabulary
    assert main(["audit", str(env["leaky"])]) == 1
    assert "provide --manifest FILE or --labels" in capsys.readouterr().err

    # missing data file
    assert main(["audit", str(env["root"] / "nope.jsonl"), "--labels", LABELS]) == 1
    assert "error:" in capsys.readouterr().err

    # malformed --k
    assert main(["audit", str(env["leaky"]), "--labels", LABELS, "--k", "abc"]) == 1
    assert "error:" in capsys.readouterr().err

    # unknown subcommand and empty argv are argument errors, not crashes
    assert main(["bogus"]) == 1
    assert main([]) == 1


def test_split_deterministic_and_schema(env, capsys):
    out1 = env["root"] / "split-a.json"
    out2 = env["root"] / "split-b.json"
    argv = ["split", str(env["leaky"]), "--labels", LABELS, "--seed", "11"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert "train 1400 / dev 200 / test 400" in capsys.readouterr().out
    assert out1.read_bytes() == out2.read_bytes()

    payload = read_json(out1)
    check_schema(payload, "split-file.schema.json")
    assert len(payload["train_ids"]) == 1400
    assert len(payload["dev_ids"]) == 200
    assert len(payload["test_ids"]) == 400
    assert payload["spec"]["seed"] == 11


def test_split_errors(env, capsys):
    out = env["root"] / "never-written.json"
    base = ["split", str(env["leaky"]), "--labels", LABELS, "--out", str(out)]

    assert main(base) == 1
    assert "--seed is required" in capsys.readouterr().err

    assert main(base + ["--seed", "1", "--ratios", "0.5,0.5"]) == 1
    assert "three numbers" in capsys.readouterr().err

    assert main(base + ["--seed", "1", "--ratios", "a,b,c"]) == 1
    assert main(base + ["--seed", "1", "--ratios", "0.5,0.4,0.3"]) == 1
    assert main(base + ["--seed", "1", "--preset", "no-such-preset"]) == 1
    assert not out.exists()


def test_split_preset(env, capsys):
    out = env["root"] / "preset.json"
    rc = main([
        "split", str(env["leaky"]), "--labels", LABELS,
        "--preset", "pheme9-tf", "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    assert "train 700 / dev 100 / test 200" in capsys.readouterr().out
    payload = read_json(out)
    check_schema(payload, "split-file.schema.json")
    assert payload["spec"]["name"] == "pheme9-tf"
    assert payload["spec"]["label_filter"] == ["true", "false"]


def _write_predictions(path, split_payload, gold, drop=0):
    test_ids = split_payload["test_ids"]
    kept = test_ids[: len(test_ids) - drop]
    lines = ["id,label"] + [f"{rid},{gold[rid]}" for rid in kept]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_eval_perfect_predictions(env, leaky, capsys):
    split_path = env["root"] / "eval-split.json"
    assert main([
        "split", str(env["leaky"]), "--labels", LABELS,
        "--seed", "17", "--out", str(split_path),
    ]) == 0

    gold = {r.id: r.label for r in leaky.records}
    pred_path = env["root"] / "perfect.csv"
    _write_predictions(pred_path, read_json(split_path), gold)

    result_path = env["root"] / "eval-result.json"
    rc = main([
        "eval", str(env["leaky"]), "--labels", LABELS,
        "--split", str(split_path), "--pred", str(pred_path),
        "--json", str(result_path),
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "macro-F1 1.0000" in out
    assert "evaluated 400 predictions (0 missing, mode wrong)" in out

    payload = read_json(result_path)
    check_schema(payload, "eval-result.schema.json")
    assert payload["macro_f1"] == 1.0
    assert payload["n_scored"] == 400
    assert payload["n_missing"] == 0


def test_eval_missing_mode_and_errors(env, leaky, capsys):
    split_path = env["root"] / "eval-split2.json"
    assert main([
        "split", str(env["leaky"]), "--labels", LABELS,
        "--seed", "17", "--out", str(split_path),
    ]) == 0

    gold = {r.id: r.label for r in leaky.records}
    pred_path = env["root"] / "partial.csv"
    _write_predictions(pred_path, read_json(split_path), gold, drop=10)

    result_path = env["root"] / "eval-partial.json"
    rc = main([
        "eval", str(env["leaky"]), "--labels", LABELS,
        "--split", str(split_path), "--pred", str(pred_path),
        "--missing", "exclude", "--json", str(result_path),
    ])
    assert rc == 0
    capsys.readouterr()
    payload = read_json(result_path)
    check_schema(payload, "eval-result.schema.json")
    assert payload["n_scored"] == 390
    assert payload["n_missing"] == 10
    assert payload["missing_mode"] == "exclude"
    assert payload["macro_f1"] == 1.0

    # bad --missing choice is an argument error
    assert main([
        "eval", str(env["leaky"]), "--labels", LABELS,
        "--split", str(split_path), "--pred", str(pred_path),
        "--missing", "bogus",
    ]) == 1
    # missing prediction file
    assert main([
        "eval", str(env["leaky"]), "--labels", LABELS,
        "--split", str(split_path), "--pred", str(env["root"] / "nope.csv"),
    ]) == 1
    assert "error:" in capsys.readouterr().err


def _aggregate_fixture(root):
    rows = [
        ("9001", "alpha beta", "x", "artA"),
        ("9002", "beta gamma", "x", "artA"),
        ("9003", "gamma delta", "y", "artA"),
        ("9004", "delta epsilon", "x", "artA"),
        ("9005", "epsilon zeta", "y", "artB"),
        ("9006", "zeta eta", "y", "artB"),
        ("9007", "eta theta", "x", "artB"),
        ("9008", "theta iota", "x", "artC"),
        ("9009", "iota kappa", "y", None),
    ]
    data_path = root / "articles.jsonl"
    lines = []
    for rid, text, label, article in rows:
        row = {"id": rid, "text": text, "label": label}
        if article is not None:
            row["article_id"] = article
        lines.append(json.dumps(row))
    data_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    pred_path = root / "article-preds.csv"
    preds = ["id,label"] + [f"{rid},{label}" for rid, _, label, _ in rows]
    pred_path.write_text("\n".join(preds) + "\n", encoding="utf-8")
    return data_path, pred_path


def test_aggregate_votes(env, capsys):
    data_path, pred_path = _aggregate_fixture(env["root"])
    out_path = env["root"] / "votes.csv"
    rc = main([
        "aggregate", str(data_path), "--labels", "x,y",
        "--pred", str(pred_path), "--out", str(out_path),
    ])
    assert rc == 0
    assert "2 article votes (>= 3 tweets each)" in capsys.readouterr().out
    rows = [line.split(",") for line in out_path.read_text().strip().splitlines()]
    # artC has one tweet (below the floor); 9009 has no article
    assert rows == [["article_id", "label"], ["artA", "x"], ["artB", "y"]]

    rc = main([
        "aggregate", str(data_path), "--labels", "x,y",
        "--pred", str(pred_path), "--min-tweets", "1", "--out", str(out_path),
    ])
    assert rc == 0
    rows = [line.split(",") for line in out_path.read_text().strip().splitlines()]
    assert rows == [
        ["article_id", "label"],
        ["artA", "x"],
        ["artB", "y"],
        ["artC", "x"],
    ]


def test_rebalance_cli(env, capsys):
    out_path = env["root"] / "rebalanced.jsonl"
    report_path = env["root"] / "rebalance-report.json"
    rc = main([
        "rebalance", str(env["leaky"]), "--labels", LABELS,
        "--pool", str(env["pool"]), "--anchor-label", "non-rumor",
        "--window", "7d", "--seed", "0",
        "--out", str(out_path), "--report", str(report_path),
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "rebalanced dataset written" in out
    assert "leak score k=" in out

    report = read_json(report_path)
    check_schema(report, "rebalance-report.schema.json")
    assert report["n_records"] == 2000
    assert report["n_anchor"] == 500
    assert report["n_replaced"] + report["n_rejected"] == 1500
    assert report["window_ms"] == 604_800_000
    assert report["leak_before"]["leakage_score"] > 0.4
    assert report["leak_after"]["leakage_score"] < 0.15

    manifest = Manifest(labels=tuple(LABELS.split(",")))
    rebuilt = load_jsonl(out_path, manifest)
    assert len(rebuilt) == 2000
    assert label_distribution(rebuilt) == {label: 500 for label in manifest.labels}
    # anchors pass through byte-identical, in place
    original = load_jsonl(env["leaky"], manifest)
    anchor_in = [r.id for r in original.records if r.label == "non-rumor"]
    anchor_out = [r.id for r in rebuilt.records if r.label == "non-rumor"]
    assert anchor_in == anchor_out


def test_rebalance_no_probe_and_errors(env, capsys):
    out_path = env["root"] / "rebalanced2.jsonl"
    report_path = env["root"] / "rebalance-report2.json"
    rc = main([
        "rebalance", str(env["leaky"]), "--labels", LABELS,
        "--pool", str(env["pool"]), "--anchor-label", "non-rumor",
        "--seed", "1", "--no-leak-probe",
        "--out", str(out_path), "--report", str(report_path),
    ])
    assert rc == 0
    assert "leak score" not in capsys.readouterr().out
    report = read_json(report_path)
    check_schema(report, "rebalance-report.schema.json")
    assert report["leak_before"] is None
    assert report["leak_after"] is None

    base = [
        "rebalance", str(env["leaky"]), "--labels", LABELS,
        "--pool", str(env["pool"]), "--out", str(out_path),
    ]
    assert main(base + ["--anchor-label", "non-rumor"]) == 1
    assert "--seed is required" in capsys.readouterr().err
    assert main(base + ["--anchor-label", "non-rumor", "--seed", "1", "--window", "abc"]) == 1
    assert main(base + ["--anchor-label", "no-such-label", "--seed", "1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_inspect_cli(env, capsys):
    json_path = env["root"] / "fingerprint.json"
    rc = main(["inspect", str(env["leaky"]), "--labels", LABELS, "--json", str(json_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "(2000 records)" in out
    assert "time span: 2015-01" in out
    assert "violations: 0" in out

    payload = read_json(json_path)
    check_schema(payload, "inspect.schema.json")
    info = payload["fingerprint"]
    assert info["n_records"] == 2000
    assert sum(info["label_distribution"].values()) == 2000
    assert info["n_undecodable_ids"] == 0
    assert info["n_violations"] == 0
    assert info["min_timestamp_ms"] < info["max_timestamp_ms"]


def test_module_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "leakaudit", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("leakaudit ")
