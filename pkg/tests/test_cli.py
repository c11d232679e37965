from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from kas.cli import main

GOLDEN = Path(__file__).parent / "golden" / "scenario1_query.json"

SCENARIO1_FLAGS = [
    "search", "--pattern", "EPDI", "--entity", "Buprenorphine",
    "--pronoun", "PERSONAL_PRONOUN", "--dosage", ">4mg",
    "--interval", "BY_DAY,BY_HOUR",
]


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_corpus_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, "gen-corpus", "--seed", "7", "--docs", "200", "--out", str(a))[0] == 0
    assert run(capsys, "gen-corpus", "--seed", "7", "--docs", "200", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".jsonl.truth.json").read_bytes() == b.with_suffix(".jsonl.truth.json").read_bytes()


def test_gen_corpus_seed_changes_output(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run(capsys, "gen-corpus", "--seed", "1", "--docs", "50", "--out", str(a))
    run(capsys, "gen-corpus", "--seed", "2", "--docs", "50", "--out", str(b))
    assert a.read_bytes() != b.read_bytes()


def test_pipeline_trace_matches_planted_counts(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    ann = tmp_path / "a.jsonl"
    idx = tmp_path / "i.kix"
    run(capsys, "gen-corpus", "--seed", "7", "--docs", "150", "--out", str(corpus))
    truth = json.loads((tmp_path / "c.jsonl.truth.json").read_text())

    code, out, _ = run(capsys, "annotate", "--corpus", str(corpus), "--out", str(ann))
    assert code == 0
    stats = dict(line.split("\t") for line in out.strip().splitlines())
    for pid, count in truth["pattern_counts"].items():
        assert int(stats[pid]) == count

    assert run(capsys, "index", "--in", str(ann), "--corpus", str(corpus), "--out", str(idx))[0] == 0

    code, out, _ = run(capsys, "search", "--index", str(idx), "--pattern", "EPDI",
                       "--entity", "Buprenorphine", "--pronoun", "PERSONAL_PRONOUN",
                       "--dosage", ">4mg", "--interval", "BY_DAY,BY_HOUR", "--trace")
    assert code == 0
    trace_line, json_line = out.strip().splitlines()
    trace = json.loads(trace_line)
    assert trace[0] == truth["pattern_counts"]["EPDI"]
    assert json.loads(json_line)["trace"] == trace


def test_print_query_matches_golden(capsys):
    code, out, _ = run(capsys, *SCENARIO1_FLAGS, "--print-query")
    assert code == 0
    assert out == GOLDEN.read_text(encoding="utf-8")


def test_search_errors_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "search", "--index", str(tmp_path / "missing.kix"),
                       "--pattern", "EPDI", "--entity", "Buprenorphine")
    assert code == 1
    assert "error" in err


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["search", "--no-such-flag"])
    assert exc.value.code == 2


def test_unknown_concept_is_an_error(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    ann = tmp_path / "a.jsonl"
    idx = tmp_path / "i.kix"
    run(capsys, "gen-corpus", "--seed", "3", "--docs", "20", "--out", str(corpus))
    run(capsys, "annotate", "--corpus", str(corpus), "--out", str(ann))
    run(capsys, "index", "--in", str(ann), "--corpus", str(corpus), "--out", str(idx))
    code, _, err = run(capsys, "search", "--index", str(idx), "--pattern", "EPDI",
                       "--entity", "NoSuchDrug", "--pronoun", "PERSONAL_PRONOUN",
                       "--dosage", ">4mg", "--interval", "BY_DAY")
    assert code == 1 and "NoSuchDrug" in err


def test_query_file_input(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    ann = tmp_path / "a.jsonl"
    idx = tmp_path / "i.kix"
    run(capsys, "gen-corpus", "--seed", "5", "--docs", "40", "--out", str(corpus))
    run(capsys, "annotate", "--corpus", str(corpus), "--out", str(ann))
    run(capsys, "index", "--in", str(ann), "--corpus", str(corpus), "--out", str(idx))
    qfile = tmp_path / "q.json"
    qfile.write_text(GOLDEN.read_text(), encoding="utf-8")
    code, out, _ = run(capsys, "search", "--index", str(idx), "--query", f"@{qfile}")
    assert code == 0
    assert "trace" in json.loads(out)


def test_module_entrypoint_smoke(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "kas", "gen-corpus", "--seed", "1", "--docs", "5",
         "--out", str(tmp_path / "c.jsonl")],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert (tmp_path / "c.jsonl").exists()


def test_config_file_controls_defaults(tmp_path, capsys, monkeypatch):
    from kas.config import DATA_DIR

    corpus = tmp_path / "c.jsonl"
    ann = tmp_path / "a.jsonl"
    idx = tmp_path / "i.kix"
    run(capsys, "gen-corpus", "--seed", "4", "--docs", "30", "--out", str(corpus))
    run(capsys, "annotate", "--corpus", str(corpus), "--out", str(ann))
    run(capsys, "index", "--in", str(ann), "--corpus", str(corpus), "--out", str(idx))
    cfg = tmp_path / "kas.json"
    cfg.write_text(json.dumps({
        "grammar": str(DATA_DIR / "default.kag"),
        "index": str(idx),
        "snippet_context": 2,
    }), encoding="utf-8")
    monkeypatch.setenv("KAS_CONFIG", str(cfg))
    code, out, _ = run(capsys, *SCENARIO1_FLAGS)
    assert code == 0
    assert "trace" in json.loads(out)


def test_annotate_workers_flag(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    run(capsys, "gen-corpus", "--seed", "9", "--docs", "60", "--out", str(corpus))
    a1, a2 = tmp_path / "a1.jsonl", tmp_path / "a2.jsonl"
    run(capsys, "annotate", "--corpus", str(corpus), "--out", str(a1))
    run(capsys, "annotate", "--corpus", str(corpus), "--out", str(a2), "--workers", "3")
    assert a1.read_bytes() == a2.read_bytes()
