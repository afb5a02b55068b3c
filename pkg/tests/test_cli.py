import json

import pytest

from cardsudoku.cli import format_summary, main, parse_summary
from cardsudoku.fixtures import SAMPLE_PUZZLE_TEXT, SAMPLE_SOLUTION_TEXT


@pytest.fixture
def files(tmp_path, solution):
    p = tmp_path / "puzzle.txt"
    s = tmp_path / "solution.txt"
    bad = tmp_path / "bad.txt"
    p.write_text(SAMPLE_PUZZLE_TEXT)
    s.write_text(SAMPLE_SOLUTION_TEXT)
    bad.write_text(solution.swap((0, 0), (1, 0)).to_text())
    return p, s, bad


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip().splitlines(), out.err


def test_verify_accepts(files, capsys, tmp_path):
    p, s, _ = files
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "verify", "--puzzle", str(p), "--solution", str(s), "--method", "b", "--optimized", "--trace", str(trace))
    assert code == 0 and "cards=108 shuffles=322" in out[-1]
    assert trace.read_text().startswith('{"format"')


def test_verify_rejects_mutant(files, capsys):
    p, _, bad = files
    code, out, err = run(capsys, "verify", "--puzzle", str(p), "--solution", str(bad))
    fields = parse_summary(out[-1])
    assert code == 1 and fields["verdict"] == "rejected" and fields["check"] and "reason:" in err


def test_verify_missing_file(files, capsys, tmp_path):
    p, _, _ = files
    code, _, err = run(capsys, "verify", "--puzzle", str(p), "--solution", str(tmp_path / "nope.txt"))
    assert code == 2 and "no such file" in err


def test_usage_error_exit_2(capsys):
    assert main(["verify"]) == 2
    assert main(["bogus"]) == 2


@pytest.mark.parametrize(
    "argv,expect",
    [
        (["--n", "9", "--method", "a", "--optimized"], "cards=120 shuffles=108"),
        (["--n", "9", "--method", "b", "--no-optimized"], "cards=108 shuffles=828"),
        (["--n", "9", "--method", "b", "--unoptimized"], "cards=108 shuffles=828"),
        (["--n", "4", "--method", "b", "--optimized", "--simulate"], "cards=30 shuffles=32"),
        (["--n", "9"], "cards=108 shuffles=322"),
    ],
)
def test_stats(capsys, argv, expect):
    code, out, _ = run(capsys, "stats", *argv)
    assert code == 0 and out[-1].startswith(expect)


def test_stats_simulate_matches(capsys):
    code, out, _ = run(capsys, "stats", "--n", "16", "--method", "a", "--simulate")
    assert code == 0 and parse_summary(out[-1])["match"] is True


def test_stats_non_square(capsys):
    assert run(capsys, "stats", "--n", "5")[0] == 2


def test_zk_too_few_runs(capsys):
    code, _, err = run(capsys, "zk-test", "--runs", "10")
    assert code == 2 and "sample too small" in err


def test_zk_rigged_flagged(capsys, tmp_path):
    report = tmp_path / "r.txt"
    code, out, _ = run(capsys, "zk-test", "--n", "4", "--runs", "400", "--rigged", "--report", str(report))
    assert code == 1 and "x1_row" in parse_summary(out[-1])["names"]
    assert "FLAGGED" in report.read_text()


def test_zk_small_n4_passes(capsys):
    code, out, _ = run(capsys, "zk-test", "--n", "4", "--runs", "400", "--seed", "3")
    assert code == 0, out


def test_soundness_small(capsys):
    code, out, _ = run(capsys, "soundness-test", "--seeds", "3")
    fields = parse_summary(out[-1])
    assert code == 0 and fields["rejected"] == "12/12" and fields["accepted"] == "3/3"


def test_soundness_broken_verifier(capsys):
    code, out, _ = run(capsys, "soundness-test", "--seeds", "2", "--disable-row-check")
    assert code == 1 and parse_summary(out[-1])["ok"] is False


def test_trace_and_replay(capsys, tmp_path):
    path = tmp_path / "t.jsonl"
    assert run(capsys, "trace", "--seed", "1", "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "trace", "--replay", str(path), "--format", "structured")
    assert code == 0 and json.loads(out[-1])["verdict"] == "accepted"
    sim = tmp_path / "s.jsonl"
    assert run(capsys, "trace", "--simulate", "--out", str(sim))[0] == 0
    assert run(capsys, "trace", "--replay", str(sim))[0] == 0


def test_trace_replay_garbage(capsys, tmp_path):
    path = tmp_path / "junk.jsonl"
    path.write_text("not json\n")
    assert run(capsys, "trace", "--replay", str(path))[0] == 2


@pytest.mark.parametrize("style", ["plain", "structured"])
def test_summary_round_trip(style):
    fields = {"verdict": "accepted", "cards": 108, "shuffles": 322, "check": None, "ok": True}
    assert parse_summary(format_summary(fields, style)) == fields


def test_seed_env(monkeypatch, capsys, tmp_path):
    monkeypatch.setenv("CARDSUDOKU_SEED", "9")
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    run(capsys, "trace", "--out", str(a))
    run(capsys, "trace", "--seed", "9", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("CARDSUDOKU_SEED", "zz")
    assert main(["stats"]) == 2
