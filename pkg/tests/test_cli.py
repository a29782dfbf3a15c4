import json
import subprocess
import sys

import pytest

from depcons import io
from depcons.cli import run_cli
from depcons.dataset import numeric_scale


def tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def write_lines(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def test_simulate_is_byte_identical(tmp_path):
    argv = ["simulate", "--workers", "5", "--questions", "10", "--scale", "7", "--seed", "42"]
    assert run_cli(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run_cli(argv + ["--out", str(tmp_path / "b")]) == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b
    assert {"dataset.jsonl", "truth.jsonl", "consensus.csv", "recovery.csv", "recovery.png", "posterior.csv"} <= set(a)


def test_simulate_outputs_reingest(tmp_path):
    out = tmp_path / "run"
    assert run_cli(["simulate", "--workers", "4", "--questions", "6", "--mode", "two-phase", "--seed", "1",
                    "--out", str(out), "--no-figures"]) == 0
    scale = io.read_scale_file(out / "scale.json")
    ds = io.parse_dataset_file(out / "dataset.jsonl", scale)
    assert ds.m == 6 and ds.n == 4
    assert set(io.read_truth(out / "truth.jsonl", scale)) == set(ds.question_ids)
    assert (out / "metrics.csv").exists() and (out / "metrics_summary.csv").exists()
    assert not (out / "recovery.png").exists()


def test_metrics_single_worker(tmp_path):
    f = write_lines(tmp_path / "twophase.txt",
                    [{"question_id": "q1", "worker_id": "w1", "prior_label": "borderline", "posterior_label": "borderline"}])
    out = tmp_path / "m.csv"
    assert run_cli(["metrics", "--in", str(f), "--out", str(out)]) == 0
    (row,) = io.read_table(out)
    assert float(row["reliability"]) == 1.0
    assert float(row["accuracy"]) == 1.0
    assert (tmp_path / "m_summary.csv").exists()
    assert (tmp_path / "m.png").exists()


def test_infer_identity_channel(tmp_path):
    f = write_lines(tmp_path / "seq.txt", [
        {"question_id": "q1", "worker_id": "a", "order_index": 0, "label": "accept"},
        {"question_id": "q1", "worker_id": "b", "order_index": 1, "label": "reject"},
    ])
    out = tmp_path / "p.csv"
    assert run_cli(["infer", "--in", str(f), "--gamma", "0", "--out", str(out)]) == 0
    rows = io.read_table(out)
    assert len(rows) == 14
    mass = {(r["worker_id"], int(r["score"])): float(r["probability"]) for r in rows}
    assert mass[("a", 6)] == 1.0 and mass[("b", 2)] == 1.0
    assert sum(mass.values()) == 2.0
    maps = io.read_table(tmp_path / "p_map.csv")
    assert [int(r["map_score"]) for r in maps] == [6, 2]


def test_aggregate_with_truth(tmp_path):
    run = tmp_path / "run"
    assert run_cli(["simulate", "--workers", "5", "--questions", "8", "--mode", "two-phase", "--scale", "5",
                    "--seed", "3", "--out", str(run), "--no-figures"]) == 0
    out = tmp_path / "c.csv"
    assert run_cli(["aggregate", "--in", str(run / "dataset.jsonl"), "--scale", "5", "--truth",
                    str(run / "truth.jsonl"), "--out", str(out)]) == 0
    assert {r["method"] for r in io.read_table(out)} == {"weighted", "unweighted-mean", "majority", "prior-mean"}
    assert (tmp_path / "c_recovery.csv").read_bytes() == (run / "recovery.csv").read_bytes()


def test_aggregate_sequential_with_profiles(tmp_path):
    run = tmp_path / "run"
    assert run_cli(["simulate", "--workers", "4", "--questions", "5", "--seed", "9", "--scale", "7",
                    "--disclosure", "mixture", "--out", str(run), "--no-figures"]) == 0
    out = tmp_path / "c.csv"
    assert run_cli(["aggregate", "--in", str(run / "dataset.jsonl"), "--scale", "7", "--profiles",
                    str(run / "profiles.csv"), "--kernel", "mixture", "--out", str(out), "--no-figures"]) == 0
    assert (out.read_bytes()) == (run / "consensus.csv").read_bytes()


def test_evaluate_from_consensus(tmp_path):
    run = tmp_path / "run"
    run_cli(["simulate", "--workers", "3", "--questions", "4", "--mode", "two-phase", "--seed", "2",
             "--out", str(run), "--no-figures"])
    out = tmp_path / "r.csv"
    assert run_cli(["evaluate", "--consensus", str(run / "consensus.csv"), "--truth", str(run / "truth.jsonl"),
                    "--out", str(out), "--no-figures"]) == 0
    assert out.read_bytes() == (run / "recovery.csv").read_bytes()


def test_config_file(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"workers": 3, "questions": 2, "scale": ["lo", "mid", "hi"], "seed": 5}))
    out = tmp_path / "run"
    assert run_cli(["simulate", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
    assert io.read_scale_file(out / "scale.json").labels == ("lo", "mid", "hi")


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["simulate", "--out", "x", "--bogus"], "unrecognized"),
        (["frobnicate"], "invalid choice"),
        (["metrics", "--in", "missing.jsonl", "--out", "m.csv"], "missing.jsonl"),
        (["simulate", "--seed", "-1", "--out", "x"], "seed"),
        (["infer", "--in", "seq.jsonl", "--out", "p.csv"], ""),
    ],
)
def test_errors_exit_nonzero_single_line(argv, needle, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_lines(tmp_path / "seq.jsonl", [{"question_id": "q", "worker_id": "a", "order_index": 0, "label": "accept"}])
    assert run_cli(argv) != 0
    err = capsys.readouterr().err
    assert err.startswith("depcons: error:")
    assert err.count("\n") == 1
    assert needle in err


def test_parse_error_names_line(tmp_path, capsys):
    f = write_lines(tmp_path / "seq.jsonl", [{"question_id": "q1", "worker_id": "a", "order_index": 0}])
    assert run_cli(["infer", "--in", str(f), "--gamma", "0", "--out", str(tmp_path / "p.csv")]) == 2
    err = capsys.readouterr().err
    assert "line 1" in err and str(f) in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "depcons", "simulate", "--workers", "2", "--questions", "2", "--seed", "1",
         "--out", str(tmp_path / "o"), "--no-figures"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "dataset.jsonl").exists()


def test_default_scale_is_review(tmp_path):
    run_cli(["simulate", "--workers", "2", "--questions", "1", "--seed", "1", "--out", str(tmp_path), "--no-figures"])
    assert io.read_scale_file(tmp_path / "scale.json").labels[3] == "borderline"
    assert io.read_scale_file(tmp_path / "scale.json") != numeric_scale(7)
