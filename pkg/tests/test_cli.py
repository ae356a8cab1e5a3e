import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from permdiv import cli, stats

GOLDEN = Path(__file__).parent / "golden"

# every CLI example shown in README.md, with its golden output file
DOC_EXAMPLES = [
    ("simulate --n 100 --samples 10 --theta 1 --seed 7", "simulate_n100_s10_seed7.csv"),
    ("simulate --n 200 --samples 40 --theta 2 --seed 3 --grid 10 --tvec 0.3 0.6 --a 0.2 0.05 "
     "--s 0.3 --t 0.7 --format json", "simulate_n200_full.json"),
    ("km-identity --n 100 --r 10", "km_n100_r10.csv"),
    ("exact-mean --n 2 --tvec 0.5", "exact_n2.csv"),
    ("modulus --n 300 --samples 50 --seed 1 --a 0.2 0.1", "modulus_n300.csv"),
    ("increments --n 100 --samples 30 --s 0.3 --t 0.7", "increments_n100.csv"),
]


def run(argv, env=None):
    proc = subprocess.run([sys.executable, "-m", "permdiv", *argv], capture_output=True,
                          env={**os.environ, **(env or {})})
    return proc.returncode, proc.stdout, proc.stderr.decode()


def call(argv, capsys):
    code = cli.dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_beta_scalar(capsys):
    assert call(["beta", "--t", "0.25", "--a", "0.5", "--b", "0.5"], capsys)[:2] == (0, "0.3333333333\n")


@pytest.mark.parametrize("argv,expected", [
    (["dickman", "--u", "2"], "0.3068528194\n"),
    (["buchstab", "--u", "3"], "0.5643823935\n"),
    (["friable", "--m", "4", "--r", "2"], "0.4166666667\n"),
    (["free", "--m", "3", "--r", "1"], "0.3333333333\n"),
])
def test_scalar_oracles(argv, expected, capsys):
    assert call(argv, capsys)[:2] == (0, expected)


def test_usage_error_names_flag(capsys):
    code, out, err = call(["dickman", "--u", "-1"], capsys)
    assert code == 2 and "--u" in err and out == ""
    code, _, err = call(["beta", "--t", "abc", "--a", "1", "--b", "1"], capsys)
    assert code == 2 and "--t" in err
    code, _, err = call(["km-identity", "--n", "5", "--r", "5"], capsys)
    assert code == 2 and "--r" in err
    code, _, err = call(["moments", "--n", "50", "--l", "2", "--tvec", "0.5"], capsys)
    assert code == 2 and "--tvec" in err


def test_unknown_subcommand(capsys):
    assert call(["nope"], capsys)[0] == 2
    assert call([], capsys)[0] == 2


def test_domain_error_exit_one(capsys, monkeypatch):
    def boom(*_):
        raise ValueError("table blew up")
    monkeypatch.setattr(cli.enumexact, "friable_probability", boom)
    code, _, err = call(["friable", "--m", "4", "--r", "2"], capsys)
    assert code == 1 and "table blew up" in err


def test_resource_error_exit_one(capsys):
    code, _, err = call(["simulate", "--n", "1000000", "--samples", "100000"], capsys)
    assert code == 1 and "cap" in err


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    code, _, err = call(["mean-curve", "--n", "20", "--samples", "5", "--out", str(target)], capsys)
    assert code == 1 and "cannot write" in err


def test_output_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = call(["mean-curve", "--n", "50", "--samples", "20", "--grid", "5",
                         "--format", "json", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert len(data["mean_curve"]) == 6


@pytest.mark.parametrize("cmdline,golden", DOC_EXAMPLES)
def test_documented_examples_match_golden(cmdline, golden):
    code, out, err = run(cmdline.split())
    assert code == 0, err
    assert out == (GOLDEN / golden).read_bytes()


def test_readme_lists_golden_examples():
    readme = (Path(__file__).parent.parent / "README.md").read_text()
    for cmdline, _ in DOC_EXAMPLES:
        assert f"permdiv {cmdline}" in readme


def test_simulate_twice_byte_identical():
    argv = "simulate --n 100 --samples 10 --theta 1 --seed 7".split()
    assert run(argv)[1] == run(argv)[1]


def test_worker_env_does_not_change_output():
    argv = "simulate --n 150 --samples 700 --seed 21 --a 0.1 --tvec 0.4".split()
    outs = {run(argv, {"PERMDIV_THREADS": str(k)})[1] for k in (1, 4)}
    assert len(outs) == 1


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("PERMDIV_THREADS", "-2")
    code, _, err = call(["mean-curve", "--n", "20", "--samples", "5"], capsys)
    assert code == 1 and "PERMDIV_THREADS" in err


def test_random_seed_recorded(capsys):
    code, out, _ = call(["mean-curve", "--n", "20", "--samples", "3", "--seed", "random"], capsys)
    assert code == 0
    seed_line = next(l for l in out.splitlines() if l.startswith("seed,"))
    assert int(seed_line.split(",")[1]) >= 0


def _sections(text):
    sections, current = {}, None
    for line in text.splitlines():
        if line.startswith("# "):
            current = line[2:]
            sections[current] = []
        else:
            sections[current].append(line)
    return sections


def test_csv_layout():
    rep = stats.run_ensemble(stats.EnsembleConfig(n=80, samples=7, grid=16))
    raw = cli.serialize_report(rep, "csv")
    assert b"\r" not in raw
    sec = _sections(raw.decode())
    assert sec["modulus_table"] == ["a,mean_q"]  # header only
    assert sec["mean_curve"][0] == "t,mean,std_error,limit"
    assert len(sec["mean_curve"]) - 1 == 17  # G + 1 rows
    meta = dict(line.split(",", 1) for line in sec["metadata"][1:])
    assert {"seed", "theta", "n", "samples", "version"} <= set(meta)
    value = sec["mean_curve"][3].split(",")[1]
    assert len(value.replace(".", "").lstrip("0")) <= 10


def test_json_round_trip_is_exact():
    cfg = stats.EnsembleConfig(n=90, samples=25, theta=0.6, grid=9, moments=((0.2, 0.5),),
                               windows=(0.3,), increment=(0.1, 0.9))
    rep = stats.run_ensemble(cfg)
    data = json.loads(cli.serialize_report(rep, "json"))
    assert [row["mean"] for row in data["mean_curve"]] == rep.mean_curve.tolist()
    assert [row["std_error"] for row in data["mean_curve"]] == rep.mean_curve_se.tolist()
    assert data["moment_estimates"][0]["estimate"] == rep.moment_estimates[0][2]
    assert data["modulus_table"][0]["mean_q"] == rep.modulus_table[0][1]
    assert {r["value"]: r["frequency"] for r in data["increment_histogram"]} == rep.increment_histogram
    assert data["oracle_distances"] == rep.oracle_distances
    assert data["metadata"]["seed"] == cfg.seed
