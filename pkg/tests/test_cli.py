import csv
import json

import numpy as np
import pytest

from chebfilter.cli import main

from conftest import write_dataset


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(*argv):
    return main([str(a) for a in argv])


def test_approx(tmp_path):
    assert run("approx", "--orders", "10,20", "--bases", "chebyshev,lagrange", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "errors.csv")
    err = {(r["basis"], int(r["K"])): float(r["max_error"]) for r in rows}
    assert err["chebyshev", 20] < err["chebyshev", 10]
    assert err["lagrange", 20] > err["lagrange", 10]
    assert {r["node_scheme"] for r in rows} == {"chebyshev", "equispaced"}
    assert (tmp_path / "manifest.json").exists()


def test_approx_constant_and_polynomial(tmp_path):
    for fn in ("const:2.5", "poly:1,0,-2,0.5"):
        out = tmp_path / fn.replace(":", "_")
        assert run("approx", "--fn", fn, "--orders", "3,6", "--bases",
                   "chebyshev,lagrange,monomial", "--out", out) == 0
        assert all(float(r["max_error"]) <= 1e-12 for r in read_csv(out / "errors.csv"))


def test_approx_unknown_function(tmp_path, capsys):
    assert run("approx", "--fn", "nope", "--out", tmp_path) == 1
    assert "nope" in capsys.readouterr().err


def test_csv_precision(tmp_path):
    run("approx", "--orders", "10", "--bases", "chebyshev", "--out", tmp_path)
    value = read_csv(tmp_path / "errors.csv")[0]["max_error"]
    assert len(value.replace(".", "").lstrip("0")) <= 12


def test_ring_demo(tmp_path):
    assert run("ring-demo", "--n", 12, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "ring_demo.csv")
    low = np.array([float(r["low_pass"]) for r in rows])
    high = np.array([float(r["high_pass"]) for r in rows])
    assert np.var(low) <= 1e-10
    assert np.all(np.sign(high) == np.where(np.arange(12) % 2 == 0, 1, -1))


def test_ring_demo_empty_band_warns(tmp_path, caplog):
    assert run("ring-demo", "--n", 3, "--out", tmp_path) == 0
    assert "no eigenvalue" in caplog.text


def test_recover_ring(tmp_path):
    assert run("recover", "--ring", 10, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "recovery.json").read_text())["max_roundtrip_error"] < 1e-6
    assert len(read_csv(tmp_path / "filter.csv")) == 10


def test_recover_orthogonal_signal_fails(tmp_path):
    sig = tmp_path / "x.txt"
    sig.write_text("1\n" * 6)  # constant signal is an eigenvector of the ring
    assert run("recover", "--ring", 6, "--signal", sig, "--out", tmp_path / "o") == 1


def test_stats_two_nodes(tmp_path, capsys):
    paths = write_dataset(tmp_path, [(0, 1)], [[1.0, 0.0, 2.0], [0.0, 1.0, 3.0]], [0, 1])
    assert run("stats", "--edges", paths[0], "--features", paths[1], "--labels", paths[2],
               "--out", tmp_path / "o") == 0
    stats = json.loads((tmp_path / "o" / "stats.json").read_text())
    assert stats == {"n": 2, "m": 1, "f": 3, "C": 2, "homophily": 0.0}
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {str(p) for p in paths}


def test_stats_label_mismatch(tmp_path):
    paths = write_dataset(tmp_path, [(0, 1)], [[1.0], [2.0]], [0])
    assert run("stats", "--edges", paths[0], "--features", paths[1], "--labels", paths[2],
               "--out", tmp_path / "o") == 2


def test_missing_feature_file(tmp_path, capsys):
    paths = write_dataset(tmp_path, [(0, 1)], [[1.0], [2.0]], [0, 1])
    missing = tmp_path / "absent.csv"
    code = run("train", "--edges", paths[0], "--features", missing, "--labels", paths[2],
               "--out", tmp_path / "o")
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_malformed_edge_file(tmp_path, capsys):
    paths = write_dataset(tmp_path, [(0, 1)], [[1.0], [2.0]], [0, 1])
    paths[0].write_text("0 1\n0 one\n")
    assert run("stats", "--edges", paths[0], "--features", paths[1], "--labels", paths[2],
               "--out", tmp_path / "o") == 2
    assert ":2" in capsys.readouterr().err


def test_train_outputs_and_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "chebnet2", "K": 4, "hidden": 16, "epochs": 40, "patience": 10}))
    args = ["train", "--synthetic", "heterophilic", "--n", 80, "--regime", "full", "--runs", 2,
            "--config", cfg]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    names = {p.name for p in (tmp_path / "a").iterdir()}
    assert {"manifest.json", "report.json", "checkpoint.json", "curve_run0.csv",
            "filter_run1.csv"} <= names
    for name in names - {"manifest.json"}:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1]
    assert manifest["config"]["K"] == 4


def test_replay_reproduces_outputs(tmp_path):
    assert run("ring-demo", "--n", 8, "--out", tmp_path / "a") == 0
    assert run("replay", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b") == 0
    a, b = (tmp_path / d / "ring_demo.csv" for d in "ab")
    assert a.read_bytes() == b.read_bytes()
    ma, mb = (json.loads((tmp_path / d / "manifest.json").read_text()) for d in "ab")
    for m in (ma, mb):
        m.pop("created"), m.pop("host"), m.pop("argv"), m["config"].pop("out", None)
    assert ma == mb


def test_threads_env_caps_jobs(monkeypatch):
    from chebfilter.cli import _jobs
    monkeypatch.setenv("CHEBFILTER_THREADS", "2")
    assert _jobs(8) == 2
    monkeypatch.delenv("CHEBFILTER_THREADS")
    assert _jobs(8) == 1
