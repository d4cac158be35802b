import csv
import json

import pytest

from graphcover.cli import run


def read(path):
    with open(path) as fh:
        return fh.read()


def test_enumerate_census(tmp_path):
    assert run(["enumerate", "all:4", "--out", str(tmp_path / "a")]) == 0
    census = json.loads(read(tmp_path / "a" / "census.json"))
    assert census["count"] == 11 and census["m"] == 11
    # The written files ingest back as a TU dataset of the same size.
    assert run(["ingest-check", str(tmp_path / "a"), "--name", "all_4"]) == 0
    assert run(["enumerate", "otter:9", "--out", str(tmp_path / "o")]) == 0
    assert json.loads(read(tmp_path / "o" / "census.json"))["w_j"] == 3
    assert run(["enumerate", "partition-paths:4", "--out", str(tmp_path / "p")]) == 0
    pp = json.loads(read(tmp_path / "p" / "census.json"))
    assert pp["partitions"] == 5 and pp["groups"] == 5


def test_cover_outputs_and_determinism(tmp_path):
    args = ["cover", "all:5", "--metric", "fd", "--depth", "2", "--radii", "0,1,2,100"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("cover.csv", "distances.csv", "covers.json"):
        assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)
    rows = list(csv.DictReader(open(tmp_path / "a" / "cover.csv")))
    assert [r["epsilon"] for r in rows] == ["0.0", "1.0", "2.0", "100.0"]
    greedy = [int(r["N_greedy"]) for r in rows]
    assert greedy[0] == int(rows[0]["m"]) and greedy[-1] == 1
    assert all(a >= b for a, b in zip(greedy, greedy[1:]))
    assert run(args + ["--format", "json", "--out", str(tmp_path / "j")]) == 0
    curve = json.loads(read(tmp_path / "j" / "cover.json"))["curve"]
    assert [r["N_greedy"] for r in curve] == greedy


def test_cover_on_dataset_directory(tmp_path, mutag_dir):
    assert run(["ingest-check", mutag_dir]) == 0
    assert run(["cover", mutag_dir, "--metric", "wl", "--radii", "0,1", "--out", str(tmp_path / "w")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "w" / "cover.csv")))
    assert rows[-1]["N_greedy"] == "1" and rows[0]["N_exact"] == ""


def test_correlate(tmp_path):
    out = tmp_path / "c"
    assert run(["correlate", "all:4", "--depths", "1,2", "--kinds", "sum,mean", "--models", "2", "--width", "4",
                "--pairs", "20", "--out", str(out)]) == 0
    summary = json.loads(read(out / "correlations.json"))
    assert len(summary["results"]) == 8
    assert (out / "scatter_L2_mean_1.csv").exists() and (out / "model_L1_sum_0.json").exists()


def test_bound_command(tmp_path):
    coef = tmp_path / "mutag.json"
    coef.write_text(json.dumps({"L_loss": 1.0, "L_fnn": 1.0, "C_fd": 0.377, "n": 28, "M": 5.890,
                                "sample_size": 150, "covering": 139, "epsilon": 0.0}))
    assert run(["bound", "fd", "--coefficients", str(coef), "--target", "0.946", "--out", str(tmp_path / "b")]) == 0
    result = json.loads(read(tmp_path / "b" / "bound.json"))
    assert result["report"]["value"] > 0 and result["delta_scan"]["matched"] is False
    tree = tmp_path / "tree.json"
    tree.write_text(json.dumps({"L_loss": 1.0, "L_fnn": 1.0, "C_fd": 0.377, "n": 28, "M": 5.890,
                                "sample_size": 150, "m": 139, "k": 0, "b": 24.0}))
    assert run(["bound", "fd", "--coefficients", str(tree), "--k-max", "6", "--out", str(tmp_path / "k")]) == 0
    assert read(tmp_path / "k" / "k_scan.csv").count("\n") == 8
    reg = tmp_path / "reg.json"
    reg.write_text(json.dumps({"m": 11, "sample_size": 100, "epsilon": 0.5}))
    assert run(["bound", "wl-regression", "--coefficients", str(reg), "--epsilon-scan", "--out", str(tmp_path / "r")]) == 0
    assert 0 < json.loads(read(tmp_path / "r" / "bound.json"))["epsilon_best"]["epsilon"] < 1
    gamma = tmp_path / "gamma.json"
    gamma.write_text(json.dumps({"variant": "up-to-n", "gamma_inverse": {"x": [0, 10], "y": [0, 1]}, "n": 4, "M": 1.0,
                                 "L_loss": 1.0, "L_fnn": 1.0, "sample_size": 100, "k": 1, "m": 18,
                                 "per_order": {"3": 40, "4": 60}}))
    assert run(["bound", "tree-distance", "--coefficients", str(gamma), "--out", str(tmp_path / "t")]) == 0


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"K": 3}', '{"K": 0, "epsilon": 0, "M": 1, "sample_size": 10}'])
def test_bad_coefficients_exit_config(tmp_path, content):
    coef = tmp_path / "bad.json"
    coef.write_text(content)
    assert run(["bound", "xu-mannor", "--coefficients", str(coef), "--out", str(tmp_path / "o")]) == 2


def test_exit_codes(tmp_path, capsys):
    assert run(["cover", "all:3", "--radii", "x", "--out", str(tmp_path)]) == 2
    assert run(["cover", "all:3", "--metric", "cut", "--radii", "0", "--out", str(tmp_path)]) == 2
    assert run(["enumerate", "all:9", "--out", str(tmp_path)]) == 4
    assert run(["cover", "all:7", "--metric", "tmd", "--depth", "6", "--vertex-cap", "1000", "--radii", "0", "--out", str(tmp_path)]) == 4
    assert run(["cover", "all:5", "--metric", "delta-ds1", "--lp-max-order", "4", "--radii", "0",
                "--out", str(tmp_path)]) == 4
    assert run(["ingest-check", str(tmp_path / "missing")]) == 3
    (tmp_path / "broken").mkdir()
    (tmp_path / "broken" / "broken_A.txt").write_text("1, 2\nx\n")
    (tmp_path / "broken" / "broken_graph_indicator.txt").write_text("1\n1\n")
    (tmp_path / "broken" / "broken_graph_labels.txt").write_text("1\n")
    assert run(["ingest-check", str(tmp_path / "broken")]) == 3
    assert run(["cover", "all:3", "--radii", "0", "--exact-limit", "1", "--out", str(tmp_path / "ok")]) == 0
