import json

import numpy as np
import pytest

from threshcsp import io
from threshcsp.cli import main
from threshcsp.instances import generate


@pytest.fixture
def k33_graph(tmp_path):
    path = tmp_path / "k33.txt"
    io.save_graph(str(path), 6, [(u, v) for u in range(3) for v in range(3, 6)])
    return str(path)


@pytest.fixture
def c3_graph(tmp_path):
    path = tmp_path / "c3.txt"
    io.save_graph(str(path), 3, [(0, 1), (1, 2), (0, 2)])
    return str(path)


def test_gen_roundtrip_byte_stable(tmp_path, capsys):
    out = tmp_path / "inst.json"
    code = main(["gen", "--kind", "planted-assignment", "--n", "8", "--q", "2",
                 "--m", "14", "--seed", "7", "--out", str(out)])
    assert code == 0
    first = out.read_bytes()
    inst = io.load_instance(str(out))
    io.save_instance(str(out), inst)
    assert out.read_bytes() == first
    assert first.endswith(b"\n") and b"\r" not in first


def test_gen_matches_library(tmp_path):
    out = tmp_path / "inst.json"
    main(["gen", "--kind", "random-csp", "--n", "6", "--q", "3", "--m", "8",
          "--seed", "5", "--out", str(out)])
    assert io.load_instance(str(out)) == generate("random-csp", {"n": 6, "q": 3, "m": 8}, 5).instance


def test_solve_writes_report_and_summary(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    main(["gen", "--kind", "planted-assignment", "--n", "7", "--q", "2", "--m", "12",
          "--seed", "3", "--out", str(inst_path)])
    capsys.readouterr()
    report_path = tmp_path / "report.json"
    code = main(["solve", "--instance", str(inst_path), "--eps", "0.2", "--seed", "1",
                 "--oracle", "--out", str(report_path)])
    assert code == 0
    line = capsys.readouterr().out.strip().splitlines()[0]
    assert line.startswith("best=") and "OPT=" in line and "|S|=" in line and "k=" in line
    data = json.loads(report_path.read_text())
    assert data["opt"] == 12
    assert data["best_objective"] >= data["opt"] - 5 * 0.2 * 2 * 12
    assert "timings" not in data


def test_solve_malformed_json_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--instance", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_solve_invalid_instance_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 3, "q": 2, "edges": [{"u": 1, "v": 1, "allowed": [[0, 1]]}]}')
    assert main(["solve", "--instance", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "self-loop" in err


def test_net_cap_refusal_exit_2(k33_graph, capsys):
    # tiny eps at k=1 still fits; force refusal with an artificially low cap
    code = main(["maxcut", "--graph", k33_graph, "--eps", "0.001", "--net-cap", "10"])
    assert code == 2
    assert "cap" in capsys.readouterr().err


def test_maxcut_k33_oracle(k33_graph, tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = main(["maxcut", "--graph", k33_graph, "--eps", "0.1", "--seed", "2",
                 "--oracle", "--out", str(out)])
    assert code == 0
    line = capsys.readouterr().out.strip().splitlines()[0]
    assert "best=9" in line and "OPT=9" in line


def test_rank_c3(c3_graph, tmp_path, capsys):
    out = tmp_path / "rank.json"
    code = main(["rank", "--graph", c3_graph, "--tau", "0.4", "--side", "neg",
                 "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "2"
    data = json.loads(out.read_text())
    assert data["neg"] == 2 and data["pos"] == 1
    assert np.isclose(data["spectrum_extremes"][0], 1.0)
    assert np.isclose(data["spectrum_extremes"][1], -0.5)


def test_verify_rank_bound_cli(capsys):
    code = main(["verify-rank-bound", "--trials", "20", "--seed", "1", "--dim-max", "15"])
    assert code == 0
    assert capsys.readouterr().out.strip() == "violations: 0"


def test_certify_cli(capsys):
    code = main(["certify", "--trials", "5", "--seed", "3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "failures: 0" in out
    assert out.count("pass") >= 4


def test_quadratic_cli(tmp_path, capsys):
    n = 4
    A = (np.ones((n, n)) - np.eye(n)) / (n - 1)
    mat = tmp_path / "a.txt"
    io.save_matrix(str(mat), A)
    code = main(["quadratic", "--matrix", str(mat), "--eps", "0.1", "--seed", "0", "--oracle"])
    assert code == 0
    assert "OPT=4" in capsys.readouterr().out


def test_byte_identical_reports_across_workers(tmp_path):
    inst_path = tmp_path / "inst.json"
    main(["gen", "--kind", "planted-assignment", "--n", "8", "--q", "2", "--m", "14",
          "--seed", "1", "--out", str(inst_path)])
    out1 = tmp_path / "w1.json"
    out4 = tmp_path / "w4.json"
    assert main(["solve", "--instance", str(inst_path), "--eps", "0.2", "--seed", "11",
                 "--workers", "1", "--out", str(out1)]) == 0
    assert main(["solve", "--instance", str(inst_path), "--eps", "0.2", "--seed", "11",
                 "--workers", "4", "--out", str(out4)]) == 0
    assert out1.read_bytes() == out4.read_bytes()


def test_graph_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2\n0 1\n")
    assert main(["maxcut", "--graph", str(bad)]) == 1
    bad.write_text("3 1\n0 5\n")
    assert main(["maxcut", "--graph", str(bad)]) == 1
