from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays
from hypothesis import strategies as st

from incompat.cli import InputError, main, matrix_from_json, matrix_to_json, write_pair
from incompat.linalg import direct_sum
from incompat.povm import qubit_projector
from incompat.qubit import inoise_qubit

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(re=arrays(float, (3, 3), elements=finite), im=arrays(float, (3, 3), elements=finite))
def test_matrix_json_round_trip_is_exact(re, im):
    a = re + 1j * im
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(a))))
    assert np.array_equal(back.view(np.uint64), a.view(np.uint64))


def test_malformed_matrix():
    with pytest.raises(InputError):
        matrix_from_json({"dim": 2, "re": [[1, 0]]})
    with pytest.raises(InputError):
        matrix_from_json({"re": [[1]]})


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_qubit_pair(tmp_path, capsys):
    path = tmp_path / "pair.json"
    write_pair(path, qubit_projector(0.0), qubit_projector(math.pi / 2))
    code, out, _ = run(capsys, "compute", str(path), "--seed", "7")
    rep = json.loads(out)
    assert code == 0 and rep["schema"] == 1
    assert rep["I_a"] == pytest.approx(math.sqrt(2) - 1, abs=1e-6)
    assert rep["I_noise"] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-6)
    assert rep["status"] == "optimal"
    assert rep["I_steer"] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-5)


def test_compute_commuting_and_direct_sum(tmp_path, capsys):
    path = tmp_path / "c.json"
    write_pair(path, np.diag([1.0, 0.0]), np.diag([1.0, 1.0]))
    code, out, _ = run(capsys, "compute", str(path), "--seed", "1")
    rep = json.loads(out)
    assert code == 0 and rep["I_a"] == 0 and rep["I_noise"] == 0 and rep["I_steer"] == 0
    path = tmp_path / "d4.json"
    m = direct_sum(qubit_projector(0), qubit_projector(0))
    n = direct_sum(qubit_projector(0.6), qubit_projector(1.2))
    write_pair(path, m, n)
    code, out, _ = run(capsys, "compute", str(path), "--seed", "1", "--bias", "0.4")
    rep = json.loads(out)
    assert code == 0
    assert rep["I_noise"] == pytest.approx(max(inoise_qubit(0.6, 0.4), inoise_qubit(1.2, 0.4)), abs=1e-6)


def test_compute_requires_seed(tmp_path, capsys):
    path = tmp_path / "pair.json"
    write_pair(path, qubit_projector(0.0), qubit_projector(1.0))
    code, _, err = run(capsys, "compute", str(path))
    assert code == 2 and "--seed" in err


def test_bad_inputs_exit_2(tmp_path, capsys):
    assert run(capsys, "compute", str(tmp_path / "missing.json"), "--seed", "1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"M": matrix_to_json(np.eye(2) * 2), "N": matrix_to_json(np.eye(2))}))
    assert run(capsys, "compute", str(bad), "--seed", "1")[0] == 2
    assert run(capsys, "scan", "--thetas", "4.0", "--bs", "0")[0] == 2
    with pytest.raises(SystemExit):
        main(["scan", "--tol", "0.5"])


def test_scan_csv(capsys):
    code, out, _ = run(capsys, "scan", "--thetas", "0.5", "1.5707963267948966", "--bs", "-1", "0", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert float(rows[3]["I_noise"]) == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-9)
    assert rows[3]["attains_max"] == "True"


def test_scan_workers_match_serial(capsys):
    args = ["scan", "--theta-range", "0.1", "3.0", "5", "--b-range", "-1", "1", "5"]
    _, serial, _ = run(capsys, *args)
    _, parallel, _ = run(capsys, *args, "--workers", "2")
    assert serial == parallel


def test_circuit_and_out_file(tmp_path, capsys):
    out = tmp_path / "c.json"
    code, stdout, _ = run(capsys, "circuit", "--n", "2", "--thetas", "1.5707963267948966", "0.7853981633974483",
                          "--bs", "0", "0.5", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == 0 and stdout == ""
    assert all(rep["checks"].values())
    assert rep["angles"] == pytest.approx(sorted([math.pi / 2, math.pi / 4]))


def test_game_scenarios(capsys):
    code, out, _ = run(capsys, "game", "unknown-bias", "--lam", "0.31010205144336445")
    rep = json.loads(out)
    assert code == 0 and rep["p_qp_win"] == pytest.approx(0.5, abs=1e-6)
    code, out, _ = run(capsys, "game", "unknown-both")
    assert code == 0 and json.loads(out)["p_qp_win"] == pytest.approx(0.6506451423, abs=1e-8)
    assert run(capsys, "game", "unknown-bias")[0] == 2
    for sc in ("controlled-bias", "known-bias", "qp-bias"):
        assert run(capsys, "game", sc)[0] == 0


def test_qpdemo(capsys):
    code, out, _ = run(capsys, "qpdemo", "--sizes", "16", "32", "--eig", "lapack")
    rep = json.loads(out)
    assert code == 0 and rep["rows"][1]["deficit"] <= rep["rows"][0]["deficit"]
