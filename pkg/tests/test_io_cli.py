import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from metricreg.cli import main
from metricreg.harness.compare import SUMMARY_COLUMNS, compare_modes, oracle_metric
from metricreg.harness.generators import GeneratorSpec, generate
from metricreg.harness.io import read_dataset, read_json, write_dataset, write_json
from metricreg.linalg import matrix_to_json


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_dataset_roundtrip(tmp_path):
    data, _ = generate(GeneratorSpec(dim=4, seed=1), 50)
    write_dataset(tmp_path / "d.csv", data)
    back = read_dataset(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.y, data.y)


def test_json_nan_and_numpy(tmp_path):
    write_json(tmp_path / "a.json", {"a": np.float64("nan"), "b": np.arange(3), "c": np.bool_(1)})
    assert read_json(tmp_path / "a.json") == {"a": None, "b": [0, 1, 2], "c": True}


def test_oracle_metric():
    m = oracle_metric(np.diag([0.5, 0.0]), floor=1e-3)
    np.testing.assert_allclose(m.eigenvalues, [1.0, 1e-3 / 1.001])
    np.testing.assert_array_equal(oracle_metric(np.zeros((2, 2))).matrix, np.eye(2))


def test_compare_constant_generator(tmp_path):
    spec = GeneratorSpec(kind="constant", dim=2, noise_sd=0.0, constant=0.75)
    rws, summary = compare_modes(spec, 200, [0, 1], out_dir=tmp_path)
    assert {r["mode"] for r in rws} == {"identity", "oracle", "learned"}
    for r in rws:
        # only the opening 1/2 guess of each (re)started regressor costs anything
        restarts = 7 if r["mode"] == "learned" else 1
        assert r["final_regret"] == pytest.approx(0.0625 * restarts, abs=1e-12)
    assert list(rows(tmp_path / "summary.csv")[0]) == SUMMARY_COLUMNS
    assert read_json(tmp_path / "summary.json")["config"]["rounds"] == 200


def test_gen_data_and_run_fixed(tmp_path):
    d = tmp_path / "d.csv"
    assert main(["gen-data", "--rounds", "120", "--seed", "3", "--dim", "2", "--out", str(d),
                 "--oracle", str(tmp_path / "o.json")]) == 0
    assert len(rows(d)) == 120 and list(rows(d)[0]) == ["x_1", "x_2", "y"]
    G = read_json(tmp_path / "o.json")["G"]
    write_json(tmp_path / "m.json", matrix_to_json(np.array(G["rows"]) + 0.01 * np.eye(2)))
    for metric in ("identity", str(tmp_path / "m.json")):
        out = tmp_path / "f.csv"
        assert main(["run-fixed", "--data", str(d), "--metric", metric, "--out", str(out),
                     "--diag", str(tmp_path / "fd.json")]) == 0
        r = rows(out)
        assert len(r) == 120 and r[0]["prediction"] == "0.5"
        assert read_json(tmp_path / "fd.json")["packing"]["passed"]


def test_run_learned_and_estimate(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["run-learned", "--rounds", "100", "--alpha", "1.0", "--out", str(out),
                 "--diag", str(tmp_path / "ld.json")]) == 0
    r = rows(out)
    assert [int(x["t"]) for x in r] == list(range(1, 101))
    assert r[2]["phase"] == "2" and r[6]["phase"] == "3"
    diag = read_json(tmp_path / "ld.json")["phases"]
    assert [p["end"] for p in diag] == [2, 6, 14, 30, 62, 100]
    d = tmp_path / "d.csv"
    main(["gen-data", "--rounds", "300", "--out", str(d)])
    assert main(["estimate-gop", "--data", str(d), "--out", str(tmp_path / "g.json"),
                 "--diag", str(tmp_path / "gd.json")]) == 0
    assert read_json(tmp_path / "g.json")["dim"] == 3
    assert set(read_json(tmp_path / "gd.json")) == {"n", "eps_n", "tau_n", "mask_rate"}


@pytest.mark.parametrize("lemma", [1, 2, 3, 5])
def test_validate_exit_code(lemma, capsys):
    assert main(["validate", "--lemma", str(lemma), "--trials", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_compare_cli_is_deterministic(tmp_path):
    args = ["compare", "--rounds", "300", "--seeds", "0-1", "--traces"]
    for k in (1, 2):
        main(args + ["--out-dir", str(tmp_path / f"r{k}")])
    for name in ("summary.csv", "summary.json", "trace.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "metricreg", "validate", "--lemma", "5",
                          "--trials", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and '"passed": true' in res.stdout
