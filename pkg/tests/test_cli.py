"""Command line tests.

Golden outputs live in ``tests/golden``; ``python3 tests/test_cli.py``
rewrites them from the current code.
"""

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from psl2trop import certifier, surfaces, valuation
from psl2trop.cli import dumps, load_family, main, run
from psl2trop.mat2 import puiseux_mat_from_json

GOLDEN = Path(__file__).parent / "golden"
DIAG = '{"entries": [["t", "0"], ["0", "t^(-1)"]]}'
P1 = '{"entries": [["t", "1"], ["0", "0"]]}'
P2 = '{"entries": [["0", "0"], ["1", "0"]]}'
MID_E11 = '{"height": 1.5, "layer": "mid", "rep": [[1, 0], [0, 0], [0, 0], [0, 0]]}'

BUNDLED = {
    "val_point_diag": ["val", "point", "-m", DIAG],
    "val_line_secant": ["val", "line", "--p1", P1, "--p2", P2, "--contains", MID_E11],
    "verify_scaling_diag": ["verify", "scaling", "-m", DIAG],
    "surface_strata_d4": ["surface", "strata", "--family", "d4"],
    "surface_check_d5": ["surface", "check", "--family", "d5", "--point", MID_E11],
    "surface_sample_d3": ["surface", "sample", "--family", "d3", "--count", "12", "--seed", "7"],
    "lines_certify_d4": ["lines", "certify", "--family", "d4"],
    "lines_certify_d5": ["lines", "certify", "--family", "d5"],
    "export_cloud_d2": ["export", "cloud", "--family", "d2", "--count", "12", "--seed", "3"],
}
PARALLEL = ("surface_sample_d3", "export_cloud_d2")


def output(argv):
    code, text, _ = run(argv)
    return code, text


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("PSL2TROP_SEED", raising=False)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_golden_files(name):
    code, text = output(BUNDLED[name])
    assert code == 0
    assert text == (GOLDEN / f"{name}.out").read_text()
    assert output(BUNDLED[name])[1] == text


@pytest.mark.parametrize("name", PARALLEL)
def test_worker_count_does_not_change_output(name):
    serial = output(BUNDLED[name] + ["--workers", "1"])[1]
    parallel = output(BUNDLED[name] + ["--workers", "4"])[1]
    assert serial == parallel == (GOLDEN / f"{name}.out").read_text()


def test_cli_matches_library_calls():
    A = puiseux_mat_from_json(json.loads(DIAG))
    assert output(BUNDLED["val_point_diag"])[1] == dumps(valuation.val_point(A).to_json())
    S = load_family("d4")
    assert output(BUNDLED["surface_strata_d4"])[1] == dumps(surfaces.strata_describe(S).to_json())
    cert = certifier.certify_no_lines(S, surfaces.line_rng(0, 0))
    assert output(BUNDLED["lines_certify_d4"])[1] == dumps(cert.to_json())
    S3 = load_family("d3")
    samples, skipped = surfaces.sample_points_seeded(S3, 12, 7)
    data = json.loads(output(BUNDLED["surface_sample_d3"])[1])
    assert data["skipped"] == skipped and data["count"] == len(samples)
    for row, smp in zip(data["samples"], samples):
        assert row["val"] == json.loads(json.dumps(smp.val.to_json()))


def test_val_point_example():
    data = json.loads(output(BUNDLED["val_point_diag"])[1])
    assert data["height"] == 1 and data["layer"] == "mid"


def test_verify_scaling_example():
    data = json.loads(output(BUNDLED["verify_scaling_diag"])[1])
    dists = [row["distance"] for row in data["grid"]]
    # the diagonal matrix already sits at its limit, so the distances are all zero
    assert data["nonincreasing"] and max(dists) <= 1e-12
    assert [round(row["log_t"]) for row in data["grid"]] == [10, 20, 30]
    m = '{"entries": [["t + 1", "1"], ["0", "t^(-1)"]]}'
    dists = [row["distance"] for row in json.loads(output(["verify", "scaling", "-m", m])[1])["grid"]]
    assert dists[0] > dists[1] > dists[2]


def test_certify_writes_file(tmp_path, capsys):
    out = tmp_path / "cert.json"
    assert main(["lines", "certify", "--family", "d4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["valid"] is True
    assert capsys.readouterr().out == ""


def test_certify_refuses_degenerate_family(tmp_path, capsys):
    S = certifier.with_ruling_component(load_family("d4"), np.random.default_rng(0))
    path = tmp_path / "ruled.json"
    path.write_text(json.dumps(S.to_json()))
    assert main(["lines", "certify", "--family", str(path)]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["valid"] is False and data["genericity"]["curves_contain_no_ruling"][-1] is False


def test_export_cloud_header():
    text = output(BUNDLED["export_cloud_d2"])[1]
    rows = text.splitlines()
    assert rows[0] == "height,layer,re11,im11,re12,im12,re21,im21,re22,im22"
    assert len(rows) == 13 and all(len(r.split(",")) == 10 for r in rows[1:])


@pytest.mark.parametrize("argv", [
    ["val", "point", "-m", "{not json"],
    ["val", "point", "-m", '{"entries": [["t +", "0"], ["0", "1"]]}'],
    ["surface", "strata", "--family", "no-such-family"],
    ["lines", "certify", "--family", "d4", "--degree", "5"],
    ["val", "point", "-m", DIAG, "--depth", "1"],
    ["val", "point", "-m", DIAG, "--t-grid", "2"],
    ["val", "bogus"],
])
def test_malformed_input_exits_2(argv, capsys):
    assert main(argv) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "malformed_input" and err["message"]


def test_precision_failure_exits_3(capsys):
    m = '{"entries": [["O(t)", "0"], ["0", "O(t)"]]}'
    assert main(["val", "point", "-m", m]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "precision_insufficient"


def test_env_seed_is_a_fallback(monkeypatch):
    argv = ["surface", "sample", "--family", "d3", "--count", "4"]
    monkeypatch.setenv("PSL2TROP_SEED", "7")
    from_env = output(argv)[1]
    assert from_env == output(argv + ["--seed", "7"])[1]
    assert from_env != output(argv + ["--seed", "8"])[1]
    monkeypatch.setenv("PSL2TROP_SEED", "x")
    assert main(argv) == 2


def test_flags_work_before_the_subcommand():
    assert output(["--depth", "6", "val", "point", "-m", DIAG]) == \
        output(["val", "point", "-m", DIAG, "--depth", "6"])


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psl2trop.cli", "val", "point", "-m", DIAG],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "val_point_diag.out").read_text()


def test_infinite_height_serialises_as_string():
    text = output(["val", "point", "-m", '{"entries": [["t", "0"], ["0", "0"]]}'])[1]
    assert json.loads(text)["height"] == "inf"
    assert math.isinf(valuation.ConePoint.from_json(json.loads(text)).height)


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for name, argv in BUNDLED.items():
        code, text, _ = run(argv)
        (GOLDEN / f"{name}.out").write_text(text)
        print(name, code, len(text))
