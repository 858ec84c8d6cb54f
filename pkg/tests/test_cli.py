import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qbranch.cli import UNITS, parse_sweep, run

COMMANDS = {
    "step": ["--energy", "0.5", "--v0", "1.0"],
    "barrier": ["--energy", "0.5", "--v0", "1.0", "--width", "2.0"],
    "madelung": ["--energy", "0.5", "--v0", "1.0", "--width", "2.0"],
    "branches": ["--energy", "0.5", "--v0", "1.0", "--width", "2.0"],
    "coulomb-decay": ["--energy", "0.5", "--z1", "2"],
    "coulomb-fusion": ["--energy", "0.5", "--z1", "2", "--s-re", "0.3", "--s-im", "0.2", "--radius", "1.0"],
    "ks-hydrogen": [],
    "ks-inverted": [],
    "berry": ["--theta", "1.0", "--points", "200"],
    "josephson": [],
    "squid": ["--flux-sweep", "0:2:0.1"],
}


def _run(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _parse_csv(text):
    meta, lines = {}, []
    for ln in text.splitlines():
        if ln.startswith("# "):
            k, v = ln[2:].split(" = ", 1)
            meta[k] = v
        elif ln:
            lines.append(ln)
    cols = {}
    if lines:
        header = lines[0].split(",")
        rows = [ln.split(",") for ln in lines[1:]]
        cols = {h: [r[j] for r in rows] for j, h in enumerate(header)}
    return meta, cols


def _num(s):
    return float(s)


def _assert_same_column(name, jcol, ccols):
    if jcol and isinstance(jcol[0], dict):
        re = [_num(v) for v in ccols[f"{name}_re"]]
        im = [_num(v) for v in ccols[f"{name}_im"]]
        np.testing.assert_array_equal([z["re"] for z in jcol], re)
        np.testing.assert_array_equal([z["im"] for z in jcol], im)
        return
    csv = ccols[name]
    for jv, cv in zip(jcol, csv, strict=True):
        if isinstance(jv, bool):
            assert cv == ("1" if jv else "0")
        elif isinstance(jv, str):
            assert cv == jv
        elif jv is None:
            assert math.isnan(_num(cv))
        else:
            assert _num(cv) == jv


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_json_and_csv_carry_identical_numbers(capsys, command):
    code, jtext, _ = _run(capsys, [command, *COMMANDS[command], "--format", "json"])
    assert code == 0
    code, ctext, _ = _run(capsys, [command, *COMMANDS[command], "--format", "csv"])
    assert code == 0
    doc = json.loads(jtext)
    assert set(doc) == {"summary", "columns"}
    meta, cols = _parse_csv(ctext)
    assert set(meta) == set(doc["summary"])
    for name, jcol in doc["columns"].items():
        _assert_same_column(name, jcol, cols)
    for k, v in doc["summary"].items():
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            assert _num(meta[k]) == v


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_output_is_byte_identical(capsys, command):
    _, first, _ = _run(capsys, [command, *COMMANDS[command], "--format", "csv"])
    _, second, _ = _run(capsys, [command, *COMMANDS[command], "--format", "csv"])
    assert first == second


def test_barrier_reference_value(capsys):
    code, text, _ = _run(capsys, ["barrier", "--energy", "0.5", "--v0", "1.0", "--width", "2.0", "--format", "json"])
    assert code == 0
    assert json.loads(text)["summary"]["T"] == pytest.approx(0.070651, abs=5e-7)


def test_opaque_barrier_reports_log_transmission(capsys):
    code, text, _ = _run(capsys, ["barrier", "--energy", "0.5", "--v0", "1.0", "--width", "500"])
    assert code == 0
    summary = json.loads(text)["summary"]
    assert summary["log_T"] == pytest.approx(math.log(4.0) - 1000.0)


def test_squid_zeros_at_half_flux(capsys):
    code, text, _ = _run(capsys, ["squid", "--ic", "1.0", "--flux-sweep", "0:2:0.01", "--format", "csv"])
    assert code == 0
    _, cols = _parse_csv(text)
    frac = np.array([_num(v) for v in cols["flux_over_phi0"]])
    ic = np.array([_num(v) for v in cols["Ic_squid"]])
    assert frac.size == 201
    for half in (0.5, 1.5):
        i = int(np.argmin(np.abs(frac - half)))
        assert abs(frac[i] - half) < 1e-12 and ic[i] < 1e-12


def test_output_routing(tmp_path, capsys, monkeypatch):
    out = tmp_path / "b.csv"
    assert run(["berry", "--points", "100", "--format", "csv", "-o", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text().startswith("# ")
    monkeypatch.setenv("QBRANCH_OUTPUT_DIR", str(tmp_path / "env"))
    assert run(["squid", "--flux-sweep", "0:1:0.5"]) == 0
    assert json.loads((tmp_path / "env" / "squid.json").read_text())["columns"]["Ic_squid"][0] == 2.0


def test_berry_loop_file(tmp_path, capsys):
    n = 400
    phi = np.linspace(0.0, 2 * math.pi, n + 1)
    phi[-1] = 0.0
    path = tmp_path / "loop.json"
    path.write_text(json.dumps({"theta": [math.pi / 2] * (n + 1), "phi": phi.tolist()}))
    code, text, _ = _run(capsys, ["berry", "--loop-file", str(path)])
    assert code == 0
    gamma = json.loads(text)["summary"]["gamma"]
    assert abs(math.remainder(gamma + math.pi, 2 * math.pi)) < 1e-3


def test_exit_codes(capsys):
    assert run(["barrier", "--energy", "2.0", "--v0", "1.0", "--width", "1.0"]) == 1
    assert "OutOfRegimeError" in capsys.readouterr().err
    assert run(["barrier", "--energy", "0.5"]) == 2
    assert run(["nonsense"]) == 2
    assert run(["validate", "--tol", "no_such_check=1"]) == 2
    capsys.readouterr()


def test_validate_failure_exit_code(capsys):
    assert run(["validate", "--tol", "squid_brute_force=1e-300"]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["all_passed"] is False


def test_unit_presets(capsys):
    assert UNITS["mev_fm"].e2 == 1.44 and UNITS["mev_fm"].hbar == 197.327
    code, text, _ = _run(capsys, ["coulomb-decay", "--units", "mev_fm", "--energy", "5.0", "--z1", "2",
                                  "--z2", "82", "--mass", "3727.379"])
    assert code == 0
    summary = json.loads(text)["summary"]
    k = math.sqrt(2 * 3727.379 * 5.0) / 197.327
    eta = 2 * 82 * 1.44 * math.sqrt(3727.379 / 10.0) / 197.327
    assert summary["k"] == pytest.approx(k, rel=1e-12)
    assert summary["eta"] == pytest.approx(eta, rel=1e-12)


def test_parse_sweep():
    np.testing.assert_allclose(parse_sweep("0:2:0.5"), [0.0, 0.5, 1.0, 1.5, 2.0])
    assert parse_sweep("0:2:0.01").size == 201
    assert parse_sweep("1:1:0.1").tolist() == [1.0]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qbranch", "squid", "--flux-sweep", "0:1:0.5", "--format", "csv"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[-1].startswith("1,")
