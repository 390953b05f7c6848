import csv
import json
import math

import pytest

from speckleq import verify
from speckleq.cli import main
from speckleq.config import ConfigError, build_config, format_mode_state, parse_mode_state
from speckleq.states import Coherent, Fock, SqueezedVacuum, Thermal, Vacuum, normal_moment


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.mark.parametrize("token, state", [
    ("fock:3", Fock(3)), ("sqz:0.15:0", SqueezedVacuum(0.15, 0)), ("sqz:0.15:pi", SqueezedVacuum(0.15, math.pi)),
    ("coh:0.3:-0.4", Coherent(0.3 - 0.4j)), ("thermal:1.5", Thermal(1.5)), ("vac", Vacuum()),
])
def test_state_tokens_round_trip(token, state):
    assert parse_mode_state(token) == state
    assert parse_mode_state(format_mode_state(state)) == state


@pytest.mark.parametrize("token", ["fock", "fock:-1", "sqz:0.1", "laser:1", "coh:1:x", "vac:0"])
def test_bad_state_tokens(token):
    with pytest.raises(ValueError):
        parse_mode_state(token)


def test_fig3a_preset(tmp_path):
    assert main(["speckle", "--preset", "fig3a", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "speckle_photon_correlation.csv")
    assert len(rows) == 100
    vals = [float(r["value"]) for r in rows]
    finite = [v for v in vals if not math.isnan(v)]
    assert len(finite) == 99
    assert all(-1 - 1e-12 <= v <= 1e-12 for v in finite)
    doc = json.loads((tmp_path / "speckle_photon_correlation.json").read_text())
    assert doc["provenance"]["seed"] == doc["metadata"]["seed"]
    assert doc["provenance"]["config"]["preset"] == "fig3a"


def test_fig3b_reports_entangled_cells(tmp_path):
    assert main(["speckle", "--preset", "fig3b", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "speckle_log10_qvp.json").read_text())
    rows = read_csv(tmp_path / "speckle_log10_qvp.csv")
    neg = sum(float(r["value"]) < 0 for r in rows)
    assert doc["negative_cells"] == neg
    assert neg > 0


def test_fock_two_speckle_from_config(tmp_path):
    cfg = write(tmp_path, "command: speckle\ngrid: [5, 4]\nN: 30\ntau: 1/300\ninputs: {7: 'fock:2'}\n"
                          "kinds: [photon_correlation, log10_qvp]\nseed: 17\n")
    assert main(["speckle", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    vals = [float(r["value"]) for r in read_csv(tmp_path / "o" / "speckle_photon_correlation.csv")]
    assert sum(math.isnan(v) for v in vals) == 1
    assert all(abs(v + 0.5) < 1e-12 for v in vals if not math.isnan(v))
    assert (tmp_path / "o" / "speckle_log10_qvp.csv").exists()


def test_fig4_sweep(tmp_path):
    assert main(["sweep", "--preset", "fig4", "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "sweep.json").read_text())
    files = {tuple(s["input"]["ports"].values()): s["file"] for s in meta["input_sets"]}
    fock2 = read_csv(tmp_path / files[("fock:2",)])
    fock3 = read_csv(tmp_path / files[("fock:3",)])
    singles3 = read_csv(tmp_path / files[("fock:1",) * 3])
    sqz = read_csv(tmp_path / files[tuple(sorted(files, key=lambda k: k[0].startswith("sqz"))[-1])])
    assert list(fock2[0]) == ["s", "C1", "C2", "g", "tau", "cbar", "log10_qvp_bar"]
    assert float(fock2[0]["s"]) == 2 and float(fock2[-1]["s"]) == 100
    assert all(abs(float(r["cbar"]) + 0.5) < 1e-12 for r in fock2)
    assert all(abs(float(r["cbar"]) + 1 / 3) < 1e-12 for r in fock3)
    assert float(singles3[-1]["cbar"]) > float(singles3[0]["cbar"])
    assert all(float(r["log10_qvp_bar"]) >= 0 for r in sqz)
    names = {a["preset"]: a for a in meta["annotations"]}
    assert set(names) == {"peeters", "smolka", "phcw"}
    assert names["peeters"]["row_s"] == 2.0
    assert names["smolka"]["row_s"] == 22.0
    assert names["phcw"]["row_s"] == 5.0 and names["phcw"]["native_N"] == 5


def test_sweep_with_tabulated_model(tmp_path):
    table = tmp_path / "model.csv"
    table.write_text("s,C1,C2,g\n1,1,0,20\n10,1,0.5,2\n")
    cfg = write(tmp_path, "command: sweep\nN: 20\nsweep: {s_min: 0, s_max: 10, points: 11}\n"
                          "input_sets: [[fock:1, fock:1]]\n")
    assert main(["sweep", "--config", cfg, "--model", str(table), "--out", str(tmp_path / "o")]) == 0
    meta = json.loads((tmp_path / "o" / "sweep.json").read_text())
    assert [e["s"] for e in meta["errors"]] == [0.0]
    rows = read_csv(tmp_path / "o" / meta["input_sets"][0]["file"])
    assert len(rows) == 10
    assert float(rows[-1]["C2"]) == 0.5


def test_sweep_entirely_outside_table(tmp_path):
    table = tmp_path / "model.csv"
    table.write_text("s,C1,C2,g\n1,1,0,20\n10,1,0.5,2\n")
    cfg = write(tmp_path, "command: sweep\nN: 20\ns_values: [20, 30]\ninput_sets: [[fock:2]]\n")
    assert main(["sweep", "--config", cfg, "--model", str(table), "--out", str(tmp_path / "o")]) == 2


def test_mc_reproducible(tmp_path):
    args = ["mc", "--preset", "mc11", "--realizations", "10000", "--seed", "8"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "3"]) == 0
    a = (tmp_path / "a" / "mc.json").read_bytes()
    assert a == (tmp_path / "b" / "mc.json").read_bytes()
    doc = json.loads(a)
    assert {"mean", "stderr", "n", "degenerate", "seed"} <= set(doc)
    assert doc["seed"] == 8 and doc["n"] == 10000


def test_mc_fock_two(tmp_path):
    cfg = write(tmp_path, "command: mc\ninputs: [fock:2]\ntau: 0.01\nrealizations: 500\nseed: 3\n")
    assert main(["mc", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "mc.json").read_text())
    assert doc["mean"] == pytest.approx(-0.5, abs=1e-12)
    assert doc["stderr"] < 1e-12


def test_mc_squeezed_z_score(tmp_path):
    assert main(["mc", "--preset", "mcsqz", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "mc.json").read_text())
    assert doc["statistic"] == "qvp"
    assert abs(doc["z_score"]) <= 5


def test_mc_degenerate_exit_code(tmp_path):
    cfg = write(tmp_path, "command: mc\ninputs: [fock:1, fock:1]\ntau: 1e-320\nrealizations: 10\n")
    assert main(["mc", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_verify_passes(capsys):
    assert main(["verify", "--realizations", "5000"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 8


def test_verify_negative_control(monkeypatch, capsys):
    def corrupted(state, p, q):
        value = normal_moment(state, p, q)
        return value * 1.001 if (p, q) == (2, 2) else value

    monkeypatch.setattr(verify, "normal_moment", corrupted)
    assert main(["verify", "--realizations", "2000"]) == 4
    captured = capsys.readouterr()
    assert "states vs fockoracle" in captured.err


@pytest.mark.parametrize("text, line, needle", [
    ("command: speckle\ntau: 0.1\nbogus: 1\n", 3, "bogus"),
    ("command: speckle\ngrid: [10, 10]\ntau: -1\ninputs: [fock:1]\n", 3, "tau"),
    ("command: speckle\ntau: 0.1\ninputs: [fock:1, 'laser:2']\n", 3, "laser"),
    ("command: mc\ntau: 0.1\ninputs: [fock:1]\nrealizations: 1\n", 4, "realizations"),
    ("command: sweep\nN: 10\nsweep: {s_min: 5, s_max: 1, points: 3}\n", 3, "sweep"),
])
def test_config_errors_are_line_precise(tmp_path, capsys, text, line, needle):
    cfg = write(tmp_path, text)
    assert main([text.split()[1], "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:{line}:" in err and needle in err


def test_invalid_yaml(tmp_path, capsys):
    cfg = write(tmp_path, "command: speckle\ninputs: [fock:1\n")
    assert main(["speckle", "--config", cfg]) == 2
    assert "invalid YAML" in capsys.readouterr().err


def test_missing_required_settings(capsys):
    assert main(["speckle"]) == 2
    assert "tau" in capsys.readouterr().err


def test_layering_flags_win(tmp_path):
    cfg = build_config({"seed": 4, "tau": 0.5, "preset": "fig3a"}, overrides={"seed": 9, "command": "speckle"})
    assert cfg.seed == 9 and cfg.tau == 0.5 and cfg.n_modes == 100
    with pytest.raises(ConfigError):
        build_config({"preset": "nope"}, overrides={"command": "speckle"})
