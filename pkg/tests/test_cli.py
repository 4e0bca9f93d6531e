import csv
import hashlib
import json
import subprocess
import sys

import pytest

from cantorvp.cli import run
from cantorvp.config import CONFIG_SCHEMA, ConfigError, parse_config


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, **data):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


P2 = {"family": "padic", "p": 2, "depth": 2}


def test_spectrum_small_tree(tmp_path):
    out = tmp_path / "out"
    assert run(["spectrum", "--family", "padic:2", "--depth", "2", "--s", "3", "--out", str(out)]) == 0
    rows = read_csv(out / "spectrum.csv")
    assert list(rows[0]) == ["support_address", "level", "multiplicity", "lambda_closed_form",
                             "lambda_dense_oracle", "abs_diff"]
    lams = sorted(float(r["lambda_closed_form"]) for r in rows for _ in range(int(r["multiplicity"])))
    assert lams == pytest.approx([0, 2, 3, 3])
    assert max(float(r["abs_diff"]) for r in rows) < 1e-12
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["files"]["spectrum.csv"] == hashlib.sha256((out / "spectrum.csv").read_bytes()).hexdigest()


def test_branching_one_is_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, tree={"family": "level_regular", "branching": [2, 1], "depth": 2})
    assert run(["zeta", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "LevelRegular" in err and "tree" in err
    report = json.loads((tmp_path / "o" / "run_report.json").read_text())
    assert report["status"] == "invalid-config"


@pytest.mark.parametrize("data, field", [
    ({"tree": P2, "colour": "red"}, "<root>"),
    ({"tree": {**P2, "depth": 0}}, "tree"),
    ({"tree": P2, "times": [-1.0]}, "times.0"),
    ({"tree": {"family": "padic", "depth": 2}}, "tree.p"),
    ({"tree": {**P2, "p": 3, "metric": "baire"}, "kernel_form": "aligned"}, "kernel_form"),
    ({"tree": P2, "zeta_levels": 5}, "zeta_levels"),
    ({"s": 3.0}, "tree"),
])
def test_validation_names_field(data, field):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.where == field


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "tree": {,\n}')
    assert run(["zeta", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "bad.json:2:" in capsys.readouterr().err


def test_cli_flags_override_config(tmp_path):
    cfg = write_config(tmp_path, tree={"family": "padic", "p": 3, "depth": 4}, s=2.0)
    out = tmp_path / "o"
    assert run(["zeta", "--config", cfg, "--family", "padic:2", "--depth", "3", "--s", "2",
                "--out", str(out)]) == 0
    rows = read_csv(out / "zeta.csv")
    assert len(rows) == 4
    assert float(rows[-1]["cumulative"]) == pytest.approx(2 - 2.0**-3)


def test_heat_files_and_empty_times(tmp_path):
    out = tmp_path / "heat"
    cfg = write_config(tmp_path, tree=P2, times=[0.1, 1])
    assert run(["heat", "--config", cfg, "--out", str(out)]) == 0
    produced = sorted(p.name for p in out.iterdir())
    assert produced == ["heat_000_t0.1.csv", "heat_001_t1.csv", "manifest.json", "run_report.json"]
    rows = read_csv(out / "heat_001_t1.csv")
    assert len(rows) == 16
    empty = tmp_path / "empty"
    cfg = write_config(tmp_path, tree=P2, times=[])
    assert run(["heat", "--config", cfg, "--out", str(empty)]) == 0
    assert sorted(p.name for p in empty.iterdir()) == ["manifest.json", "run_report.json"]
    assert json.loads((empty / "manifest.json").read_text())["warnings"]


def test_outputs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, tree={"family": "level_regular", "branching": [2, 3], "depth": 2},
                       s=1.5, T=0.5, paths=2000, seed=11)
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        for cmd in ("zeta", "measure", "wavelets", "spectrum", "heat", "green", "simulate"):
            assert run([cmd, "--config", cfg, "--out", str(d)]) == 0
    names = sorted(p.name for p in dirs[0].iterdir() if p.name != "run_report.json")
    assert names == sorted(p.name for p in dirs[1].iterdir() if p.name != "run_report.json")
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_csv_is_lf_utf8(tmp_path):
    run(["measure", "--family", "padic:3", "--depth", "1", "--out", str(tmp_path)])
    raw = (tmp_path / "measure.csv").read_bytes()
    assert b"\r" not in raw
    raw.decode("utf-8")
    rows = read_csv(tmp_path / "measure.csv")
    assert [r["address"] for r in rows] == ["", "0", "1", "2"]
    assert float(rows[1]["measure"]) == pytest.approx(1 / 3)


def test_wavelets_dump(tmp_path):
    run(["wavelets", "--family", "padic:3", "--depth", "1", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "wavelets.csv")
    assert len(rows) == 3 + 2 * 3
    row = next(r for r in rows if r["j"] == "1" and r["leaf_address"] == "1")
    assert complex(float(row["re"]), float(row["im"])) == pytest.approx(complex(-0.5, 3**0.5 / 2))


def test_green_sidecar(tmp_path):
    run(["green", "--family", "padic:2", "--depth", "4", "--s", "1.5", "--out", str(tmp_path)])
    side = json.loads((tmp_path / "green.json").read_text())
    assert side["convergence_class"] == "Convergent"
    assert side["identity_error"] < 1e-8
    assert len(read_csv(tmp_path / "green.csv")) == 256


def test_simulate_json(tmp_path):
    cfg = write_config(tmp_path, tree={"family": "padic", "p": 2, "depth": 3}, x0="1.0.1",
                       T=1.0, paths=20000, seed=3)
    assert run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    res = json.loads((tmp_path / "o" / "simulate.json").read_text())
    assert sum(res["counts"].values()) == 20000
    assert res["x0"] == "1.0.1" and res["depth"] == 3
    assert res["tv_distance"] < 0.03


def test_check_passes(tmp_path, capsys):
    assert run(["check", "--family", "padic:2", "--depth", "3", "--s", "3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and out.count("[PASS]") >= 8
    assert all(c["passed"] for c in json.loads((tmp_path / "check.json").read_text())["checks"])


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CANTORVP_OUT", str(tmp_path / "env"))
    assert run(["zeta", "--family", "padic:2", "--depth", "2"]) == 0
    assert (tmp_path / "env" / "zeta.csv").exists()


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["zeta", "--family", "padic:2", "--depth", "2", "--out", str(blocker / "sub")]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cantorvp", "zeta", "--family", "padic:2",
                          "--depth", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "zeta.csv").exists()


def test_schema_rejects_unknown_tree_keys():
    assert CONFIG_SCHEMA["properties"]["tree"]["additionalProperties"] is False
    with pytest.raises(ConfigError):
        parse_config({"tree": {**P2, "branches": 3}})


def test_failed_check_exits_3(tmp_path, monkeypatch):
    from cantorvp import checks

    monkeypatch.setattr(checks, "ACCEPTANCE", [("always_fails", lambda: (False, "forced"))])
    code = run(["check", "--acceptance", "--family", "padic:2", "--depth", "2", "--out", str(tmp_path)])
    assert code == 3
    report = json.loads((tmp_path / "run_report.json").read_text())
    assert report["status"] == "check-failed"
