import csv
import json

import pytest

from qmcgreeks.cli import ExperimentConfig, main, parse_config, run_error_curves, run_tables
from qmcgreeks.exceptions import ConfigurationError


def _write(path, text):
    path.write_text(text)
    return str(path)


SMALL = """\
# tiny grid for tests
products = arithmetic-asian, binary-asian
strikes = 90, 110
steps = 8
methods = lr-mc, mc-cpw, qmc-bb-cpw
paths = 2^8
runs = 4
seed = 3
"""


def test_parse_config_grammar():
    values = parse_config(SMALL + "max-paths = 2^10\nsigma = 0.25\n")
    assert values["products"] == ("arithmetic-asian", "binary-asian")
    assert values["strikes"] == (90.0, 110.0)
    assert values["steps"] == (8,)
    assert values["paths"] == 256
    assert values["max_paths"] == 1024
    assert values["sigma"] == 0.25


@pytest.mark.parametrize("text", ["paths 12", "colour = red", "runs = many", "steps = 8, x"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(products=("asian-put",))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(methods=())
    cfg = ExperimentConfig()
    assert cfg.paths == 2**13 and cfg.runs == 50
    assert cfg.strikes == (90.0, 100.0, 110.0) and cfg.steps == (64, 256)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_lr_only_table_is_all_ones(tmp_path):
    cfg = ExperimentConfig(products=("lookback",), strikes=(100.0,), steps=(4,), methods=("lr-mc",),
                           paths=64, runs=3, out=str(tmp_path), workers=1)
    run_tables(cfg)
    rows = _read(tmp_path / "vrf_lookback.csv")
    assert rows[0] == ["Greek", "K", "d", "LR+MC"]
    assert [r[3] for r in rows[1:]] == ["1"] * 3


def test_tables_outputs_and_manifest(tmp_path):
    cfg_path = _write(tmp_path / "c.cfg", SMALL)
    out = tmp_path / "out"
    assert main(["tables", "--config", cfg_path, "--out", str(out), "--workers", "2"]) == 0
    rows = _read(out / "vrf_binary-asian.csv")
    assert rows[0] == ["Greek", "K", "d", "LR+MC", "MC-CPW", "QMC+BB-CPW"]
    assert len(rows) == 1 + 3 * 2
    assert all(r[3] == "1" for r in rows[1:])
    md = (out / "vrf_binary-asian.md").read_text()
    assert "| Greek | K | d | LR+MC | MC-CPW | QMC+BB-CPW |" in md
    manifest = json.loads((out / "manifest_tables.json").read_text())
    assert len(manifest["cells"]) == 2 * 3 * 2 * 3
    cell = manifest["cells"][0]
    assert {"method", "product", "greek", "strike", "steps", "paths", "runs", "seed"} <= set(cell)
    assert (out / "efficiency_arithmetic-asian.csv").exists()


def test_tables_rerun_is_byte_identical(tmp_path):
    cfg_path = _write(tmp_path / "c.cfg", SMALL)
    for name, workers in (("a", "1"), ("b", "3")):
        assert main(["tables", "--config", cfg_path, "--out", str(tmp_path / name), "--workers", workers]) == 0
    for f in ("vrf_arithmetic-asian.csv", "vrf_binary-asian.csv", "vrf_binary-asian.md", "manifest_tables.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_flags_override_config(tmp_path):
    cfg_path = _write(tmp_path / "c.cfg", SMALL)
    out = tmp_path / "o"
    assert main(["tables", "--config", cfg_path, "--out", str(out), "--paths", "128", "--runs", "2"]) == 0
    manifest = json.loads((out / "manifest_tables.json").read_text())
    assert manifest["paths"] == 128 and manifest["runs"] == 2


def test_curves_single_path_count(tmp_path):
    cfg = ExperimentConfig(products=("arithmetic-asian",), strikes=(90.0, 100.0), steps=(8,),
                           methods=("mc-cpw", "qmc-bb-cpw"), runs=3, sweep=(256,), out=str(tmp_path), workers=1)
    rows = _read(run_error_curves(cfg))
    assert rows[0] == ["product", "K", "d", "method", "greek", "paths", "log2_paths", "estimate", "error", "log2_error"]
    body = rows[1:]
    assert len(body) == 2 * 2 * 3
    assert len({(r[1], r[3], r[4]) for r in body}) == len(body)
    assert all(r[5] == "256" and r[6] == "8" for r in body)


def test_curves_sweep_cap(tmp_path):
    cfg_path = _write(tmp_path / "c.cfg", SMALL + "sweep = 2^6, 2^7, 2^9\n")
    out = tmp_path / "cv"
    assert main(["curves", "--config", cfg_path, "--out", str(out), "--max-paths", "2^7"]) == 0
    assert {r[5] for r in _read(out / "curves.csv")[1:]} == {"64", "128"}
    assert main(["curves", "--config", cfg_path, "--out", str(out), "--max-paths", "2^5"]) == 2


def test_speed_report(tmp_path):
    cfg_path = _write(tmp_path / "c.cfg", SMALL)
    out = tmp_path / "sp"
    assert main(["speed", "--config", cfg_path, "--out", str(out), "--workers", "2"]) == 0
    rows = _read(out / "speed.csv")
    assert len(rows) == 1 + 3
    assert all(r[-1] == "True" for r in rows[1:])


def test_exit_code_for_bad_config(tmp_path, capsys):
    bad = _write(tmp_path / "bad.cfg", "methods = mc-cpw, warp-drive\n")
    assert main(["tables", "--config", bad, "--out", str(tmp_path / "x")]) == 2
    assert "warp-drive" in capsys.readouterr().err
    assert main(["tables", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_exit_code_for_unwritable_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    cfg_path = _write(tmp_path / "c.cfg", SMALL)
    assert main(["tables", "--config", cfg_path, "--out", str(blocker / "sub")]) == 2
    assert str(blocker) in capsys.readouterr().err


def test_validate_subcommand(capsys):
    assert main(["validate", "--paths", "2^14", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 + 3 * 7
    assert all(line.startswith("[PASS]") for line in lines)
