import csv
import io
import json
import math

import numpy as np
import pytest

from liekoop.cli import main
from liekoop.config import (GRID_CAP, RunConfig, catalog_names, catalog_text, load_catalog, load_config,
                            parse_config)
from liekoop.errors import ConfigError
from liekoop.runner import REPORT_FIELDS, SCHEMA, run

CATALOG = ["heisenberg-line", "noncollinear", "so3-circle", "so3-wobble", "torus-rescaled", "torus-rotation",
           "u1-sine"]


def test_catalog_listing():
    assert catalog_names() == CATALOG


def test_load_catalog_torus_rotation():
    system, config = load_catalog("torus-rotation")
    assert system.id == "torus-rotation"
    assert system.group.name == "torus:2"
    assert np.allclose(system.field([0.3, 0.1]), [1.0, math.sqrt(2)])
    assert config.tol == 1e-6 and config.rk4_step == 1e-3


def test_load_config_from_file(tmp_path):
    path = tmp_path / "sys.cfg"
    path.write_text(catalog_text("so3-wobble"))
    system, _ = load_config(path)
    assert system.group.name == "so3"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_empty_config_rejected():
    with pytest.raises(ConfigError):
        parse_config("   \n")


def test_unknown_group_names_field():
    text = catalog_text("torus-rotation").replace("group = torus:2", "group = su5")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == "system.group"
    assert "group" in str(info.value)
    assert info.value.line is not None


def test_unknown_key_rejected():
    text = catalog_text("torus-rotation").replace("[run]", "[run]\ntoll = 1e-3")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == "run.toll"
    assert info.value.line is not None


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse_config(catalog_text("torus-rotation") + "\n[extra]\nfoo = 1\n")


def test_invalid_tolerance_rejected():
    text = catalog_text("torus-rotation").replace("[run]", "[run]\ntol = -1")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_grid_is_capped():
    system, _ = load_catalog("torus-rotation")
    system.grid, system.random = 100, 0
    assert len(system.samples()) <= GRID_CAP


def test_samples_deterministic():
    a, _ = load_catalog("torus-rescaled")
    b, _ = load_catalog("torus-rescaled")
    assert np.array_equal(a.samples(), b.samples())


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_cli_verify_pass(capsys):
    assert main(["verify", "--system", "torus-rotation", "--no-timestamp"]) == 0
    report = _json(capsys)
    assert report["schema"] == SCHEMA and report["passed"] is True
    assert np.abs(np.array(report["omega_hat"]) - [1.0, 1.41421356]).max() <= 1e-8
    for key in REPORT_FIELDS:
        assert key in report
    assert report["timestamp"] is None


def test_cli_verify_fail_exit_code(capsys):
    assert main(["verify", "--system", "u1-sine"]) == 2
    assert _json(capsys)["passed"] is False


def test_cli_error_exit_codes(tmp_path, capsys):
    assert main(["verify"]) == 1
    assert main(["bogus", "--system", "torus-rotation"]) == 1
    assert main(["verify", "--system", "nope"]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("")
    assert main(["verify", "--config", str(bad)]) == 1
    assert main(["verify", "--system", "torus-rotation", "--tol", "-1"]) == 1
    capsys.readouterr()


def test_cli_rescale_alpha_column(tmp_path, capsys):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["rescale", "--system", "torus-rescaled", "--out", str(out), "--csv", str(table)]) == 0
    report = json.loads(out.read_text())
    assert report["rescalable"] is True
    rows = list(csv.DictReader(io.StringIO(table.read_text())))
    for row in rows:
        expected = 1.0 / (2.0 + math.sin(float(row["theta1"])))
        assert abs(float(row["alpha"]) - expected) <= 1e-6 * expected


def test_cli_lift_check_wobble(capsys):
    assert main(["lift-check", "--system", "so3-wobble", "--no-timestamp"]) == 0
    report = _json(capsys)
    assert report["max_gap_tilde"] <= 1e-6
    assert report["max_gap_canonical"] > 1e-3
    assert report["details"]["abelian"] is False


def test_cli_residual(capsys):
    assert main(["residual", "--system", "so3-circle", "--no-timestamp"]) == 0
    assert _json(capsys)["residual"] <= 1e-6


def test_cli_config_file_and_overrides(tmp_path, capsys):
    path = tmp_path / "s.cfg"
    path.write_text(catalog_text("torus-rotation"))
    assert main(["--config", str(path), "--grid", "4", "--random", "3", "--no-timestamp"]) == 0
    report = _json(capsys)
    assert report["command"] == "verify"
    assert report["settings"]["grid"] == 4 and report["settings"]["random"] == 3


def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == CATALOG


def test_deterministic_output(tmp_path):
    paths = []
    for k in range(2):
        out, table = tmp_path / f"{k}.json", tmp_path / f"{k}.csv"
        assert main(["verify", "--system", "so3-wobble", "--no-timestamp", "--out", str(out),
                     "--csv", str(table)]) == 2
        paths.append((out.read_bytes(), table.read_bytes()))
    assert paths[0] == paths[1]


def test_timestamp_present_by_default(capsys):
    main(["verify", "--system", "torus-rotation"])
    assert isinstance(_json(capsys)["timestamp"], str)


def test_run_api_matches_expectations():
    for name in CATALOG:
        system, _ = load_catalog(name)
        system.grid, system.random = 6, 10
        result = run("verify", system, RunConfig())
        assert result.passed == system.expect["eigenfunction"], name
