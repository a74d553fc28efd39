import json

import pytest
from click.testing import CliRunner

from uwbrt.cli import main

QUICK = ["--grid-spacing", "2", "--max-reflections", "1", "--band-samples", "1", "--launch-rays", "2000"]


@pytest.fixture
def runner():
    return CliRunner()


def test_list_scenarios(runner):
    res = runner.invoke(main, ["list-scenarios"])
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert len(lines) == 10 and lines[0].startswith("fig4") and lines[-1].startswith("fig13")


def test_simulate_writes_outputs(runner, tmp_path):
    csv, ppm = tmp_path / "o.csv", tmp_path / "o.ppm"
    res = runner.invoke(main, ["simulate", "--scenario", "fig9", "--out-csv", str(csv), "--out-ppm", str(ppm),
                               "--scale", "-100:-50", *QUICK])
    assert res.exit_code == 0, res.output
    assert csv.read_text().startswith("x_m,y_m,z_m,power_dbm,path_count,safe\n")
    assert len(csv.read_text().splitlines()) == 1 + 11 * 4
    assert ppm.read_bytes().startswith(b"P6\n11 4\n255\n")


def test_custom_scenario_and_overrides(runner, tmp_path):
    res = runner.invoke(main, ["simulate", "--scenario", "custom", "--tx", "11,4,1.5", "--tx-pol", "horizontal-x",
                               "--diffraction", "off", "--roughness-dh", "0.05", *QUICK])
    assert res.exit_code == 0, res.output
    assert "custom" in res.output


def test_scene_file(runner, tmp_path):
    scene = tmp_path / "scene.json"
    scene.write_text(json.dumps({"preset": "paper-default", "corridor_w": 2.0, "bounds_size": [24, 9]}))
    res = runner.invoke(main, ["simulate", "--scene", str(scene), *QUICK])
    assert res.exit_code == 0, res.output
    assert "12x5" in res.output


@pytest.mark.parametrize("args", [
    ["--scenario", "fig99"],
    ["--scenario", "custom"],
    ["--scenario", "custom", "--tx", "1,2"],
    ["--tx", "1.5,1.5,1.0"],          # inside a rack
    ["--grid-spacing", "0"],
    ["--scale", "-40:-110"],
    ["--tx-pol", "circular"],
    ["--diffraction", "maybe"],
])
def test_configuration_errors_exit_2(runner, args):
    res = runner.invoke(main, ["simulate", *args])
    assert res.exit_code == 2, res.output


def test_bad_scene_json_exit_2(runner, tmp_path):
    scene = tmp_path / "scene.json"
    scene.write_text(json.dumps({"rack_widht": 1.0}))
    assert runner.invoke(main, ["simulate", "--scene", str(scene)]).exit_code == 2
    scene.write_text("{not json")
    assert runner.invoke(main, ["simulate", "--scene", str(scene)]).exit_code == 2


def test_io_errors_exit_1(runner, tmp_path):
    assert runner.invoke(main, ["simulate", "--scene", str(tmp_path / "missing.json")]).exit_code == 1
    res = runner.invoke(main, ["simulate", "--out-csv", str(tmp_path / "no" / "dir.csv"), *QUICK])
    assert res.exit_code == 1
