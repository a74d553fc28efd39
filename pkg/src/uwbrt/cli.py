"""Command line entry point: ``uwbrt simulate`` and ``uwbrt list-scenarios``."""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .antenna import POLARIZATIONS
from .field import LinkBudget, Waveform
from .runner import (ConfigurationError, Scenario, get_preset, run_scenario, scenario_presets,
                     write_grid_csv, write_heatmap)
from .scene import build_warehouse, load_scene_params, validate_scene
from .tracer import TraceBudget

EXIT_IO = 1
EXIT_CONFIG = 2

_POL = click.Choice(sorted(POLARIZATIONS))


def _triple(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected x,y,z, got {text!r}") from None
    if len(parts) != 3:
        raise click.BadParameter(f"expected x,y,z, got {text!r}")
    return tuple(parts)


def _scale(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise click.BadParameter(f"expected min:max, got {text!r}") from None
    if not lo < hi:
        raise click.BadParameter("scale needs min < max")
    return lo, hi


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Deterministic UWB ray tracing for rack warehouses."""


@main.command("list-scenarios")
def list_scenarios():
    """Print the built-in scenario presets."""
    for s in scenario_presets():
        x, y, z = s.tx_position
        click.echo(f"{s.name:6s} tx=({x:.3f},{y:.3f},{z:.2f}) tx_pol={s.tx_polarization} "
                   f"rx_pol={s.rx_polarization} roughness_dh={s.roughness_dh:g}  {s.description}")


@main.command()
@click.option("--scene", "scene_src", default="preset:paper-default", show_default=True,
              help="JSON scene file or preset:paper-default.")
@click.option("--scenario", "scenario_name", default="fig4", show_default=True,
              help="Preset name (see list-scenarios) or 'custom'.")
@click.option("--tx", "tx", default=None, help="Transmitter position x,y,z in metres.")
@click.option("--tx-pol", type=_POL, default=None)
@click.option("--rx-pol", type=_POL, default=None)
@click.option("--grid-height", type=float, default=None, help="Receiver height [m] (0.2).")
@click.option("--grid-spacing", type=float, default=None, help="Receiver spacing [m] (0.25).")
@click.option("--max-reflections", type=click.IntRange(0, 7), default=6, show_default=True)
@click.option("--diffraction", type=click.Choice(["on", "off"]), default="on", show_default=True)
@click.option("--roughness-dh", type=float, default=None, help="Rack surface roughness [m].")
@click.option("--band-samples", type=click.IntRange(min=1), default=16, show_default=True)
@click.option("--launch-rays", type=click.IntRange(min=12), default=100_000, show_default=True)
@click.option("--out-csv", type=click.Path(dir_okay=False), default=None)
@click.option("--out-ppm", type=click.Path(dir_okay=False), default=None)
@click.option("--scale", "scale", default="-110:-40", show_default=True, help="Heatmap min:max in dBm.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
def simulate(scene_src, scenario_name, tx, tx_pol, rx_pol, grid_height, grid_spacing, max_reflections,
             diffraction, roughness_dh, band_samples, launch_rays, out_csv, out_ppm, scale, workers):
    """Sweep the receiver grid for one scenario and write CSV and/or PPM maps."""
    try:
        scale_v = _scale(scale)
        params = load_scene_params(scene_src)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read scene: {exc}")
    except (ValueError, json.JSONDecodeError, click.BadParameter) as exc:
        _fail(EXIT_CONFIG, str(exc))

    try:
        scene = build_warehouse(params)
        problems = validate_scene(scene)
        if problems:
            raise ConfigurationError("; ".join(problems))
        if scenario_name == "custom":
            if tx is None:
                raise ConfigurationError("--scenario custom needs --tx")
            p = _triple(tx)
            scenario = Scenario("custom", p, p[2])
        else:
            scenario = get_preset(scenario_name, params)
            if tx is not None:
                scenario = scenario.with_updates(tx_position=_triple(tx))
        updates = {k: v for k, v in dict(tx_polarization=tx_pol, rx_polarization=rx_pol,
                                         grid_height=grid_height, grid_spacing=grid_spacing,
                                         roughness_dh=roughness_dh).items() if v is not None}
        if updates:
            scenario = scenario.with_updates(**updates)
        budget = TraceBudget(max_reflections=max_reflections, enable_diffraction=diffraction == "on",
                             launch_rays=launch_rays)
        grid = run_scenario(scene, scenario, budget, Waveform(band_samples=band_samples), LinkBudget(),
                            workers=workers)
    except (ConfigurationError, ValueError, click.BadParameter) as exc:
        _fail(EXIT_CONFIG, str(exc))

    try:
        if out_csv:
            write_grid_csv(grid, out_csv)
        if out_ppm:
            write_heatmap(grid, out_ppm, scale_v)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write output: {exc}")

    valid = ~grid.excluded
    finite = grid.power_dbm[valid & np.isfinite(grid.power_dbm)]
    ny, nx = grid.shape
    click.echo(f"{scenario.name}: {nx}x{ny} cells, {int(valid.sum())} evaluated, "
               f"{int(grid.safe.sum())} safe, "
               f"max {finite.max() if finite.size else float('-inf'):.2f} dBm")


if __name__ == "__main__":  # pragma: no cover
    main()
