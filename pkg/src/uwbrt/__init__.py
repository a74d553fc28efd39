"""Deterministic UWB ray tracing for warehouses of metal rack boxes."""

from .antenna import Antenna, pattern_gain, polarization_vector
from .field import (ComplexFieldGain, LinkBudget, Waveform, band_averaged_power, coherent_receive_power,
                    path_complex_gain, path_loss, utd_coefficients)
from .geom import Box, Edge, Ray, SurfaceHit, mirror_point, ray_box_intersect, reflect_direction
from .kernels import BACKEND_NAME
from .materials import CONCRETE, PEC, Material, MaterialKind, RoughnessContext, fresnel_coefficients, roughness_factor
from .runner import (ConfigurationError, CoverageGrid, Scenario, run_scenario, scenario_presets,
                     write_grid_csv, write_heatmap)
from .scene import Floor, Scene, WarehouseParams, build_warehouse, validate_scene
from .tracer import (PropagationPath, TraceBudget, enumerate_specular_paths, find_diffraction_paths, find_los,
                     refine_specular_path, trace_paths)

__version__ = "0.1.0"

__all__ = [
    "Antenna", "pattern_gain", "polarization_vector",
    "ComplexFieldGain", "LinkBudget", "Waveform", "band_averaged_power", "coherent_receive_power",
    "path_complex_gain", "path_loss", "utd_coefficients",
    "Box", "Edge", "Ray", "SurfaceHit", "mirror_point", "ray_box_intersect", "reflect_direction",
    "BACKEND_NAME",
    "CONCRETE", "PEC", "Material", "MaterialKind", "RoughnessContext", "fresnel_coefficients", "roughness_factor",
    "ConfigurationError", "CoverageGrid", "Scenario", "run_scenario", "scenario_presets",
    "write_grid_csv", "write_heatmap",
    "Floor", "Scene", "WarehouseParams", "build_warehouse", "validate_scene",
    "PropagationPath", "TraceBudget", "enumerate_specular_paths", "find_diffraction_paths", "find_los",
    "refine_specular_path", "trace_paths",
]
