import json

import numpy as np
import pytest

from uwbrt.geom import Box
from uwbrt.materials import CONCRETE, PEC, Material
from uwbrt.scene import (Floor, Scene, WarehouseParams, build_warehouse, load_scene_params,
                         params_from_dict, params_to_dict, validate_scene)


def test_default_warehouse(warehouse):
    assert len(warehouse.boxes) == 56
    assert warehouse.floor is not None and warehouse.floor.material == CONCRETE
    assert warehouse.floor_id == 336
    assert warehouse.bounds == (0.0, 0.0, 22.0, 8.0)
    assert validate_scene(warehouse) == []
    z = {(b.min_corner[2], b.max_corner[2]) for b, _ in warehouse.boxes}
    assert z == {(0.3, 2.3)}


def test_cluster_and_field_sizes():
    p = WarehouseParams()
    assert p.cluster_size == pytest.approx((9.40, 2.65))
    assert p.field_size == pytest.approx((20.3, 6.8))
    assert p.margins == pytest.approx((0.85, 0.6))


def test_clusters_separated_by_corridors(warehouse):
    xs = sorted({round(b.min_corner[0], 6) for b, _ in warehouse.boxes})
    gaps = np.diff(xs)
    assert gaps.max() == pytest.approx(1.3 + 1.5)
    assert gaps.min() == pytest.approx(1.35)


def test_single_box_warehouse():
    s = build_warehouse(WarehouseParams(cluster_grid=(1, 1), cluster_rows=1, cluster_cols=1))
    assert len(s.boxes) == 1
    b = s.boxes[0][0]
    assert (b.min_corner[2], b.max_corner[2]) == pytest.approx((0.3, 2.3))


def test_validation_diagnostics():
    twin = Scene.from_boxes([((0, 0, 0), (1, 1, 1)), ((0, 0, 0), (1, 1, 1))])
    assert len(validate_scene(twin)) == 1
    deep = Scene.from_boxes([((0, 0, -1), (1, 1, 1))], floor=Floor())
    assert any("below the floor" in p for p in validate_scene(deep))


def test_surface_ids_and_materials(warehouse):
    assert np.allclose(warehouse.surface_normal(0), [-1, 0, 0])
    assert np.allclose(warehouse.surface_normal(5), [0, 0, 1])
    assert np.allclose(warehouse.surface_normal(warehouse.floor_id), [0, 0, 1])
    assert warehouse.material_of(7) == PEC
    assert warehouse.material_of(warehouse.floor_id) == CONCRETE
    with pytest.raises(ValueError):
        Scene(((Box((0, 0, 0), (1, 1, 1), 6), PEC),))


def test_arrays_layout(warehouse):
    a = warehouse.arrays
    assert a.boxes.shape == (56, 6)
    assert a.edges.shape == (56 * 12, 13)
    assert a.kind[-1] == 1 and not a.kind[:-1].any()
    rough = warehouse.with_box_roughness(0.05).arrays
    assert np.all(rough.dh[:-1] == 0.05) and rough.dh[-1] == 0.0


def test_json_round_trip(tmp_path):
    p = WarehouseParams(corridor_w=2.0, rack_material=Material("PEC", roughness_dh=0.01))
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(params_to_dict(p)))
    assert load_scene_params(path) == p
    assert load_scene_params("preset:paper-default") == WarehouseParams()
    assert params_from_dict({"preset": "paper-default"}) == WarehouseParams()
    with pytest.raises(ValueError):
        params_from_dict({"rack_widht": 1.0})
    with pytest.raises(ValueError):
        params_from_dict({"rack_w": -1})
