import json
import struct

import numpy as np
import pytest

from spinsurf import (SpinorField, catalog, constant_field,
                      export_mesh, field_from_function, integrate_surface_r3,
                      invert_surface, make_grid, smatrix_to_surface)
from spinsurf.meshio import (MeshFormatError, euler_characteristic,
                             grid_triangles, read_obj_counts)
from spinsurf.moutard import heat_smatrix_values


def _plane(n=5):
    g = make_grid((-1, 1, -1, 1), (n, n))
    psi = SpinorField(constant_field(g, 1.0), constant_field(g, 0.0))
    return integrate_surface_r3(psi)


def test_plane_triangle_count(tmp_path):
    st = export_mesh(_plane(5), tmp_path / "p.obj")
    assert st.n_triangles == 32
    assert st.n_vertices == 25
    nv, nf = read_obj_counts(tmp_path / "p.obj")
    assert (nv, nf) == (25, 32)


def test_obj_metadata_sidecar(tmp_path):
    st = export_mesh(_plane(5), tmp_path / "p.obj", metadata={"tag": "plane"})
    meta = json.loads((tmp_path / "p.obj.json").read_text())
    assert meta["tag"] == "plane"
    assert meta["n_triangles"] == 32
    assert meta["holes"] == 0


def test_disk_euler_characteristic():
    good = np.ones((5, 5), dtype=bool)
    tris, holes = grid_triangles(5, 5, good)
    assert holes == 0
    assert euler_characteristic(tris) == 1      # disk


def test_catenoid_watertight_strip(tmp_path):
    g = make_grid((-1.2, 1.2, 0, 2 * np.pi), (32, 64), periodicity=(False, True))
    s = 1 / np.sqrt(2)
    psi = SpinorField(field_from_function(g, lambda z: s * np.exp(z / 2)),
                      field_from_function(g, lambda z: s * np.exp(-np.conj(z) / 2)))
    cat = integrate_surface_r3(psi)
    st = export_mesh(cat, tmp_path / "cat.ply", fmt="ply")
    assert st.n_holes == 0
    tris, _ = grid_triangles(g.nx, g.ny, np.ones((g.ny, g.nx), bool), stitch_y=True)
    assert euler_characteristic(tris) == 0       # cylinder


def test_ply_binary_layout(tmp_path):
    st = export_mesh(_plane(5), tmp_path / "p.ply", fmt="ply")
    blob = (tmp_path / "p.ply").read_bytes()
    header_end = blob.index(b"end_header\n") + len(b"end_header\n")
    header = blob[:header_end].decode()
    assert "format binary_little_endian 1.0" in header
    assert f"element vertex {st.n_vertices}" in header
    body = blob[header_end:]
    assert len(body) == st.n_vertices * 12 + st.n_triangles * (1 + 12)
    x0, y0, z0 = struct.unpack("<3f", body[:12])
    assert (x0, y0, z0) == pytest.approx((1.0, 1.0, 0.0), abs=1e-6)  # x1=-y, x2=-x at corner


def test_inverted_singular_surface_has_hole(tmp_path):
    # inverted quadratic-datum surface at the singular configuration passes
    # through the origin at z = 0: that node is flagged and the mesh has holes
    sol = catalog("s1", c=1j)
    g = make_grid((-1, 1, -1, 1), (17, 17))    # node exactly at z = 0
    M = heat_smatrix_values(sol.f, g, -0.5)
    S = smatrix_to_surface(M)
    inv = invert_surface(S)
    assert inv.mask is not None and inv.mask[8, 8]
    st = export_mesh(inv, tmp_path / "inv.obj")
    assert st.n_holes == 4                      # the four quads at the node
    meta = json.loads((tmp_path / "inv.obj.json").read_text())
    assert meta["holes"] == 4


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(MeshFormatError):
        export_mesh(_plane(5), tmp_path / "p.stl", fmt="stl")


def test_r4_drop4_projection(tmp_path):
    g = make_grid((-1, 1, -1, 1), (9, 9))
    sol = catalog("s1", c=1.0)
    S = smatrix_to_surface(heat_smatrix_values(sol.f, g, 0.1))
    st = export_mesh(S, tmp_path / "g.obj", r4_projection="drop4")
    meta = json.loads((tmp_path / "g.obj.json").read_text())
    assert "x4_range" in meta and meta["x4_range"][0] <= meta["x4_range"][1]


def test_r4_stereographic_projection(tmp_path):
    g = make_grid((-1, 1, -1, 1), (9, 9))
    sol = catalog("s1", c=1.0)
    S = smatrix_to_surface(heat_smatrix_values(sol.f, g, 0.1))
    st = export_mesh(S, tmp_path / "g.obj", r4_projection="stereographic")
    assert st.n_triangles == 2 * 8 * 8
    meta = json.loads((tmp_path / "g.obj.json").read_text())
    assert meta["projection"] == "stereographic"
