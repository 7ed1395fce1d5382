"""OBJ / PLY export of grid-sampled surfaces with singular-node bookkeeping."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .surface import SurfaceMap


class MeshFormatError(ValueError):
    pass


@dataclass
class MeshStats:
    n_vertices: int
    n_triangles: int
    n_holes: int
    files: list


def _project(S: SurfaceMap, r4_projection: str):
    if S.ambient_dim == 3:
        return S.coords, {}
    if r4_projection == "drop4":
        x4 = S.coords[3]
        return S.coords[:3], {"x4_range": [float(x4.min()), float(x4.max())]}
    if r4_projection == "stereographic":
        # from the unit-sphere compactification pole along x4
        c = S.coords
        r2 = np.sum(c * c, axis=0)
        denom = 1.0 + r2
        scale = 1.0 / denom
        return np.stack([2 * c[0] * scale, 2 * c[1] * scale, 2 * c[2] * scale]), \
            {"projection": "stereographic"}
    raise MeshFormatError(f"unknown r4 projection {r4_projection!r}")


def grid_triangles(nx: int, ny: int, good: np.ndarray, stitch_x: bool = False,
                   stitch_y: bool = False):
    """Two triangles per grid quad; quads touching a bad node are skipped.

    Periodic stitching closes the last column/row back to the first.
    """
    def vid(ix, iy):
        return iy * nx + ix

    tris = []
    holes = 0
    mx = nx if stitch_x else nx - 1
    my = ny if stitch_y else ny - 1
    for iy in range(my):
        iy1 = (iy + 1) % ny
        for ix in range(mx):
            ix1 = (ix + 1) % nx
            quad_ok = good[iy, ix] and good[iy, ix1] and good[iy1, ix] and good[iy1, ix1]
            if not quad_ok:
                holes += 1
                continue
            a, b, c, d = vid(ix, iy), vid(ix1, iy), vid(ix1, iy1), vid(ix, iy1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return np.asarray(tris, dtype=np.int64).reshape(-1, 3), holes


def export_mesh(S: SurfaceMap, path, fmt: str = "obj", r4_projection: str = "drop4",
                stitch_periodic: bool = True, metadata: dict | None = None) -> MeshStats:
    """Write the surface as a triangulated OBJ or PLY file plus a JSON sidecar."""
    if fmt not in ("obj", "ply"):
        raise MeshFormatError(f"unsupported format {fmt!r}")
    verts3, extra = _project(S, r4_projection)
    g = S.grid
    good = np.ones((g.ny, g.nx), dtype=bool)
    if S.mask is not None:
        good &= ~S.mask
    finite = np.isfinite(verts3).all(axis=0)
    good &= finite
    tris, holes = grid_triangles(g.nx, g.ny, good,
                                 stitch_x=g.periodic_x and stitch_periodic,
                                 stitch_y=g.periodic_y and stitch_periodic)
    pts = verts3.reshape(3, -1).T
    path = str(path)
    if fmt == "obj":
        _write_obj(path, pts, tris)
    else:
        _write_ply(path, pts, tris)
    meta = {
        "format": fmt,
        "grid": g.meta(),
        "basepoint": [float(v) for v in S.basepoint],
        "n_vertices": int(pts.shape[0]),
        "n_triangles": int(tris.shape[0]),
        "holes": holes,
        "flagged_nodes": int(np.sum(~good)),
    }
    meta.update(extra)
    meta.update(S.diagnostics or {})
    if metadata:
        meta.update(metadata)
    sidecar = path + ".json"
    with open(sidecar, "w") as fh:
        json.dump(_jsonable(meta), fh, indent=1, sort_keys=True)
    return MeshStats(pts.shape[0], tris.shape[0], holes, [path, sidecar])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_obj(path, pts, tris):
    with open(path, "w") as fh:
        for x, y, z in pts:
            fh.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
        for a, b, c in tris:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def _write_ply(path, pts, tris):
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {pts.shape[0]}\n"
        "property float x\nproperty float y\nproperty float z\n"
        f"element face {tris.shape[0]}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pts.astype("<f4").tobytes())
        for a, b, c in tris:
            fh.write(struct.pack("<B3i", 3, a, b, c))


def read_obj_counts(path):
    nv = nf = 0
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                nv += 1
            elif line.startswith("f "):
                nf += 1
    return nv, nf


def euler_characteristic(tris: np.ndarray, n_vertices: int | None = None) -> int:
    """V - E + F over referenced vertices with unique undirected edges."""
    used = np.unique(tris)
    v = len(used) if n_vertices is None else n_vertices
    edges = set()
    for a, b, c in tris:
        for e in ((a, b), (b, c), (c, a)):
            edges.add((min(e), max(e)))
    return v - len(edges) + tris.shape[0]
