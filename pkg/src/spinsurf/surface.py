"""Weierstrass integration of spinors to surfaces in R^3 / R^4, metric, Willmore,
Gauss map, discrete curvature and quaternionic inversion.

Coordinate derivative fields (the closed forms being integrated):

    x1_z = (i/2)(conj(phi2) conj(psi2) + phi1 psi1)
    x2_z = (1/2)(conj(phi2) conj(psi2) - phi1 psi1)
    x3_z = (1/2)(conj(phi2) psi1 + phi1 conj(psi2))
    x4_z = (i/2)(conj(phi2) psi1 - phi1 conj(psi2))

and x^k = x^k(P0) + int (x^k_z dz + conj(x^k_z) dzbar); the R^3 case is phi = psi
(then x4_z vanishes identically).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dirac import Mat2Field, SpinorField, dirac_residual_norm
from .grid import (ComplexField, Form1, Grid2D, antiderivative, integrate2d,
                   wirtinger_derivative)


class SurfaceIntegrationError(RuntimeError):
    pass


@dataclass
class SurfaceMap:
    """R^3- or R^4-valued map over a grid; coords has shape (dim, ny, nx)."""

    grid: Grid2D
    coords: np.ndarray
    basepoint: np.ndarray
    mask: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        self.basepoint = np.asarray(self.basepoint, dtype=float)
        if self.coords.ndim != 3 or self.coords.shape[0] not in (3, 4):
            raise ValueError("coords must have shape (3 or 4, ny, nx)")

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[0]

    def diameter(self) -> float:
        spans = [np.ptp(self.coords[k]) for k in range(self.ambient_dim)]
        return float(np.sqrt(np.sum(np.square(spans))))


@dataclass
class MetricData:
    """Conformal factor e^{2 alpha} (and optional mean curvature data)."""

    e2alpha: np.ndarray
    meanH: np.ndarray | None = None
    branch_mask: np.ndarray | None = None


def weier_derivatives(psi: SpinorField, phi: SpinorField | None = None):
    """The four x^k_z fields as (4, ny, nx) complex array."""
    if phi is None:
        phi = psi
    p1, p2 = psi.psi1.values, psi.psi2.values
    f1, f2 = phi.psi1.values, phi.psi2.values
    f2b, p2b = np.conj(f2), np.conj(p2)
    x1 = 0.5j * (f2b * p2b + f1 * p1)
    x2 = 0.5 * (f2b * p2b - f1 * p1)
    x3 = 0.5 * (f2b * p1 + f1 * p2b)
    x4 = 0.5j * (f2b * p1 - f1 * p2b)
    return np.stack([x1, x2, x3, x4])


def _integrate_coordinate(grid: Grid2D, xz: np.ndarray, base_node, defect_out: list):
    p = ComplexField(grid, xz)
    q = p.conj()
    form = Form1(p, q)
    prim = antiderivative(form, base_node, order="x_first")
    alt = antiderivative(form, base_node, order="y_first")
    defect_out.append(float(np.max(np.abs(prim.values - alt.values))))
    return prim.values.real


def integrate_surface_r4(psi: SpinorField, phi: SpinorField, basepoint=(0, 0, 0, 0),
                         base_node=None, U: ComplexField | None = None,
                         scheme: str = "central2", residual_tol: float = 1e-3,
                         defect_tol: float | None = None) -> SurfaceMap:
    """Integrate the four closed forms to a surface in R^4.

    If U is supplied the Dirac residuals of psi (for D) and phi (for Dvee) are
    measured and a warning issued above residual_tol.  The L-path defect
    (x-first vs y-first) is recorded; above defect_tol it is an error.
    """
    grid = psi.grid
    if base_node is None:
        base_node = (grid.nx // 2, grid.ny // 2)
    if U is not None:
        rd = dirac_residual_norm(U, psi, scheme, interior=1)
        rv = dirac_residual_norm(U, phi, scheme, interior=1, vee=True)
        scale = max(psi.max_abs(), phi.max_abs(), 1.0)
        if max(rd, rv) > residual_tol * scale:
            warnings.warn(f"Dirac residuals large before integration: D {rd:.3g}, Dvee {rv:.3g}")
    xz = weier_derivatives(psi, phi)
    defects = []
    coords = np.stack([_integrate_coordinate(grid, xz[k], base_node, defects)
                       for k in range(4)])
    maxdef = max(defects)
    if defect_tol is None:
        # valid spinor data sit orders of magnitude below this (O(h^2) defect)
        defect_tol = 0.02 * max(float(np.max(np.abs(xz))), 1e-300)
    if maxdef > defect_tol:
        raise SurfaceIntegrationError(
            f"path-dependence defect {maxdef:.3g} exceeds {defect_tol:.3g}; form not closed")
    ix0, iy0 = base_node
    coords = coords - coords[:, iy0, ix0][:, None, None] + np.asarray(basepoint, float)[:, None, None]
    return SurfaceMap(grid, coords, np.asarray(basepoint, float),
                      diagnostics={"path_defect": maxdef, "base_node": tuple(base_node)})


def integrate_surface_r3(psi: SpinorField, basepoint=(0, 0, 0), base_node=None,
                         U: ComplexField | None = None, scheme: str = "central2",
                         residual_tol: float = 1e-3) -> SurfaceMap:
    """R^3 Weierstrass representation: the phi = psi reduction (x^4 is constant)."""
    s4 = integrate_surface_r4(psi, psi, tuple(basepoint) + (0.0,), base_node,
                              U=U, scheme=scheme, residual_tol=residual_tol)
    x4span = float(np.ptp(s4.coords[3]))
    diag = dict(s4.diagnostics, x4_span=x4span)
    return SurfaceMap(s4.grid, s4.coords[:3], np.asarray(basepoint, float),
                      s4.mask, diag)


def spinor_metric(psi: SpinorField, phi: SpinorField | None = None,
                  branch_tol: float = 1e-12) -> MetricData:
    """e^{2 alpha} from the spinors: (|psi1|^2+|psi2|^2) (|phi1|^2+|phi2|^2)."""
    a = np.abs(psi.psi1.values) ** 2 + np.abs(psi.psi2.values) ** 2
    b = a if phi is None else np.abs(phi.psi1.values) ** 2 + np.abs(phi.psi2.values) ** 2
    e2a = a * b
    branch = e2a <= branch_tol * max(float(e2a.max()), 1.0)
    return MetricData(e2a, branch_mask=branch if branch.any() else None)


def surface_dz(S: SurfaceMap, scheme: str = "central2") -> np.ndarray:
    """(dim, ny, nx) array of x^k_z by numerical differentiation of the map."""
    out = []
    for k in range(S.ambient_dim):
        f = ComplexField(S.grid, S.coords[k].astype(complex))
        out.append(wirtinger_derivative(f, "z", scheme).values)
    return np.stack(out)


def measured_e2alpha(S: SurfaceMap, scheme: str = "central2") -> np.ndarray:
    """Conformal factor from the map itself: 2 sum_k |x^k_z|^2."""
    xz = surface_dz(S, scheme)
    return 2.0 * np.sum(np.abs(xz) ** 2, axis=0)


@dataclass
class GaussMapResult:
    points: np.ndarray                      # (dim, ny, nx), normalized representative
    quadric_residual: np.ndarray            # sum_k (x^k_z)^2 per node
    rel_residual: float                     # max |sum| / sum |x^k_z|^2
    degenerate: np.ndarray                  # nodes where |grad S| ~ 0
    spinor_ratio: np.ndarray | None = None  # (2, ny, nx) projective (a : b), dim 3 only


def gauss_map(S: SurfaceMap, scheme: str = "central2",
              degeneracy_tol: float = 1e-12) -> GaussMapResult:
    """Per-node projective point (x^1_z : ... : x^n_z) with quadric residual."""
    xz = surface_dz(S, scheme)
    norm2 = np.sum(np.abs(xz) ** 2, axis=0)
    scale = float(norm2.max())
    degenerate = norm2 <= degeneracy_tol * max(scale, 1.0)
    amp = np.sqrt(np.where(degenerate, 1.0, norm2))
    points = xz / amp
    quad = np.sum(xz * xz, axis=0)
    ok = ~degenerate
    rel = float(np.max(np.abs(quad)[ok] / norm2[ok])) if ok.any() else 0.0
    spinor = None
    if S.ambient_dim == 3:
        z1, z2, z3 = xz
        a2 = -1j * z1 - z2
        b2 = -1j * z1 + z2
        use_a = np.abs(a2) >= np.abs(b2)
        top = np.where(use_a, a2, z3)
        bot = np.where(use_a, z3, b2)
        spinor = np.stack([top, bot])
    return GaussMapResult(points, quad, rel, degenerate, spinor)


def willmore(U: ComplexField, decay_warn: float = 1e-3) -> float:
    """Willmore value 4 * int |U|^2 dx dy over the grid.

    A truncation warning with a |U| ~ C/r^2 tail estimate is issued when the
    field has not decayed at the open (non-periodic) edges."""
    u2 = U.abs2()
    val = 4.0 * integrate2d(u2, mask_policy="neighbor_mean" if U.mask is not None else "reject").real
    v = np.abs(U.values)
    edges = []
    if not U.grid.periodic_y:
        edges += [v[0, :].max(), v[-1, :].max()]
    if not U.grid.periodic_x:
        edges += [v[:, 0].max(), v[:, -1].max()]
    boundary = max(edges) if edges else 0.0
    interior = v.max()
    if interior > 0 and boundary > decay_warn * interior:
        gr = U.grid
        r2 = max(gr.x_max - gr.x_min, gr.y_max - gr.y_min) / 2
        tail = 4 * np.pi * boundary**2 * r2**2
        warnings.warn(f"|U| at open boundary is {boundary:.3g}; truncation tail est {tail:.3g}")
    return val


# ---------------------------------------------------------------------------
# discrete mean curvature


def _frame(Sx, Sy):
    e1 = Sx / np.linalg.norm(Sx, axis=0, keepdims=True)
    proj = np.sum(Sy * e1, axis=0, keepdims=True)
    e2 = Sy - proj * e1
    e2 = e2 / np.linalg.norm(e2, axis=0, keepdims=True)
    return e1, e2


def discrete_mean_curvature(S: SurfaceMap, window: int = 2) -> np.ndarray:
    """Mean curvature oracle from the map alone.

    R^3: local quadratic least-squares height fit over a (2w+1)^2 window in the
    normal frame, H = (w_uu + w_vv)/2.  R^4: |H| from the mean curvature vector
    Delta S / (2 e^{2 alpha}).  Boundary margin and degenerate fits are NaN.
    """
    if S.ambient_dim == 4:
        return _mean_curvature_r4(S)
    g = S.grid
    hx, hy = g.hx, g.hy
    P = S.coords
    Sx = np.gradient(P, hx, axis=2, edge_order=2)
    Sy = np.gradient(P, hy, axis=1, edge_order=2)
    e1, e2 = _frame(Sx, Sy)
    n = np.cross(e1, e2, axis=0)

    w = window
    ny, nx = g.ny, g.nx
    H = np.full((ny, nx), np.nan)
    core = np.s_[w:ny - w, w:nx - w]
    offsets = [(dy, dx) for dy in range(-w, w + 1) for dx in range(-w, w + 1)]
    m = len(offsets)
    c0 = P[:, core[0], core[1]]
    shape = c0.shape[1:]
    A = np.empty(shape + (m, 6))
    b = np.empty(shape + (m,))
    e1c = np.moveaxis(e1[:, core[0], core[1]], 0, -1)
    e2c = np.moveaxis(e2[:, core[0], core[1]], 0, -1)
    nc = np.moveaxis(n[:, core[0], core[1]], 0, -1)
    P0 = np.moveaxis(c0, 0, -1)
    for k, (dy, dx) in enumerate(offsets):
        Pk = np.moveaxis(P[:, w + dy:ny - w + dy, w + dx:nx - w + dx], 0, -1)
        d = Pk - P0
        u = np.sum(d * e1c, axis=-1)
        v = np.sum(d * e2c, axis=-1)
        hgt = np.sum(d * nc, axis=-1)
        A[..., k, 0] = 1.0
        A[..., k, 1] = u
        A[..., k, 2] = v
        A[..., k, 3] = u * u / 2
        A[..., k, 4] = u * v
        A[..., k, 5] = v * v / 2
        b[..., k] = hgt
    G = np.einsum("...ka,...kb->...ab", A, A)
    rhs = np.einsum("...ka,...k->...a", A, b)
    ok = np.linalg.cond(G) < 1e12
    beta = np.full(shape + (6,), np.nan)
    if ok.any():
        beta[ok] = np.linalg.solve(G[ok], rhs[ok][..., None])[..., 0]
    H[core] = (beta[..., 3] + beta[..., 5]) / 2
    if S.mask is not None:
        H[S.mask] = np.nan
    return H


def _mean_curvature_r4(S: SurfaceMap) -> np.ndarray:
    g = S.grid
    P = S.coords
    Sx = np.gradient(P, g.hx, axis=2, edge_order=2)
    Sy = np.gradient(P, g.hy, axis=1, edge_order=2)
    e2a = (np.sum(Sx * Sx, axis=0) + np.sum(Sy * Sy, axis=0)) / 2
    lap = np.empty_like(P)
    for k in range(4):
        lap[k] = (np.gradient(np.gradient(P[k], g.hx, axis=1, edge_order=2), g.hx, axis=1, edge_order=2)
                  + np.gradient(np.gradient(P[k], g.hy, axis=0, edge_order=2), g.hy, axis=0, edge_order=2))
    Hvec = lap / (2 * e2a)
    Habs = np.linalg.norm(Hvec, axis=0)
    Habs[:2, :] = np.nan
    Habs[-2:, :] = np.nan
    Habs[:, :2] = np.nan
    Habs[:, -2:] = np.nan
    if S.mask is not None:
        Habs[S.mask] = np.nan
    return Habs


# ---------------------------------------------------------------------------
# quaternionic inversion and the S-matrix coordinate dictionary


def coords_to_smatrix_values(coords: np.ndarray):
    """[[i x3 + x4, -x1 - i x2],[x1 - i x2, -i x3 + x4]] per node."""
    x1, x2, x3 = coords[0], coords[1], coords[2]
    x4 = coords[3] if coords.shape[0] == 4 else np.zeros_like(x1)
    return (1j * x3 + x4, -x1 - 1j * x2, x1 - 1j * x2, -1j * x3 + x4)


def smatrix_values_to_coords(e11, e12, e21, e22) -> np.ndarray:
    """Inverse of the dictionary above; returns (4, ny, nx) real coordinates."""
    x1 = e21.real
    x2 = -e21.imag
    x3 = e11.imag
    x4 = e11.real
    return np.stack([x1, x2, x3, x4])


def surface_to_smatrix(S: SurfaceMap) -> Mat2Field:
    vals = coords_to_smatrix_values(S.coords)
    return Mat2Field.from_values(S.grid, *vals, mask=S.mask)


def smatrix_to_surface(M: Mat2Field, basepoint=None) -> SurfaceMap:
    coords = smatrix_values_to_coords(M.e11.values, M.e12.values,
                                      M.e21.values, M.e22.values)
    bp = coords[:, M.grid.ny // 2, M.grid.nx // 2] if basepoint is None else np.asarray(basepoint)
    mask = M.e11.mask
    return SurfaceMap(M.grid, coords, bp, mask)


def invert_surface(S: SurfaceMap, eps_rel: float = 1e-9) -> SurfaceMap:
    """Quaternionic inversion x -> reflection(x) / |x|^2, i.e. the matrix inverse
    of the S-matrix; equals inversion composed with (x1,x2,x3,x4)->(-x1,-x2,-x3,x4)."""
    dim = S.ambient_dim
    c = S.coords
    norm2 = np.sum(c * c, axis=0)
    eps = eps_rel * max(S.diameter(), 1e-300)
    bad = norm2 < eps * eps
    safe = np.where(bad, 1.0, norm2)
    out = np.empty_like(c)
    out[0] = -c[0] / safe
    out[1] = -c[1] / safe
    out[2] = -c[2] / safe
    if dim == 4:
        out[3] = c[3] / safe
    out[:, bad] = 0.0
    mask = bad | (S.mask if S.mask is not None else False)
    ix0, iy0 = S.grid.nx // 2, S.grid.ny // 2
    return SurfaceMap(S.grid, out, out[:, iy0, ix0].copy(),
                      mask if np.any(mask) else None,
                      diagnostics={"inverted_from": True, "flagged": int(np.sum(bad))})
