"""Complex-plane grids, Wirtinger derivatives, quadrature and path integration.

Conventions: z = x + i y, d = (d/dx - i d/dy)/2 (dering with respect to z),
db = (d/dx + i d/dy)/2 (with respect to zbar).  Field values are stored as
arrays of shape (ny, nx) indexed values[iy, ix].
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class GridConfigError(ValueError):
    pass


class SchemeError(ValueError):
    pass


class PathError(ValueError):
    pass


class MaskError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular sampling of a z-plane domain."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    periodic_x: bool = False
    periodic_y: bool = False

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise GridConfigError("degenerate bounds")
        if self.nx < 4 or self.ny < 4:
            raise GridConfigError("resolution must be >= 4 per axis")

    @property
    def hx(self) -> float:
        n = self.nx if self.periodic_x else self.nx - 1
        return (self.x_max - self.x_min) / n

    @property
    def hy(self) -> float:
        n = self.ny if self.periodic_y else self.ny - 1
        return (self.y_max - self.y_min) / n

    @property
    def periodic(self) -> bool:
        return self.periodic_x and self.periodic_y

    def xs(self) -> np.ndarray:
        return self.x_min + self.hx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.y_min + self.hy * np.arange(self.ny)

    def zmesh(self) -> np.ndarray:
        """Complex node coordinates, shape (ny, nx)."""
        return self.xs()[None, :] + 1j * self.ys()[:, None]

    def node_z(self, ix: int, iy: int) -> complex:
        return self.x_min + ix * self.hx + 1j * (self.y_min + iy * self.hy)

    def node_count(self) -> int:
        return self.nx * self.ny

    def meta(self) -> dict:
        return {
            "x_min": self.x_min, "x_max": self.x_max,
            "y_min": self.y_min, "y_max": self.y_max,
            "nx": self.nx, "ny": self.ny,
            "periodic_x": self.periodic_x, "periodic_y": self.periodic_y,
        }


def make_grid(bounds, resolution, periodicity=False) -> Grid2D:
    """Build a Grid2D from (x_min, x_max, y_min, y_max), (nx, ny) and periodic flags."""
    x_min, x_max, y_min, y_max = bounds
    if np.isscalar(resolution):
        nx = ny = int(resolution)
    else:
        nx, ny = resolution
    if isinstance(periodicity, bool):
        px = py = periodicity
    else:
        px, py = periodicity
    return Grid2D(float(x_min), float(x_max), float(y_min), float(y_max),
                  int(nx), int(ny), bool(px), bool(py))


def square_grid(half_width: float, n: int, periodic: bool = False) -> Grid2D:
    return make_grid((-half_width, half_width, -half_width, half_width), (n, n), periodic)


@dataclass
class ComplexField:
    """Complex values sampled over a Grid2D.  mask marks singular/flagged nodes."""

    grid: Grid2D
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise GridConfigError(
                f"values shape {self.values.shape} != grid shape {(self.grid.ny, self.grid.nx)}")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)

    def like(self, values, mask=None) -> "ComplexField":
        return ComplexField(self.grid, values, self.mask if mask is None else mask)

    def conj(self) -> "ComplexField":
        return self.like(np.conj(self.values))

    def abs2(self) -> "ComplexField":
        return self.like(np.abs(self.values) ** 2)

    def max_abs(self) -> float:
        if self.mask is not None and self.mask.any():
            return float(np.max(np.abs(self.values[~self.mask]))) if (~self.mask).any() else 0.0
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        return self._binop(other, np.add)

    def __radd__(self, other):
        return self._binop(other, np.add)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    def __rmul__(self, other):
        return self._binop(other, np.multiply)

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __neg__(self):
        return self.like(-self.values)

    def _binop(self, other, op):
        if isinstance(other, ComplexField):
            if other.grid != self.grid:
                raise GridConfigError("grid mismatch")
            m = _merge_masks(self.mask, other.mask)
            return ComplexField(self.grid, op(self.values, other.values), m)
        return self.like(op(self.values, other))


def _merge_masks(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a | b


def field_from_function(grid: Grid2D, fn) -> ComplexField:
    """Sample fn(z) over the grid; non-finite values become masked nodes."""
    vals = np.asarray(fn(grid.zmesh()), dtype=np.complex128)
    bad = ~np.isfinite(vals)
    if bad.any():
        vals = vals.copy()
        vals[bad] = 0.0
        return ComplexField(grid, vals, bad)
    return ComplexField(grid, vals)


def constant_field(grid: Grid2D, value) -> ComplexField:
    return ComplexField(grid, np.full((grid.ny, grid.nx), value, dtype=np.complex128))


@dataclass
class Form1:
    """1-form p dz + q dzbar over a shared grid."""

    p: ComplexField
    q: ComplexField

    def __post_init__(self):
        if self.p.grid != self.q.grid:
            raise GridConfigError("p, q must share the grid")

    @property
    def grid(self) -> Grid2D:
        return self.p.grid


# ---------------------------------------------------------------------------
# derivatives


def _ddx(values: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2 * h)
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
    # one-sided second order at the edges
    out[:, 0] = (-3 * values[:, 0] + 4 * values[:, 1] - values[:, 2]) / (2 * h)
    out[:, -1] = (3 * values[:, -1] - 4 * values[:, -2] + values[:, -3]) / (2 * h)
    return out


def _ddy(values: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2 * h)
    out = np.empty_like(values)
    out[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * h)
    out[0, :] = (-3 * values[0, :] + 4 * values[1, :] - values[2, :]) / (2 * h)
    out[-1, :] = (3 * values[-1, :] - 4 * values[-2, :] + values[-3, :]) / (2 * h)
    return out


def spectral_wavenumbers(grid: Grid2D):
    kx = 2 * np.pi * np.fft.fftfreq(grid.nx, d=grid.hx)
    ky = 2 * np.pi * np.fft.fftfreq(grid.ny, d=grid.hy)
    return kx[None, :], ky[:, None]


def _spectral_dx_dy(f: ComplexField):
    kx, ky = spectral_wavenumbers(f.grid)
    fh = np.fft.fft2(f.values)
    fx = np.fft.ifft2(1j * kx * fh)
    fy = np.fft.ifft2(1j * ky * fh)
    return fx, fy


def wirtinger_derivative(f: ComplexField, direction: str = "z",
                         scheme: str = "central2") -> ComplexField:
    """d f / dz or d f / dzbar with central-difference or spectral scheme."""
    if direction not in ("z", "zbar"):
        raise ValueError(f"unknown direction {direction!r}")
    if scheme == "central2":
        fx = _ddx(f.values, f.grid.hx, f.grid.periodic_x)
        fy = _ddy(f.values, f.grid.hy, f.grid.periodic_y)
    elif scheme == "spectral":
        if not f.grid.periodic:
            raise SchemeError("spectral scheme requires a periodic grid")
        fx, fy = _spectral_dx_dy(f)
    else:
        raise SchemeError(f"unknown scheme {scheme!r}")
    if direction == "z":
        return f.like((fx - 1j * fy) / 2)
    return f.like((fx + 1j * fy) / 2)


def dz(f: ComplexField, scheme: str = "central2") -> ComplexField:
    return wirtinger_derivative(f, "z", scheme)


def dzbar(f: ComplexField, scheme: str = "central2") -> ComplexField:
    return wirtinger_derivative(f, "zbar", scheme)


# ---------------------------------------------------------------------------
# quadrature


def _axis_weights(n: int, h: float, periodic: bool) -> np.ndarray:
    w = np.full(n, h)
    if not periodic:
        w[0] = w[-1] = h / 2
    return w


def integrate2d(f: ComplexField, mask_policy: str = "reject") -> complex:
    """Trapezoid (non-periodic) / rectangle (periodic) quadrature of f over the grid.

    Masked nodes require an explicit policy: 'neighbor_mean' patches the value
    with the mean over unmasked 8-neighbours, 'zero' drops it, 'reject' raises.
    """
    vals = f.values
    if f.mask is not None and f.mask.any():
        if mask_policy == "reject":
            raise MaskError("field has masked nodes; choose a mask policy")
        vals = vals.copy()
        if mask_policy == "zero":
            vals[f.mask] = 0.0
        elif mask_policy == "neighbor_mean":
            for iy, ix in zip(*np.nonzero(f.mask)):
                acc, cnt = 0.0, 0
                for dy2 in (-1, 0, 1):
                    for dx2 in (-1, 0, 1):
                        jy, jx = iy + dy2, ix + dx2
                        if (dy2 == 0 and dx2 == 0) or not (0 <= jy < f.grid.ny and 0 <= jx < f.grid.nx):
                            continue
                        if not f.mask[jy, jx]:
                            acc += vals[jy, jx]
                            cnt += 1
                vals[iy, ix] = acc / cnt if cnt else 0.0
        else:
            raise MaskError(f"unknown mask policy {mask_policy!r}")
    wx = _axis_weights(f.grid.nx, f.grid.hx, f.grid.periodic_x)
    wy = _axis_weights(f.grid.ny, f.grid.hy, f.grid.periodic_y)
    return complex(np.sum((vals * wx[None, :]) * wy[:, None]))


# ---------------------------------------------------------------------------
# path integration


def lpath(grid: Grid2D, start, end, order: str = "x_first"):
    """Axis-aligned L-shaped node path between two (ix, iy) nodes."""
    ix0, iy0 = start
    ix1, iy1 = end
    path = [(ix0, iy0)]
    def walk_x(iy):
        step = 1 if ix1 >= ix0 else -1
        for ix in range(ix0 + step, ix1 + step, step):
            path.append((ix, iy))
    def walk_y(ix):
        step = 1 if iy1 >= iy0 else -1
        for iy in range(iy0 + step, iy1 + step, step):
            path.append((ix, iy))
    if order == "x_first":
        walk_x(iy0)
        walk_y(ix1)
    elif order == "y_first":
        walk_y(ix0)
        walk_x(iy1)
    else:
        raise ValueError(f"unknown order {order!r}")
    return path


def rect_loop(ix0, iy0, ix1, iy1):
    """Closed rectangular loop through the four corner nodes."""
    p = [(ix, iy0) for ix in range(ix0, ix1 + 1)]
    p += [(ix1, iy) for iy in range(iy0 + 1, iy1 + 1)]
    p += [(ix, iy1) for ix in range(ix1 - 1, ix0 - 1, -1)]
    p += [(ix0, iy) for iy in range(iy1 - 1, iy0 - 1, -1)]
    return p


def path_integrate(form: Form1, path) -> complex:
    """Trapezoidal line integral of p dz + q dzbar along a grid node path."""
    grid = form.grid
    path = list(path)
    if len(path) < 2:
        return 0.0 + 0.0j
    p, q = form.p.values, form.q.values
    total = 0.0 + 0.0j
    for (ixa, iya), (ixb, iyb) in zip(path[:-1], path[1:]):
        if abs(ixb - ixa) + abs(iyb - iya) != 1:
            raise PathError(f"non-adjacent nodes {(ixa, iya)} -> {(ixb, iyb)}")
        za, zb = grid.node_z(ixa, iya), grid.node_z(ixb, iyb)
        dzseg = zb - za
        pm = (p[iya, ixa] + p[iyb, ixb]) / 2
        qm = (q[iya, ixa] + q[iyb, ixb]) / 2
        total += pm * dzseg + qm * np.conj(dzseg)
    return complex(total)


def antiderivative(form: Form1, basepoint=(0, 0), order: str = "x_first") -> ComplexField:
    """F(P) = int_{P0}^{P} (p dz + q dzbar) along L-paths, vectorised over all nodes.

    x_first runs along the basepoint row and then up/down each column;
    y_first the other way round.
    """
    grid = form.grid
    ix0, iy0 = basepoint
    p, q = form.p.values, form.q.values
    hx, hy = grid.hx, grid.hy
    gx = p + q                 # integrand along x: dz = dx
    gy = 1j * (p - q)          # integrand along y: dz = i dy
    if order == "x_first":
        row = _cumtrapz_from(gx[iy0, :], hx, ix0)           # along basepoint row
        cols = _cumtrapz_from(gy, hy, iy0, axis=0)          # along every column
        out = row[None, :] + cols
    elif order == "y_first":
        col = _cumtrapz_from(gy[:, ix0], hy, iy0)
        rows = _cumtrapz_from(gx, hx, ix0, axis=1)
        out = col[:, None] + rows
    else:
        raise ValueError(f"unknown order {order!r}")
    return ComplexField(grid, out, _merge_masks(form.p.mask, form.q.mask))


def _cumtrapz_from(vals: np.ndarray, h: float, i0: int, axis: int = -1) -> np.ndarray:
    """Cumulative trapezoid along axis, anchored to zero at index i0."""
    moved = np.moveaxis(vals, axis, -1)
    seg = (moved[..., :-1] + moved[..., 1:]) * (h / 2)
    cum = np.zeros_like(moved)
    cum[..., 1:] = np.cumsum(seg, axis=-1)
    cum = cum - cum[..., i0:i0 + 1]
    return np.moveaxis(cum, -1, axis)


def closedness_defect(form: Form1, scheme: str = "central2") -> float:
    """max |d_zbar p - d_z q|, the discrete exterior-derivative residual."""
    r = wirtinger_derivative(form.p, "zbar", scheme) - wirtinger_derivative(form.q, "z", scheme)
    return r.max_abs()


# ---------------------------------------------------------------------------
# serialization


def save_complexfield_csv(f: ComplexField, csv_path, meta_path=None):
    """CSV columns ix, iy, re, im plus a JSON sidecar with grid metadata."""
    ny, nx = f.grid.ny, f.grid.nx
    ix = np.tile(np.arange(nx), ny)
    iy = np.repeat(np.arange(ny), nx)
    flat = f.values.ravel()
    data = np.column_stack([ix, iy, flat.real, flat.imag])
    np.savetxt(csv_path, data, delimiter=",", header="ix,iy,re,im",
               comments="", fmt=["%d", "%d", "%.17g", "%.17g"])
    meta = dict(f.grid.meta())
    if f.mask is not None:
        meta["masked_nodes"] = [[int(a), int(b)] for b, a in zip(*np.nonzero(f.mask))]
    with open(meta_path or str(csv_path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)


def load_complexfield_csv(csv_path, meta_path=None) -> ComplexField:
    with open(meta_path or str(csv_path) + ".json") as fh:
        meta = json.load(fh)
    masked = meta.pop("masked_nodes", None)
    grid = Grid2D(**meta)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    vals = np.zeros((grid.ny, grid.nx), dtype=np.complex128)
    vals[data[:, 1].astype(int), data[:, 0].astype(int)] = data[:, 2] + 1j * data[:, 3]
    mask = None
    if masked:
        mask = np.zeros((grid.ny, grid.nx), dtype=bool)
        for ix, iy in masked:
            mask[iy, ix] = True
    return ComplexField(grid, vals, mask)
