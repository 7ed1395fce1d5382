"""Spinor fields, the Dirac operators D and Dvee, quaternionic extension, gauge moves.

Operator conventions (component form, rows fixed):

    D   = [[0, d],[-db, 0]] + [[U, 0],[0, conj(U)]]
    D psi  = ( d psi2 + U psi1,  -db psi1 + conj(U) psi2 )
    Dvee   : U and conj(U) swapped on the diagonal.

The row expansion is validated against the metric / conformality identities of
the Weierstrass representation in the test suite rather than assumed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (ComplexField, Grid2D, GridConfigError, constant_field,
                   wirtinger_derivative)


class GaugeError(ValueError):
    pass


@dataclass
class SpinorField:
    """Pair (psi1, psi2) on a shared grid."""

    psi1: ComplexField
    psi2: ComplexField

    def __post_init__(self):
        if self.psi1.grid != self.psi2.grid:
            raise GridConfigError("spinor components must share the grid")

    @property
    def grid(self) -> Grid2D:
        return self.psi1.grid

    def max_abs(self) -> float:
        return max(self.psi1.max_abs(), self.psi2.max_abs())


@dataclass
class PotentialPair:
    """Dirac potential U and optional DSII auxiliary field V."""

    U: ComplexField
    V: ComplexField | None = None
    real_u: bool = False
    real_tol: float = 1e-10

    def __post_init__(self):
        if self.real_u:
            im = float(np.max(np.abs(self.U.values.imag)))
            scale = max(self.U.max_abs(), 1.0)
            if im > self.real_tol * scale:
                raise ValueError(f"R3 mode requires real U; max|Im U| = {im:g}")

    @property
    def grid(self) -> Grid2D:
        return self.U.grid


@dataclass
class Mat2Field:
    """2x2 complex matrix per node: [[e11, e12],[e21, e22]] of ComplexFields."""

    e11: ComplexField
    e12: ComplexField
    e21: ComplexField
    e22: ComplexField

    def __post_init__(self):
        g = self.e11.grid
        if any(e.grid != g for e in (self.e12, self.e21, self.e22)):
            raise GridConfigError("matrix entries must share the grid")

    @property
    def grid(self) -> Grid2D:
        return self.e11.grid

    def entries(self):
        return (self.e11, self.e12, self.e21, self.e22)

    @classmethod
    def from_values(cls, grid: Grid2D, v11, v12, v21, v22, mask=None) -> "Mat2Field":
        return cls(ComplexField(grid, v11, mask), ComplexField(grid, v12, mask),
                   ComplexField(grid, v21, mask), ComplexField(grid, v22, mask))

    @classmethod
    def constant(cls, grid: Grid2D, m) -> "Mat2Field":
        m = np.asarray(m, dtype=complex)
        return cls(constant_field(grid, m[0, 0]), constant_field(grid, m[0, 1]),
                   constant_field(grid, m[1, 0]), constant_field(grid, m[1, 1]))

    def __matmul__(self, other: "Mat2Field") -> "Mat2Field":
        a, b, c, d = self.entries()
        e, f, g, h = other.entries()
        return Mat2Field(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def __add__(self, other: "Mat2Field") -> "Mat2Field":
        return Mat2Field(*(x + y for x, y in zip(self.entries(), other.entries())))

    def __sub__(self, other: "Mat2Field") -> "Mat2Field":
        return Mat2Field(*(x - y for x, y in zip(self.entries(), other.entries())))

    def __neg__(self) -> "Mat2Field":
        return Mat2Field(*(-x for x in self.entries()))

    def scale(self, s) -> "Mat2Field":
        return Mat2Field(*(x * s for x in self.entries()))

    def transpose(self) -> "Mat2Field":
        return Mat2Field(self.e11, self.e21, self.e12, self.e22)

    def conj_entries(self) -> "Mat2Field":
        return Mat2Field(*(x.conj() for x in self.entries()))

    def det(self) -> ComplexField:
        return self.e11 * self.e22 - self.e12 * self.e21

    def inv(self, min_det: float = 0.0) -> "Mat2Field":
        d = self.det()
        mask = None
        dv = d.values
        if min_det > 0.0:
            bad = np.abs(dv) < min_det
            if bad.any():
                mask = bad
                dv = dv.copy()
                dv[bad] = 1.0
        dfield = ComplexField(self.grid, dv, _merge(d.mask, mask))
        return Mat2Field(self.e22 / dfield, -self.e12 / dfield,
                         -self.e21 / dfield, self.e11 / dfield)

    def wirtinger(self, direction: str, scheme: str = "central2") -> "Mat2Field":
        return Mat2Field(*(wirtinger_derivative(e, direction, scheme) for e in self.entries()))

    def at(self, ix: int, iy: int) -> np.ndarray:
        return np.array([[self.e11.values[iy, ix], self.e12.values[iy, ix]],
                         [self.e21.values[iy, ix], self.e22.values[iy, ix]]])

    def max_abs(self) -> float:
        return max(e.max_abs() for e in self.entries())

    def column_spinor(self, col: int = 0) -> SpinorField:
        if col == 0:
            return SpinorField(self.e11, self.e21)
        return SpinorField(self.e12, self.e22)


def _merge(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a | b


class QuatField(Mat2Field):
    """Mat2Field constrained to the quaternion pattern [[a, -conj(b)],[b, conj(a)]]."""

    @classmethod
    def from_components(cls, a: ComplexField, b: ComplexField) -> "QuatField":
        return cls(a, -b.conj(), b, a.conj())

    def pattern_residual(self) -> float:
        r1 = (self.e22 - self.e11.conj()).max_abs()
        r2 = (self.e12 + self.e21.conj()).max_abs()
        return max(r1, r2)


def quaternionize(psi: SpinorField) -> QuatField:
    """Psi = [[psi1, -conj(psi2)],[psi2, conj(psi1)]] per node."""
    return QuatField.from_components(psi.psi1, psi.psi2)


GAMMA = np.array([[0.0, 1.0], [-1.0, 0.0]])


def apply_D(U: PotentialPair | ComplexField, psi: SpinorField,
            scheme: str = "central2") -> SpinorField:
    """Residual of the Dirac operator: (d psi2 + U psi1, -db psi1 + conj(U) psi2)."""
    Uf = U.U if isinstance(U, PotentialPair) else U
    if Uf.grid != psi.grid:
        raise GridConfigError("potential and spinor grids differ")
    r1 = wirtinger_derivative(psi.psi2, "z", scheme) + Uf * psi.psi1
    r2 = -wirtinger_derivative(psi.psi1, "zbar", scheme) + Uf.conj() * psi.psi2
    return SpinorField(r1, r2)


def apply_Dvee(U: PotentialPair | ComplexField, phi: SpinorField,
               scheme: str = "central2") -> SpinorField:
    """Residual of the formally conjugate operator (conj(U) and U on the diagonal)."""
    Uf = U.U if isinstance(U, PotentialPair) else U
    if Uf.grid != phi.grid:
        raise GridConfigError("potential and spinor grids differ")
    r1 = wirtinger_derivative(phi.psi2, "z", scheme) + Uf.conj() * phi.psi1
    r2 = -wirtinger_derivative(phi.psi1, "zbar", scheme) + Uf * phi.psi2
    return SpinorField(r1, r2)


def dirac_residual_norm(U, psi, scheme: str = "central2", interior: int = 0,
                        vee: bool = False) -> float:
    """max |D psi| over the grid, optionally skipping a boundary margin."""
    r = (apply_Dvee if vee else apply_D)(U, psi, scheme)
    v = np.maximum(np.abs(r.psi1.values), np.abs(r.psi2.values))
    mask = _merge(r.psi1.mask, r.psi2.mask)
    if mask is not None:
        v = np.where(mask, 0.0, v)
    if interior:
        v = v[interior:-interior, interior:-interior]
    return float(np.max(v))


def sigma(psi: SpinorField) -> SpinorField:
    """Antiinvolution (psi1, psi2) -> (-conj(psi2), conj(psi1)); sigma^2 = -1."""
    return SpinorField(-psi.psi2.conj(), psi.psi1.conj())


def gauge_transform(psi: SpinorField, phi: SpinorField, U: ComplexField,
                    h: ComplexField, scheme: str = "central2",
                    holomorphy_tol: float = 1e-6):
    """Gauge move by a holomorphic h: psi1 -> e^h psi1, psi2 -> e^conj(h) psi2,
    phi1 -> e^-h phi1, phi2 -> e^-conj(h) phi2, U -> e^(conj(h)-h) U."""
    dbh = wirtinger_derivative(h, "zbar", scheme)
    hscale = max(h.max_abs(), 1.0)
    interior = dbh.values[1:-1, 1:-1] if not h.grid.periodic else dbh.values
    defect = float(np.max(np.abs(interior)))
    if defect > holomorphy_tol * hscale:
        raise GaugeError(f"h is not holomorphic: max|db h| = {defect:g}")
    eh = np.exp(h.values)
    ehb = np.exp(np.conj(h.values))
    g = h.grid
    psi_t = SpinorField(psi.psi1.like(psi.psi1.values * eh),
                        psi.psi2.like(psi.psi2.values * ehb))
    phi_t = SpinorField(phi.psi1.like(phi.psi1.values / eh),
                        phi.psi2.like(phi.psi2.values / ehb))
    U_t = ComplexField(g, U.values * ehb / eh, U.mask)
    return psi_t, phi_t, U_t


def save_spinorfield_csv(psi: SpinorField, csv_path, meta_path=None):
    """CSV columns ix, iy, re1, im1, re2, im2 with a JSON grid sidecar."""
    import json
    g = psi.grid
    ix = np.tile(np.arange(g.nx), g.ny)
    iy = np.repeat(np.arange(g.ny), g.nx)
    a = psi.psi1.values.ravel()
    b = psi.psi2.values.ravel()
    data = np.column_stack([ix, iy, a.real, a.imag, b.real, b.imag])
    np.savetxt(csv_path, data, delimiter=",", header="ix,iy,re1,im1,re2,im2",
               comments="", fmt=["%d", "%d"] + ["%.17g"] * 4)
    with open(meta_path or str(csv_path) + ".json", "w") as fh:
        json.dump(g.meta(), fh, indent=1, sort_keys=True)
