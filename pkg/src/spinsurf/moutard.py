"""Quaternionic Moutard transformation: the forms omega / omega1, the surface
matrix S, the K matrix, transformed spinors and DSII potential updates.

Fixed conventions (selected by requiring closedness of omega and the recovery
of the heat-polynomial potentials, see tests):

    Gamma = [[0, 1], [-1, 0]]
    X^T   = plain matrix transpose inside omega and K (the conjugate-transpose
            candidate fails closedness and is kept only behind the switch)
    omega(Phi,Psi)  = -(i/2)(Phi^T s3 Psi + Phi^T Psi) dz
                      -(i/2)(Phi^T s3 Psi - Phi^T Psi) dzbar
    S(Phi,Psi)      = Gamma * int omega  (+ Gamma * int omega1 dt when
                      time-augmented), + integration constant
    K(Phi,Psi)      = Psi S^-1 Gamma Phi^T Gamma^-1 = [[i conj(W), a],
                                                       [-conj(a), -i W]]
    U~ = U + W,  V~ = V + 2 i a_z.

Swapped-order time term: omega1 is antisymmetric under argument swap combined
with transposition, so the augmented partner matrix is S(Psi,Phi) =
Gamma S(Phi,Psi)^T Gamma, which is exactly the normalization condition
required of the pair.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dirac import GAMMA, Mat2Field, SpinorField, quaternionize
from .exactpoly import (BiPoly, GAMMA_EXACT, RMat2, RationalFn, T, Z, ZBAR,
                        heat_extend)
from .grid import (ComplexField, Form1, Grid2D, antiderivative,
                   closedness_defect, constant_field, wirtinger_derivative)


class ClosednessError(RuntimeError):
    pass


class NormalizationError(RuntimeError):
    pass


_SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]])
_P1 = np.array([[1.0, 0.0], [0.0, 0.0]])
_P2 = np.array([[0.0, 0.0], [0.0, 1.0]])


@dataclass
class MatForm1:
    """Matrix-valued 1-form: dz and dzbar coefficient matrices."""

    dz: Mat2Field
    dzb: Mat2Field

    def form1(self, i: int, j: int) -> Form1:
        return Form1(self.dz.entries()[2 * i + j], self.dzb.entries()[2 * i + j])

    def max_closedness_defect(self, scheme: str = "central2") -> float:
        return max(closedness_defect(self.form1(i, j), scheme)
                   for i in range(2) for j in range(2))


def _const_mat(grid: Grid2D, m) -> Mat2Field:
    return Mat2Field.constant(grid, np.asarray(m, dtype=complex))


def omega(Phi: Mat2Field, Psi: Mat2Field, convention: str = "transpose") -> MatForm1:
    """The closed matrix 1-form pairing Phi and Psi."""
    if Phi.grid != Psi.grid:
        raise ValueError("grid mismatch")
    if convention == "transpose":
        Pt = Phi.transpose()
    elif convention == "conj_transpose":
        Pt = Phi.transpose().conj_entries()
    else:
        raise ValueError(f"unknown convention {convention!r}")
    s3 = _const_mat(Phi.grid, _SIGMA3)
    A = Pt @ (s3 @ Psi)
    B = Pt @ Psi
    dz = (A + B).scale(-0.5j)
    dzb = (A - B).scale(-0.5j)
    return MatForm1(dz, dzb)


def omega1(Phi: Mat2Field, Psi: Mat2Field, scheme: str = "central2",
           derivatives=None, convention: str = "transpose") -> Mat2Field:
    """dt coefficient of the time augmentation of S(Phi, Psi).

    derivatives may supply (Phi_z, Phi_zb, Psi_z, Psi_zb) as Mat2Fields; they
    are computed with the given scheme otherwise.
    """
    if derivatives is None:
        Phz = Phi.wirtinger("z", scheme)
        Phzb = Phi.wirtinger("zbar", scheme)
        Psz = Psi.wirtinger("z", scheme)
        Pszb = Psi.wirtinger("zbar", scheme)
    else:
        Phz, Phzb, Psz, Pszb = derivatives
    tr = (lambda M: M.transpose()) if convention == "transpose" \
        else (lambda M: M.transpose().conj_entries())
    P1 = _const_mat(Phi.grid, _P1)
    P2 = _const_mat(Phi.grid, _P2)
    left = (tr(Phz) @ P1 + tr(Phzb) @ P2) @ Psi
    right = tr(Phi) @ (P1 @ Psz + P2 @ Pszb)
    return left - right


@dataclass
class SMatrix:
    """Integrated surface matrix S = Gamma * int(omega [+ omega1 dt]) + constant."""

    S: Mat2Field
    constant: np.ndarray
    base_node: tuple
    time_augmented: bool = False
    loop_defect: float = 0.0

    @property
    def grid(self) -> Grid2D:
        return self.S.grid

    def with_constant_added(self, C: np.ndarray) -> "SMatrix":
        C = np.asarray(C, dtype=complex)
        Sm = self.S + _const_mat(self.grid, C)
        return SMatrix(Sm, self.constant + C, self.base_node, self.time_augmented,
                       self.loop_defect)

    def det(self) -> ComplexField:
        return self.S.det()

    def to_json(self) -> str:
        g = self.grid
        payload = {
            "grid": g.meta(),
            "base_node": list(self.base_node),
            "constant": [[_c2l(self.constant[i, j]) for j in range(2)] for i in range(2)],
            "time_augmented": self.time_augmented,
            "loop_defect": self.loop_defect,
            "entries": {name: [e.values.real.tolist(), e.values.imag.tolist()]
                        for name, e in zip(("e11", "e12", "e21", "e22"), self.S.entries())},
        }
        return json.dumps(payload)


def _c2l(v):
    return [float(np.real(v)), float(np.imag(v))]


def build_S(Phi: Mat2Field, Psi: Mat2Field, base_node=None, constant=None,
            time_offset: np.ndarray | None = None, scheme: str = "central2",
            convention: str = "transpose", defect_tol: float | None = None) -> SMatrix:
    """Spatial integration of Gamma * omega(Phi, Psi) along L-paths.

    `constant` is the value added after anchoring the integral to zero at the
    base node; `time_offset` adds the accumulated Gamma * int omega1 dt
    contribution when assembling a time-augmented S at fixed t.
    """
    grid = Phi.grid
    if base_node is None:
        base_node = (grid.nx // 2, grid.ny // 2)
    w = omega(Phi, Psi, convention)
    gdz = _const_mat(grid, GAMMA) @ w.dz
    gdzb = _const_mat(grid, GAMMA) @ w.dzb
    defect = MatForm1(gdz, gdzb).max_closedness_defect(scheme)
    scale = max(gdz.max_abs(), gdzb.max_abs(), 1.0)
    if defect_tol is None:
        defect_tol = 100.0 * max(grid.hx, grid.hy) ** 2
    if defect > defect_tol * scale:
        raise ClosednessError(f"omega not closed: defect {defect:.3g} (tol {defect_tol * scale:.3g})")
    entries = []
    for k in range(4):
        p = gdz.entries()[k]
        q = gdzb.entries()[k]
        entries.append(antiderivative(Form1(p, q), base_node).values)
    C = np.zeros((2, 2), dtype=complex) if constant is None else np.asarray(constant, complex)
    if time_offset is not None:
        C = C + np.asarray(time_offset, dtype=complex)
    vals = [entries[k] + C[k // 2, k % 2] for k in range(4)]
    S = Mat2Field.from_values(grid, *vals)
    return SMatrix(S, C, tuple(base_node), time_augmented=time_offset is not None,
                   loop_defect=defect)


def time_offset_integral(phi_of_t, psi_of_t, t_grid, base_node, grid: Grid2D,
                         scheme: str = "central2") -> np.ndarray:
    """Gamma * int_0^T omega1 dt at the base node, trapezoid over the t samples.

    phi_of_t / psi_of_t map a time to the Mat2Field spinor extensions.
    """
    ix, iy = base_node
    vals = []
    for t in t_grid:
        w1 = omega1(phi_of_t(t), psi_of_t(t), scheme)
        vals.append(GAMMA @ w1.at(ix, iy))
    vals = np.array(vals)
    out = np.zeros((2, 2), dtype=complex)
    for k in range(len(t_grid) - 1):
        out += (vals[k] + vals[k + 1]) / 2 * (t_grid[k + 1] - t_grid[k])
    return out


def normalize_S_pair(SA: SMatrix, SB: SMatrix, tol: float = 1e-8):
    """Adjust SB's constant so Gamma SA^-1 Gamma = (SB^-1)^T, i.e. SB = Gamma SA^T Gamma.

    Returns (SB_adjusted, C, residual).  The optimal constant is the mean of
    Gamma SA^T Gamma - SB over the grid (closed-form least squares).
    """
    target = _gamma_T_gamma(SA.S)
    diff = target - SB.S
    C = np.array([[np.mean(e.values) for e in diff.entries()[:2]],
                  [np.mean(e.values) for e in diff.entries()[2:]]])
    SBn = SB.with_constant_added(C)
    res = (target - SBn.S).max_abs()
    scale = max(SA.S.max_abs(), 1.0)
    if res > tol * scale:
        raise NormalizationError(f"normalization residual {res:.3g} exceeds {tol:.3g} x scale")
    return SBn, C, res


def _gamma_T_gamma(M: Mat2Field) -> Mat2Field:
    g = _const_mat(M.grid, GAMMA)
    return g @ M.transpose() @ g


@dataclass
class KData:
    """W and a extracted from K = Psi S^-1 Gamma Phi^T Gamma^-1."""

    W: ComplexField
    a: ComplexField
    pattern_residual: float


def k_matrix(Psi: Mat2Field, S: SMatrix | Mat2Field, Phi: Mat2Field,
             min_det: float = 1e-12, convention: str = "transpose",
             pattern_tol: float = 1e-8) -> KData:
    """Extract (W, a) from the K matrix; block-pattern consistency is asserted."""
    Sm = S.S if isinstance(S, SMatrix) else S
    Sinv = Sm.inv(min_det=min_det * max(Sm.max_abs(), 1.0) ** 2)
    g = _const_mat(Sm.grid, GAMMA)
    ginv = _const_mat(Sm.grid, -GAMMA)
    Pt = Phi.transpose() if convention == "transpose" else Phi.transpose().conj_entries()
    K = Psi @ Sinv @ g @ Pt @ ginv
    W = ComplexField(Sm.grid, 1j * K.e22.values, K.e22.mask)
    a = K.e12
    scale = max(W.max_abs(), a.max_abs(), 1.0)
    r1 = np.abs(K.e11.values - 1j * np.conj(W.values))
    r2 = np.abs(K.e21.values + np.conj(a.values))
    mask = K.e11.mask
    if mask is not None:
        r1, r2 = np.where(mask, 0, r1), np.where(mask, 0, r2)
    residual = float(max(r1.max(), r2.max()))
    if residual > pattern_tol * scale:
        raise NormalizationError(f"K block pattern violated: residual {residual:.3g}")
    return KData(W, a, residual)


# ---------------------------------------------------------------------------
# the transformation


@dataclass
class MoutardTransform:
    """Context for transforming solutions on a fixed background (Psi0, Phi0)."""

    Psi0: Mat2Field
    Phi0: Mat2Field
    S0: SMatrix                        # S(Phi0, Psi0), invertible where used
    SB0: SMatrix                       # S(Psi0, Phi0), normalized partner
    kdata: KData

    @classmethod
    def from_background(cls, psi0: SpinorField, phi0: SpinorField, constant0,
                        base_node=None, scheme: str = "central2",
                        time_offset=None) -> "MoutardTransform":
        Psi0 = quaternionize(psi0)
        Phi0 = quaternionize(phi0)
        S0 = build_S(Phi0, Psi0, base_node=base_node, constant=constant0,
                     time_offset=time_offset, scheme=scheme)
        SB_raw = build_S(Psi0, Phi0, base_node=S0.base_node, scheme=scheme)
        SB0, _, _ = normalize_S_pair(S0, SB_raw)
        kd = k_matrix(Psi0, S0, Phi0)
        return cls(Psi0, Phi0, S0, SB0, kd)

    def transform(self, psi: SpinorField, phi: SpinorField, constP=None,
                  constBP=None, scheme: str = "central2") -> tuple[SpinorField, SpinorField]:
        """Moutard-transform another solution pair of the same background.

        The integration constants of S(Phi0, Psi) / S(Psi0, Phi) default to the
        right-linear extension C0 * Psi0(b)^-1 Psi(b), which makes the map
        linear in (Psi, Phi) and annihilates the background pair exactly;
        any other quaternion constant shifts the output by another solution.
        """
        Psi = quaternionize(psi)
        Phi = quaternionize(phi)
        bx, by = self.S0.base_node
        if constP is None:
            q = np.linalg.solve(self.Psi0.at(bx, by), Psi.at(bx, by))
            constP = self.S0.constant @ q
        if constBP is None:
            p = np.linalg.solve(self.Phi0.at(bx, by), Phi.at(bx, by))
            constBP = self.SB0.constant @ p
        SP = build_S(self.Phi0, Psi, base_node=self.S0.base_node,
                     constant=constP, scheme=scheme)
        SBP = build_S(self.Psi0, Phi, base_node=self.S0.base_node,
                      constant=constBP, scheme=scheme)
        eps = 1e-12 * max(self.S0.S.max_abs(), 1.0) ** 2
        Psit = Psi - self.Psi0 @ self.S0.S.inv(min_det=eps) @ SP.S
        Phit = Phi - self.Phi0 @ self.SB0.S.inv(min_det=eps) @ SBP.S
        return Psit.column_spinor(0), Phit.column_spinor(0)

    def transformed_potentials(self, U: ComplexField, V: ComplexField | None = None,
                               scheme: str = "central2"):
        return moutard_dsii(U, V, self.kdata, scheme)

    def inverted_surface_spinors(self) -> tuple[SpinorField, SpinorField]:
        """Spinors representing the inverted surface S^-1 with potential U + W."""
        eps = 1e-12 * max(self.S0.S.max_abs(), 1.0) ** 2
        Psis = self.Psi0 @ self.S0.S.inv(min_det=eps)
        det = self.S0.det()
        dv = det.values
        bad = np.abs(dv) < eps
        mask = (det.mask | bad) if det.mask is not None else (bad if bad.any() else None)
        dv = np.where(bad, 1.0, dv)
        inv_det = ComplexField(det.grid, 1.0 / dv, mask)
        Phis = (self.Phi0 @ self.S0.S).scale(-1.0)
        Phis = Mat2Field(*(e * inv_det for e in Phis.entries()))
        return Psis.column_spinor(0), Phis.column_spinor(0)


def moutard_spinors(psi0: SpinorField, phi0: SpinorField, psi: SpinorField,
                    phi: SpinorField, constant0, base_node=None,
                    scheme: str = "central2"):
    """One-shot wrapper: background + pair in, transformed pair out."""
    ctx = MoutardTransform.from_background(psi0, phi0, constant0, base_node, scheme)
    return ctx.transform(psi, phi, scheme=scheme)


def moutard_dsii(U: ComplexField | None, V: ComplexField | None, kdata: KData,
                 scheme: str = "central2"):
    """Potential update: U~ = U + W, V~ = V + 2 i a_z."""
    W, a = kdata.W, kdata.a
    Ut = W if U is None else U + W
    az = wirtinger_derivative(a, "z", scheme)
    Vt = 2j * az if V is None else V + 2j * az
    return Ut, Vt


def save_kdata_csv(kd: KData, csv_path):
    g = kd.W.grid
    ix = np.tile(np.arange(g.nx), g.ny)
    iy = np.repeat(np.arange(g.ny), g.nx)
    Wv, av = kd.W.values.ravel(), kd.a.values.ravel()
    data = np.column_stack([ix, iy, Wv.real, Wv.imag, av.real, av.imag])
    np.savetxt(csv_path, data, delimiter=",", header="ix,iy,reW,imW,rea,ima",
               comments="", fmt=["%d", "%d"] + ["%.17g"] * 4)


# ---------------------------------------------------------------------------
# exact (rational-arithmetic) layer for heat-polynomial backgrounds


def heat_antiderivative(f: BiPoly) -> BiPoly:
    """The heat z-antiderivative: F' = f, F_t = i F_zz, F(0, 0) = 0.

    The t-dependence is regenerated by heat_extend from f(., 0)."""
    f0 = BiPoly({k: v for k, v in f.coef.items() if k[2] == 0})
    prim = BiPoly({(k[0] + 1, 0, 0, k[3], k[4]): v / (k[0] + 1)
                   for k, v in f0.coef.items()})
    F = heat_extend(prim)
    if not (F.wirtinger("z") - f).is_zero(1e-12, max(f.max_abs(), 1.0)):
        raise ValueError("datum was not a heat polynomial")
    return F


@dataclass
class ExactMoutardData:
    """Closed-form Moutard chain for the trivial background with heat datum f."""

    f: BiPoly
    S0: RMat2
    K: RMat2
    W: RationalFn
    a: RationalFn
    psi0: tuple
    phi0: tuple

    def tilde_psi_for_linear_datum(self) -> tuple[RationalFn, RationalFn]:
        """Transformed spinor of psi = (z, 0) (anti-heat datum h = z)."""
        f = self.f
        F1 = heat_antiderivative(f)
        SP = RMat2([[RationalFn(Z * Z * 0.5 - 1j * T), RationalFn(1j * (ZBAR * f.conj() - F1.conj()))],
                    [RationalFn(1j * (Z * f - F1)), RationalFn(ZBAR * ZBAR * 0.5 + 1j * T)]])
        Psi = RMat2([[RationalFn(Z), 0], [0, RationalFn(ZBAR)]])
        Psi0 = _quat_exact(*self.psi0)
        Psit = Psi - Psi0 * self.S0.inv() * SP
        return Psit[0, 0], Psit[1, 0]

    def tilde_phi_for_identity_datum(self) -> tuple[RationalFn, RationalFn]:
        """Transformed phi = (1, 0) through the normalized partner matrix."""
        SB = GAMMA_EXACT * self.S0.transpose() * GAMMA_EXACT
        SBP = RMat2([[RationalFn(1j * Z), 0], [0, RationalFn(-1j * ZBAR)]])
        Phi = RMat2([[1, 0], [0, 1]])
        Phi0 = _quat_exact(*self.phi0)
        Phit = Phi - Phi0 * SB.inv() * SBP
        return Phit[0, 0], Phit[1, 0]

    def inverted_surface_spinors(self):
        Psi0 = _quat_exact(*self.psi0)
        Phi0 = _quat_exact(*self.phi0)
        Psis = Psi0 * self.S0.inv()
        Phis = -(Phi0 * self.S0) * (RationalFn(1) / self.S0.det())
        return (Psis[0, 0], Psis[1, 0]), (Phis[0, 0], Phis[1, 0])


def _quat_exact(p1, p2) -> RMat2:
    p1 = p1 if isinstance(p1, RationalFn) else RationalFn(p1)
    p2 = p2 if isinstance(p2, RationalFn) else RationalFn(p2)
    return RMat2([[p1, -p2.conj()], [p2, p1.conj()]])


def heat_datum_spinors(f: BiPoly):
    """Background spinors of the graph surface of a heat polynomial:
    psi0 = (0, 1), phi0 = (f', i)."""
    return (RationalFn(BiPoly.zero()), RationalFn(1)), \
        (RationalFn(f.wirtinger("z")), RationalFn(1j * BiPoly.const(1.0)))


def moutard_exact(f: BiPoly) -> ExactMoutardData:
    """Exact K-matrix chain on the trivial background for heat datum f.

    S0 = [[i conj(f), -z],[zbar, -i f]] closes the spatial and time parts of
    Gamma * int(omega + omega1) with zero constants; K then recovers the
    heat-polynomial potentials W = i(z f' - f)/rho, a = -i(zbar + f' conj(f))/rho.
    """
    fb = f.conj()
    S0 = RMat2([[RationalFn(1j * fb), RationalFn(-Z)],
                [RationalFn(ZBAR), RationalFn(-1j * f)]])
    psi0, phi0 = heat_datum_spinors(f)
    Psi0 = _quat_exact(*psi0)
    Phi0 = _quat_exact(*phi0)
    K = Psi0 * S0.inv() * GAMMA_EXACT * Phi0.transpose() * GAMMA_EXACT.inv()
    W = 1j * K[1, 1]
    a = K[0, 1]
    return ExactMoutardData(f, S0, K, W, a, psi0, phi0)


def heat_datum_fields(f: BiPoly, grid: Grid2D, t: float, cval=None):
    """Sample the background spinors and their quaternion extensions on a grid."""
    kw = {"t": float(t)}
    if cval is not None:
        kw["c"] = complex(cval)
    zm = grid.zmesh()
    fp = f.wirtinger("z")
    phi1 = np.asarray(fp.eval(z=zm, **kw), dtype=complex) + np.zeros_like(zm)
    psi0 = SpinorField(constant_field(grid, 0.0), constant_field(grid, 1.0))
    phi0 = SpinorField(ComplexField(grid, phi1), constant_field(grid, 1j))
    return psi0, phi0


def heat_smatrix_values(f: BiPoly, grid: Grid2D, t: float, cval=None) -> Mat2Field:
    """Closed-form S(Phi0, Psi0) = [[i conj(f), -z],[zbar, -i f]] sampled on a grid."""
    kw = {"t": float(t)}
    if cval is not None:
        kw["c"] = complex(cval)
    zm = grid.zmesh()
    fv = np.asarray(f.eval(z=zm, **kw), dtype=complex) + np.zeros_like(zm)
    return Mat2Field.from_values(grid, 1j * np.conj(fv), -zm, np.conj(zm), -1j * fv)
