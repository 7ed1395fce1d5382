"""Exact Davey-Stewartson II solutions from heat polynomials, residual checkers,
nonlocal constraint inversion, physical form, norms and singularity analysis.

Canonical normalization (fixed for the whole package):

    U_t = i (U_zz + U_zbzb + (V + conj(V)) U),     V_zb = 2 (|U|^2)_z      (*)

The heat-polynomial family

    U = i (z f' - f) / rho,   a = -i (zbar + f' conj(f)) / rho,   V = 2 i a_z,
    rho = |z|^2 + |f|^2,      f_t = i f_zz,

satisfies (*) exactly as a rational identity -- checked in exact arithmetic by
dsii_residual_exact.  (The commonly quoted variant with the coupling doubled
and the constraint halved is reached by relabelling V -> V/2, see
to_halved_v_form.)
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exactpoly import (BiPoly, C, RationalFn, T, Z, ZBAR, heat_extend,
                        heat_residual)
from .grid import (ComplexField, Grid2D, SchemeError, integrate2d,
                   spectral_wavenumbers, wirtinger_derivative)


class InvalidDatumError(ValueError):
    pass


class DecayError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# exact solutions


@dataclass
class ExactSolution:
    """A DSII solution built from a heat polynomial f(z, t)."""

    f: BiPoly
    U: RationalFn
    a: RationalFn
    V: RationalFn
    c: complex | str | None = None
    name: str = "custom"

    @property
    def den(self) -> BiPoly:
        return self.U.den

    def _subs(self, t: float, cval=None):
        kw = {"t": float(t)}
        if cval is not None:
            kw["c"] = complex(cval)
        elif isinstance(self.c, complex):
            kw["c"] = self.c
        return kw

    def U_field(self, grid: Grid2D, t: float, cval=None) -> ComplexField:
        return self._field(self.U, grid, t, cval)

    def V_field(self, grid: Grid2D, t: float, cval=None) -> ComplexField:
        return self._field(self.V, grid, t, cval)

    def a_field(self, grid: Grid2D, t: float, cval=None) -> ComplexField:
        return self._field(self.a, grid, t, cval)

    def _field(self, rf: RationalFn, grid: Grid2D, t: float, cval=None) -> ComplexField:
        zm = grid.zmesh()
        kw = self._subs(t, cval)
        num = rf.num.eval(z=zm, **kw)
        den = rf.den.eval(z=zm, **kw)
        den = np.asarray(den, dtype=complex) + np.zeros_like(zm)
        num = np.asarray(num, dtype=complex) + np.zeros_like(zm)
        bad = np.abs(den) == 0.0
        if bad.any():
            den = den.copy()
            den[bad] = 1.0
            vals = num / den
            vals[bad] = 0.0
            return ComplexField(grid, vals, bad)
        return ComplexField(grid, num / den)


def exact_solution(f: BiPoly, name: str = "custom", c=None) -> ExactSolution:
    """DSII solution built from a heat polynomial f (f_t = i f_zz exactly)."""
    hr = heat_residual(f)
    if not hr.is_zero(1e-12, max(f.max_abs(), 1.0)):
        raise InvalidDatumError("datum does not satisfy f_t = i f_zz")
    fb = f.conj()
    fp = f.wirtinger("z")
    rho = Z * ZBAR + f * fb
    U = RationalFn(1j * (Z * fp - f), rho)
    a = RationalFn(-1j * (ZBAR + fp * fb), rho)
    V = 2j * a.wirtinger("z")
    return ExactSolution(f, U, a, V, c=c, name=name)


def to_halved_v_form(sol: ExactSolution) -> RationalFn:
    """V for the variant normalization U_t = i(.. + 2(V+Vb)U), V_zb = (|U|^2)_z."""
    return sol.V * 0.5


def s1_displayed_V(csym: bool = True) -> RationalFn:
    """The closed-form V printed for the quadratic datum (for cross-checks):
    4 conj(f)/rho - 2 (2 z conj(f) + zbar)^2 / rho^2."""
    f = Z * Z + 2j * T + C
    fb = f.conj()
    rho = Z * ZBAR + f * fb
    return RationalFn(4 * fb, rho) - RationalFn(2 * (2 * Z * fb + ZBAR) ** 2, rho * rho)


@dataclass
class OzawaData:
    """Ozawa blow-up initial datum on the physical (X, Y) grid."""

    a: float
    b: float

    def __post_init__(self):
        if self.a == 0:
            raise InvalidDatumError("ozawa: a must be nonzero")

    @property
    def blowup_time(self) -> float:
        return -self.a / self.b if self.b != 0 else float("inf")

    def U0_field(self, grid: Grid2D) -> ComplexField:
        zm = grid.zmesh()
        X, Y = zm.real, zm.imag
        a, b = self.a, self.b
        vals = np.exp(-1j * b / (4 * a) * (X**2 - Y**2)) \
            / (a * (1 + ((X / a) ** 2 + (Y / a) ** 2) / 2))
        return ComplexField(grid, vals)


def catalog(name: str, c=1.0, a: float = 1.0, b: float = -1.0):
    """Named exact data: 's1' (quadratic), 's2' (quartic), 'ozawa' (initial field)."""
    if name == "s1":
        f = heat_extend(Z * Z + complex(c) * BiPoly.const(1.0)) if not _symbolic(c) \
            else heat_extend(Z * Z + C)
        return exact_solution(f, name="s1", c=(None if _symbolic(c) else complex(c)))
    if name == "s2":
        f = heat_extend(Z ** 4 + complex(c) * BiPoly.const(1.0)) if not _symbolic(c) \
            else heat_extend(Z ** 4 + C)
        return exact_solution(f, name="s2", c=(None if _symbolic(c) else complex(c)))
    if name == "ozawa":
        return OzawaData(a, b)
    raise KeyError(f"unknown catalog entry {name!r}")


def _symbolic(c) -> bool:
    return isinstance(c, str) and c == "symbolic"


# ---------------------------------------------------------------------------
# residual checkers


@dataclass
class ResidualReport:
    max_norm: float
    l2_norm: float
    constraint_max: float | None = None


def dsii_rhs(U: ComplexField, V: ComplexField, scheme: str = "central2") -> ComplexField:
    """i (U_zz + U_zbzb + (V + conj V) U)."""
    Uzz = wirtinger_derivative(wirtinger_derivative(U, "z", scheme), "z", scheme)
    Ubb = wirtinger_derivative(wirtinger_derivative(U, "zbar", scheme), "zbar", scheme)
    re2V = ComplexField(U.grid, V.values + np.conj(V.values), V.mask)
    return 1j * (Uzz + Ubb + re2V * U)


def dsii_residual(U_stencil, V: ComplexField, dt: float, scheme: str = "central2",
                  interior: int = 2) -> ResidualReport:
    """Residual of the canonical DSII evolution on a centred 3-slice time stencil."""
    if len(U_stencil) != 3:
        raise ValueError("need slices (t-dt, t, t+dt)")
    Um, U0, Up = U_stencil
    Ut = (Up.values - Um.values) / (2 * dt)
    rhs = dsii_rhs(U0, V, scheme)
    r = Ut - rhs.values
    if interior:
        r = r[interior:-interior, interior:-interior]
    h = U0.grid.hx * U0.grid.hy
    return ResidualReport(float(np.max(np.abs(r))),
                          float(np.sqrt(np.sum(np.abs(r) ** 2) * h)))


def dsii_residual_exact(sol: ExactSolution, kappa_evol: float = 1.0,
                        kappa_cons: float = 2.0):
    """Exact-arithmetic residual numerators of the DSII system for an ExactSolution.

    Returns (evolution_numerator, constraint_numerator) as BiPolys over the
    common denominator rho^3; both are the zero polynomial for heat-polynomial
    data under the canonical normalization (kappa_evol=1, kappa_cons=2).

    The quotient rule is expanded by hand so every product keeps one small
    factor: this bounds the coefficient growth (exactness of the float
    arithmetic on integer data) and the term-count blowup.
    """
    N = sol.U.num                # i (z f' - f)
    rho = sol.U.den              # |z|^2 + |f|^2, formally self-conjugate
    M = sol.a.num                # -i (zbar + f' conj f)
    dzp = lambda p: p.wirtinger("z")
    dbp = lambda p: p.wirtinger("zbar")
    dtp = lambda p: p.wirtinger("t")

    numV = 2j * (dzp(M) * rho - M * dzp(rho))    # V = numV / rho^2
    numVb = numV.conj()
    Nb = N.conj()

    term_t = (dtp(N) * rho - N * dtp(rho)) * rho

    def second(d):
        return (d(d(N)) * rho - N * d(d(rho))) * rho \
            - 2 * d(rho) * (d(N) * rho - N * d(rho))

    evol = term_t - 1j * (second(dzp) + second(dbp)
                          + kappa_evol * (numV + numVb) * N)
    cons = (dbp(numV) * rho - 2 * numV * dbp(rho)) \
        - kappa_cons * ((dzp(N) * Nb + N * dzp(Nb)) * rho - 2 * (N * Nb) * dzp(rho))
    return evol, cons


def dsii_exact_identity_holds(sol: ExactSolution, rel: float = 1e-12) -> bool:
    """True when both residual numerators vanish; exact cancellation for
    Gaussian-integer data, a relative threshold against the ~rho^3 coefficient
    growth otherwise."""
    ev, co = dsii_residual_exact(sol)
    if ev.nterms == 0 and co.nterms == 0:
        return True
    scale = max(sol.U.num.max_abs(), sol.U.den.max_abs(), 1.0) ** 3
    return ev.is_zero(rel, scale) and co.is_zero(rel, scale)


# ---------------------------------------------------------------------------
# the nonlocal constraint


def _dz_dzb_multipliers(grid: Grid2D):
    kx, ky = spectral_wavenumbers(grid)
    mz = (1j * kx + ky) / 2.0
    mzb = (1j * kx - ky) / 2.0
    return mz, mzb


def v_from_u(U: ComplexField) -> ComplexField:
    """Spectral inversion of V_zb = 2 (|U|^2)_z on a periodic grid, zero-mean gauge."""
    if not U.grid.periodic:
        raise SchemeError("v_from_u needs a doubly periodic grid")
    mz, mzb = _dz_dzb_multipliers(U.grid)
    n_hat = np.fft.fft2(np.abs(U.values) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        V_hat = 2.0 * mz / mzb * n_hat
    V_hat[0, 0] = 0.0
    return ComplexField(U.grid, np.fft.ifft2(V_hat))


def re_v_from_u(U: ComplexField) -> np.ndarray:
    """Re V directly: multiplier 2 (kx^2 - ky^2)/k^2 on |U|^2 (zero-mean gauge)."""
    if not U.grid.periodic:
        raise SchemeError("re_v_from_u needs a doubly periodic grid")
    kx, ky = spectral_wavenumbers(U.grid)
    k2 = kx**2 + ky**2
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = 2.0 * (kx**2 - ky**2) / k2
    mult[0, 0] = 0.0
    n_hat = np.fft.fft2(np.abs(U.values) ** 2)
    return np.fft.ifft2(mult * n_hat).real


# ---------------------------------------------------------------------------
# physical (focusing) form


@dataclass
class PhysicalForm:
    U_phys: ComplexField          # field entering the focusing equation
    phi: ComplexField             # potential of the Poisson problem (z-side scale)
    grid_phys: Grid2D
    rev_residual: float           # Re V - (2|U|^2 - 4 phi_X), z-side quantities
    ozeq_residual: float | None = None


def physical_grid_of(grid: Grid2D) -> Grid2D:
    """The (X, Y) = (2y, 2x) image of a z-plane grid."""
    return Grid2D(2 * grid.y_min, 2 * grid.y_max, 2 * grid.x_min, 2 * grid.x_max,
                  grid.ny, grid.nx, grid.periodic_y, grid.periodic_x)


def _swap_scale(values: np.ndarray) -> np.ndarray:
    # (X, Y) = (2y, 2x): the physical array indexed [iY, iX] is the transpose
    return values.T.copy()


def physical_form(U: ComplexField, V: ComplexField, U_stencil=None, dt=None):
    """Transform to the focusing variables X = 2y, Y = 2x.

    Enforces/reports Re V = 2|U|^2 - 4 phi_X with Delta phi = d_X |U|^2 (z-side
    fields on the physical grid).  With a 3-slice z-side time stencil the
    residual of the focusing equation

        i W_T - W_XX + W_YY = -4 |W|^2 W + 8 phi'_X W,   W = U / sqrt(2), T = 2t

    is also evaluated (phi' = phi / 2).
    """
    if not U.grid.periodic:
        raise SchemeError("physical_form needs a doubly periodic grid for the Poisson solve")
    gp = physical_grid_of(U.grid)
    Uz_phys = ComplexField(gp, _swap_scale(U.values))
    n = Uz_phys.abs2()
    kx, ky = spectral_wavenumbers(gp)
    k2 = kx**2 + ky**2
    # RHS is d_X of a periodic field, so its mean vanishes and the Poisson
    # problem is always solvable in the zero-mean gauge.
    rhs_hat = np.fft.fft2(n.values.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = (1j * kx) * rhs_hat / (-k2)
    phi_hat[0, 0] = 0.0
    phi = np.fft.ifft2(phi_hat).real
    phi_X = np.fft.ifft2(1j * kx * np.fft.fft2(phi)).real
    ReV_phys = _swap_scale(V.values).real
    ReV_phys = ReV_phys - ReV_phys.mean()        # match the zero-mean spectral gauge
    target = 2 * n.values.real - 4 * phi_X
    target = target - target.mean()
    rev_residual = float(np.max(np.abs(ReV_phys - target)))

    ozeq = None
    if U_stencil is not None:
        if dt is None:
            raise ValueError("dt required with a stencil")
        Wm, W0, Wp = (_swap_scale(s.values) / np.sqrt(2) for s in U_stencil)
        W_T = (Wp - Wm) / (2 * dt) / 2.0          # T = 2t
        W = ComplexField(gp, W0)
        Wxx = _d2(W.values, gp.hx, axis=1)
        Wyy = _d2(W.values, gp.hy, axis=0)
        phi_p_X = phi_X / 2.0
        lhs = 1j * W_T - Wxx + Wyy
        rhsq = -4 * np.abs(W0) ** 2 * W0 + 8 * phi_p_X * W0
        ozeq = float(np.max(np.abs(lhs - rhsq)))
    return PhysicalForm(ComplexField(gp, _swap_scale(U.values) / np.sqrt(2)),
                        ComplexField(gp, phi.astype(complex)), gp, rev_residual, ozeq)


def _d2(vals: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(vals, -1, axis=axis) - 2 * vals + np.roll(vals, 1, axis=axis)) / h**2


# ---------------------------------------------------------------------------
# norms with tail handling


@dataclass
class NormResult:
    value: float            # Richardson-extrapolated quadrature of |U|^2
    raw: float              # plain full-box quadrature
    tail_bound: float       # analytic bound from the boundary decay constant
    decay_ok: bool


def l2_norm_sq(U: ComplexField, inner_frac: float = 0.7, decay_tol: float = 10.0,
               require_decay: bool = True) -> NormResult:
    """int |U|^2 dx dy with O(1/r^2) decay verification and 1/R^2 Richardson tail
    extrapolation between the full box and an inner sub-box.

    Masked (singular) nodes are patched with the 8-neighbour mean; |U|^2 stays
    bounded at the catalog singularities, so the patch is O(h^2) accurate."""
    g = U.grid
    u2 = U.abs2()
    if U.mask is not None and U.mask.any():
        # patch once so the full-box and sub-box quadratures see the same field
        patched = ComplexField(g, u2.values, U.mask)
        raw = integrate2d(patched, mask_policy="neighbor_mean").real
        u2vals = _neighbor_patched(u2.values, U.mask)
    else:
        raw = integrate2d(u2).real
        u2vals = u2.values

    v = np.abs(U.values)
    ring = np.concatenate([v[0, :], v[-1, :], v[:, 0], v[:, -1]])
    zm = g.zmesh()
    zb = np.concatenate([zm[0, :], zm[-1, :], zm[:, 0], zm[:, -1]])
    rb = np.abs(zb)
    Cdec = float(np.max(ring * rb**2))          # |U| <= C / r^2 on the boundary
    peak = float(np.max(v))
    decay_ok = peak == 0.0 or float(np.max(ring)) <= peak / decay_tol
    if require_decay and not decay_ok:
        raise DecayError(f"no O(1/r^2) boundary decay: boundary max {np.max(ring):.3g} "
                         f"vs peak {peak:.3g}")

    R1 = min(g.x_max, -g.x_min, g.y_max, -g.y_min) if g.x_min < 0 else min(g.x_max, g.y_max)
    R2 = inner_frac * R1
    xs, ys = g.xs(), g.ys()
    selx = np.abs(xs) <= R2
    sely = np.abs(ys) <= R2
    if selx.sum() >= 8 and sely.sum() >= 8:
        sub = u2vals[np.ix_(sely, selx)]
        I1, I2 = raw, _trapz2(sub, g.hx, g.hy)
        value = (I1 * R1**2 - I2 * R2**2) / (R1**2 - R2**2)
    else:
        value = raw
    tail = np.pi * Cdec**2 / R1**2
    return NormResult(float(value), float(raw), float(tail), bool(decay_ok))


def _neighbor_patched(vals: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = vals.copy()
    ny, nx = vals.shape
    for iy, ix in zip(*np.nonzero(mask)):
        acc, cnt = 0.0, 0
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                jy, jx = iy + dy, ix + dx
                if (dy == 0 and dx == 0) or not (0 <= jy < ny and 0 <= jx < nx):
                    continue
                if not mask[jy, jx]:
                    acc += vals[jy, jx]
                    cnt += 1
        out[iy, ix] = acc / cnt if cnt else 0.0
    return out


def _trapz2(vals: np.ndarray, hx: float, hy: float) -> float:
    wx = np.full(vals.shape[1], hx)
    wx[0] = wx[-1] = hx / 2
    wy = np.full(vals.shape[0], hy)
    wy[0] = wy[-1] = hy / 2
    return float(np.sum((vals.real * wx[None, :]) * wy[:, None]))


# ---------------------------------------------------------------------------
# singularity ledger


@dataclass
class SingularEvent:
    t_sing: float
    location: complex
    coefficient: complex      # A in U ~ A e^{2 i phi} along z = r e^{i phi}, r -> 0

    def as_dict(self):
        return {"t_sing": self.t_sing, "z": [self.location.real, self.location.imag],
                "coeff": [self.coefficient.real, self.coefficient.imag]}


def _t_poly_at_origin(sol: ExactSolution, cval=None):
    """Coefficients of f(0, t) as a complex polynomial in t (ascending)."""
    kw = {}
    if cval is not None:
        kw["c"] = complex(cval)
    elif isinstance(sol.c, complex):
        kw["c"] = sol.c
    else:
        raise InvalidDatumError("singular_times needs a numeric c")
    cc = kw.get("c", 0.0)
    coeffs = {}
    for (dz_, dzb, dt_, dc, dcb), v in sol.f.coef.items():
        if dz_ or dzb:
            continue
        term = v * (cc ** dc) * (np.conj(cc) ** dcb)
        coeffs[dt_] = coeffs.get(dt_, 0.0) + term
    deg = max(coeffs) if coeffs else 0
    return np.array([coeffs.get(k, 0.0) for k in range(deg + 1)], dtype=complex)


def _real_roots_of_complex_poly(coeffs: np.ndarray, imag_tol: float = 1e-10):
    """Real t with P(t) = 0 for a complex-coefficient polynomial (both parts vanish).

    Degree <= 2 uses closed forms (exact for the catalog); otherwise companion
    eigenvalues with an |Im| filter."""

    def real_roots(arr):
        arr = np.trim_zeros(np.asarray(arr, dtype=float), "b")
        if len(arr) == 0:
            return "all"
        if len(arr) == 1:
            return []
        if len(arr) == 2:
            return [-arr[0] / arr[1]]
        if len(arr) == 3:
            a0, a1, a2 = arr
            disc = a1 * a1 - 4 * a2 * a0
            if disc < 0:
                return []
            sq = np.sqrt(disc)
            return [(-a1 - sq) / (2 * a2), (-a1 + sq) / (2 * a2)]
        roots = np.roots(arr[::-1])
        scale = max(1.0, float(np.max(np.abs(roots))))
        return [r.real for r in roots if abs(r.imag) <= imag_tol * scale]

    rp = real_roots(np.real(coeffs))
    rq = real_roots(np.imag(coeffs))
    if rp == "all" and rq == "all":
        raise InvalidDatumError("f(0, t) vanishes identically; persistent singularity at z=0")
    if rp == "all":
        cand = rq
    elif rq == "all":
        cand = rp
    else:
        scale = max(float(np.max(np.abs(coeffs))), 1.0)
        deg = len(coeffs) - 1
        cand = [r for r in rp
                if abs(np.polyval(coeffs[::-1], r)) <= 1e-9 * scale * max(1.0, abs(r)) ** deg]
    return sorted(set(round(float(r), 14) for r in cand))


def radial_limit_coefficient(sol: ExactSolution, t_sing: float, cval=None,
                             radii=(1e-3, 5e-4), n_phi: int = 8):
    """lim_{r->0} U(r e^{i phi}, t) e^{-2 i phi}, Richardson-extrapolated in r^2.

    Returns (coefficient, max deviation across phi samples)."""
    kw = {"t": float(t_sing)}
    if cval is not None:
        kw["c"] = complex(cval)
    elif isinstance(sol.c, complex):
        kw["c"] = sol.c
    phis = np.arange(n_phi) * (2 * np.pi / n_phi) + 0.123
    ests = []
    for r in radii:
        zs = r * np.exp(1j * phis)
        vals = np.array([complex(sol.U.eval(z=zv, **kw)) for zv in zs])
        ests.append(vals * np.exp(-2j * phis))
    r1, r2 = radii[0], radii[1]
    w = (r1 / r2) ** 2
    extr = (w * ests[1] - ests[0]) / (w - 1.0)
    coeff = complex(np.mean(extr))
    spread = float(np.max(np.abs(extr - coeff)))
    return coeff, spread


def singular_times(sol: ExactSolution, cval=None) -> list[SingularEvent]:
    """All real (t, z=0) zeros of |z|^2 + |f|^2 with asymptotic coefficients."""
    coeffs = _t_poly_at_origin(sol, cval)
    roots = _real_roots_of_complex_poly(coeffs)
    events = []
    for r in roots:
        coeff, spread = radial_limit_coefficient(sol, r, cval)
        if spread > 1e-6 * max(1.0, abs(coeff)):
            warnings.warn(f"angular fit spread {spread:.2g} at t={r}")
        events.append(SingularEvent(float(r), 0j, coeff))
    return events
