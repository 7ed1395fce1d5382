import numpy as np
import pytest

from spinsurf import (ComplexField, PotentialPair, SpinorField, apply_D,
                      apply_Dvee, catalog, constant_field, dirac_residual_norm,
                      field_from_function, gauge_transform, make_grid,
                      quaternionize, save_spinorfield_csv, sigma)
from spinsurf.dirac import GaugeError, Mat2Field
from spinsurf.moutard import moutard_exact


@pytest.fixture
def grid():
    return make_grid((-1, 1, -1, 1), (48, 48))


def _spinor(grid, f1, f2):
    return SpinorField(field_from_function(grid, f1), field_from_function(grid, f2))


def test_apply_D_minimal_data(grid):
    # U = 0: psi1 holomorphic, psi2 antiholomorphic gives residual ~ 0
    # (quadratic data, on which the central stencils are exact)
    psi = _spinor(grid, lambda z: z ** 2 + 1, lambda z: np.conj(z) ** 2)
    U = constant_field(grid, 0.0)
    assert dirac_residual_norm(U, psi) < 1e-11


def test_apply_D_zbar_component(grid):
    # psi = (zbar, 0), U = 0: residual rows are (0, -1)
    psi = _spinor(grid, np.conj, lambda z: 0 * z)
    r = apply_D(constant_field(grid, 0.0), psi)
    assert r.psi1.max_abs() < 1e-12
    assert np.max(np.abs(r.psi2.values + 1.0)) < 1e-11


def test_apply_D_exact_nonzero_potential():
    # inverted-surface spinors solve the transformed Dirac equation exactly;
    # the residual is pure finite-difference truncation, O(h^2)
    sol = catalog("s1", c=1.0)
    ex = moutard_exact(sol.f)
    (a1, a2), _ = ex.inverted_surface_spinors()
    res = {}
    for n in (64, 128):
        g = make_grid((0.3, 2.3, 0.2, 2.2), (n, n))
        kw = {"z": g.zmesh(), "t": 0.2, "c": 1.0}
        psi = SpinorField(ComplexField(g, a1.eval(**kw)), ComplexField(g, a2.eval(**kw)))
        res[n] = dirac_residual_norm(sol.U_field(g, 0.2), psi, interior=1)
    assert res[64] / res[128] >= 3.3


def test_apply_Dvee_equals_D_for_real_U(grid):
    U = field_from_function(grid, lambda z: np.exp(-np.abs(z) ** 2))
    psi = _spinor(grid, lambda z: np.exp(z), lambda z: np.conj(z))
    rd = apply_D(U, psi)
    rv = apply_Dvee(U, psi)
    assert np.max(np.abs(rd.psi1.values - rv.psi1.values)) < 1e-13
    assert np.max(np.abs(rd.psi2.values - rv.psi2.values)) < 1e-13


def test_apply_Dvee_constant(grid):
    phi = SpinorField(constant_field(grid, 1.0), constant_field(grid, 0.0))
    r = apply_Dvee(constant_field(grid, 0.0), phi)
    assert max(r.psi1.max_abs(), r.psi2.max_abs()) < 1e-13


def test_sigma_involution_exact(grid):
    rng = np.random.default_rng(3)
    psi = SpinorField(ComplexField(grid, rng.normal(size=(48, 48)) + 1j * rng.normal(size=(48, 48))),
                      ComplexField(grid, rng.normal(size=(48, 48)) + 1j * rng.normal(size=(48, 48))))
    s2 = sigma(sigma(psi))
    assert np.array_equal(s2.psi1.values, -psi.psi1.values)
    assert np.array_equal(s2.psi2.values, -psi.psi2.values)


def test_sigma_basis(grid):
    psi = SpinorField(constant_field(grid, 1.0), constant_field(grid, 0.0))
    s = sigma(psi)
    assert s.psi1.max_abs() < 1e-15
    assert np.max(np.abs(s.psi2.values - 1.0)) < 1e-15


def test_sigma_commutes_with_real_D(grid):
    # for real U, D(sigma psi) is the sigma-image (up to conjugation) of D psi
    U = field_from_function(grid, lambda z: 0.5 / np.cosh(z.real))
    rng = np.random.default_rng(11)

    def smooth():
        k = rng.integers(1, 3)
        return lambda z: np.exp(0.3 * k * z) + 0.2 * np.conj(z) ** 2

    psi = _spinor(grid, smooth(), smooth())
    r = apply_D(U, psi)
    rs = apply_Dvee(U, sigma(psi))
    # D sigma psi = (conj of -r2, conj of r1) with Dvee = D for real U
    assert np.max(np.abs(rs.psi1.values + np.conj(r.psi2.values))) < 1e-12
    assert np.max(np.abs(rs.psi2.values - np.conj(r.psi1.values))) < 1e-12


def test_quaternionize_identity(grid):
    q = quaternionize(SpinorField(constant_field(grid, 1.0), constant_field(grid, 0.0)))
    assert np.max(np.abs(q.at(3, 4) - np.eye(2))) < 1e-15


def test_quaternionize_j_element(grid):
    q = quaternionize(SpinorField(constant_field(grid, 0.0), constant_field(grid, 1.0)))
    assert np.max(np.abs(q.at(0, 0) - np.array([[0, -1], [1, 0]]))) < 1e-15


def test_quaternionize_det_is_metric(grid):
    psi = _spinor(grid, lambda z: z, lambda z: np.conj(z) + 2)
    q = quaternionize(psi)
    det = q.det().values
    e_alpha = np.abs(psi.psi1.values) ** 2 + np.abs(psi.psi2.values) ** 2
    assert np.max(np.abs(det - e_alpha)) < 1e-12


def test_quaternionize_respects_multiplication(grid):
    # matrix product of two quaternion extensions is the extension of the
    # quaternion product (random samples)
    rng = np.random.default_rng(5)
    shape = (grid.ny, grid.nx)
    a = SpinorField(ComplexField(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape)),
                    ComplexField(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape)))
    b = SpinorField(ComplexField(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape)),
                    ComplexField(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape)))
    prod = quaternionize(a) @ quaternionize(b)
    # quaternion product components: (a1 b1 - conj(a2) b2, a2 b1 + conj(a1) b2)
    c1 = a.psi1.values * b.psi1.values - np.conj(a.psi2.values) * b.psi2.values
    c2 = a.psi2.values * b.psi1.values + np.conj(a.psi1.values) * b.psi2.values
    direct = quaternionize(SpinorField(ComplexField(grid, c1), ComplexField(grid, c2)))
    for e1, e2 in zip(prod.entries(), direct.entries()):
        assert np.max(np.abs(e1.values - e2.values)) < 1e-12


def test_gauge_identity(grid):
    psi = _spinor(grid, lambda z: np.exp(z), lambda z: np.conj(z))
    U = field_from_function(grid, lambda z: np.abs(z) ** 2)
    h = constant_field(grid, 0.0)
    p2, f2, U2 = gauge_transform(psi, psi, U, h)
    assert np.max(np.abs(p2.psi1.values - psi.psi1.values)) < 1e-15
    assert np.max(np.abs(U2.values - U.values)) < 1e-15


def test_gauge_constant_phase_preserves_absU(grid):
    psi = _spinor(grid, lambda z: np.exp(z), lambda z: np.conj(z))
    U = field_from_function(grid, lambda z: 1 / (1 + np.abs(z) ** 2))
    h = constant_field(grid, 0.7j)
    _, _, U2 = gauge_transform(psi, psi, U, h)
    assert np.max(np.abs(np.abs(U2.values) - np.abs(U.values))) < 1e-14


def test_gauge_preserves_dirac_residual_order():
    res = {}
    for n in (48, 96):
        g = make_grid((-1, 1, -1, 1), (n, n))
        psi = SpinorField(field_from_function(g, lambda z: np.exp(0.5 * z)),
                          field_from_function(g, lambda z: np.conj(z) ** 2))
        U = constant_field(g, 0.0)
        h = field_from_function(g, lambda z: z)
        p2, f2, U2 = gauge_transform(psi, psi, U, h)
        res[n] = dirac_residual_norm(U2, p2, interior=1)
    assert res[48] / res[96] >= 3.3


def test_gauge_invariant_products(grid):
    # the four bilinear products entering the R^4 coordinate derivatives are
    # exactly invariant
    psi = _spinor(grid, lambda z: np.exp(z), lambda z: np.conj(z) + 1)
    phi = _spinor(grid, lambda z: z ** 2 + 1, lambda z: 2 * np.conj(z))
    U = field_from_function(grid, lambda z: z * 0 + 0.3)
    h = field_from_function(grid, lambda z: 0.2 * z - 0.1j)
    p2, f2, _ = gauge_transform(psi, phi, U, h)

    def products(ps, ph):
        f2b = np.conj(ph.psi2.values)
        p2b = np.conj(ps.psi2.values)
        return (f2b * p2b, ph.psi1.values * ps.psi1.values,
                f2b * ps.psi1.values, ph.psi1.values * p2b)

    for before, after in zip(products(psi, phi), products(p2, f2)):
        assert np.max(np.abs(before - after)) < 1e-12


def test_gauge_rejects_nonholomorphic(grid):
    psi = _spinor(grid, lambda z: z, lambda z: 0 * z)
    U = constant_field(grid, 0.0)
    h = field_from_function(grid, np.conj)
    with pytest.raises(GaugeError):
        gauge_transform(psi, psi, U, h)


def test_potential_pair_real_mode(grid):
    U = constant_field(grid, 1.0)
    PotentialPair(U, real_u=True)
    with pytest.raises(ValueError):
        PotentialPair(constant_field(grid, 1j), real_u=True)


def test_mat2field_inverse(grid):
    zm = grid.zmesh()
    M = Mat2Field.from_values(grid, zm, 0 * zm, 0 * zm, np.conj(zm))
    prod = M @ M.inv(min_det=1e-6)
    vals = prod.e11.values[np.abs(zm) > 0.1]
    assert np.max(np.abs(vals - 1.0)) < 1e-10


def test_spinor_csv(tmp_path, grid):
    psi = _spinor(grid, lambda z: z, np.conj)
    path = tmp_path / "psi.csv"
    save_spinorfield_csv(psi, path)
    header = path.read_text().splitlines()[0]
    assert header == "ix,iy,re1,im1,re2,im2"
    assert (tmp_path / "psi.csv.json").exists()
