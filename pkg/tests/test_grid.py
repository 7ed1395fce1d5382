import numpy as np
import pytest

from spinsurf import (ComplexField, Form1, constant_field, field_from_function,
                      integrate2d, load_complexfield_csv, lpath, make_grid,
                      path_integrate, rect_loop, save_complexfield_csv,
                      wirtinger_derivative)
from spinsurf.grid import (GridConfigError, MaskError, PathError, SchemeError,
                           antiderivative)


def test_make_grid_corner_node():
    g = make_grid((-1, 1, -1, 1), (5, 5))
    assert g.node_z(0, 0) == -1 - 1j


def test_make_grid_periodic_spacing():
    g = make_grid((0, 2 * np.pi, 0, 2 * np.pi), (64, 64), True)
    assert g.hx == pytest.approx(2 * np.pi / 64)


def test_make_grid_node_count():
    g = make_grid((-30, 30, -30, 30), (512, 512))
    assert g.node_count() == 262144


def test_make_grid_rejects_degenerate():
    with pytest.raises(GridConfigError):
        make_grid((1, 1, 0, 1), (8, 8))
    with pytest.raises(GridConfigError):
        make_grid((0, 1, 0, 1), (3, 8))


def test_wirtinger_quadratic_exact():
    g = make_grid((-1, 1, -1, 1), (32, 32))
    f = field_from_function(g, lambda z: z ** 2)
    d = wirtinger_derivative(f, "z")
    zm = g.zmesh()
    assert np.max(np.abs(d.values - 2 * zm)) < 1e-12


def test_wirtinger_kills_holomorphic_in_zbar():
    g = make_grid((-1, 1, -1, 1), (16, 16))
    f = field_from_function(g, lambda z: z)
    d = wirtinger_derivative(f, "zbar")
    assert d.max_abs() < 1e-13


def test_wirtinger_spectral_exponential():
    g = make_grid((0, 2 * np.pi, 0, 2 * np.pi), (32, 32), True)
    f = field_from_function(g, lambda z: np.exp(1j * z.real))
    d = wirtinger_derivative(f, "z", "spectral")
    ref = 0.5j * np.exp(1j * g.zmesh().real)
    assert np.max(np.abs(d.values - ref)) < 1e-12


def test_wirtinger_central2_order():
    # halving h reduces the max error on e^z by >= 3.5
    errs = []
    for n in (33, 65):
        g = make_grid((-1, 1, -1, 1), (n, n))
        f = field_from_function(g, np.exp)
        d = wirtinger_derivative(f, "z")
        errs.append(np.max(np.abs(d.values - np.exp(g.zmesh()))))
    assert errs[0] / errs[1] >= 3.5


def test_wirtinger_rejects_spectral_on_nonperiodic():
    g = make_grid((-1, 1, -1, 1), (8, 8))
    f = constant_field(g, 1.0)
    with pytest.raises(SchemeError):
        wirtinger_derivative(f, "z", "spectral")


def test_integrate2d_constant():
    g = make_grid((0, 1, 0, 1), (16, 16))
    assert integrate2d(constant_field(g, 1.0)) == pytest.approx(1.0)


def test_integrate2d_sech2():
    g = make_grid((-20, 20, 0, 2 * np.pi), (1001, 32))
    f = field_from_function(g, lambda z: 1 / np.cosh(z.real) ** 2 / 4)
    assert integrate2d(f).real == pytest.approx(np.pi, abs=1e-8)


def test_integrate2d_s1_norm():
    from spinsurf import catalog, square_grid
    sol = catalog("s1", c=1.0)
    g = square_grid(30.0, 513)
    val = integrate2d(sol.U_field(g, 1.0).abs2()).real
    assert val == pytest.approx(2 * np.pi, rel=1e-2)


def test_integrate2d_mask_policy():
    g = make_grid((0, 1, 0, 1), (8, 8))
    vals = np.ones((8, 8), dtype=complex)
    mask = np.zeros((8, 8), dtype=bool)
    mask[3, 3] = True
    f = ComplexField(g, vals, mask)
    with pytest.raises(MaskError):
        integrate2d(f)
    assert integrate2d(f, "neighbor_mean") == pytest.approx(1.0)


def test_integrate2d_nonnegative_property():
    rng = np.random.default_rng(7)
    g = make_grid((-1, 1, -1, 1), (16, 16))
    f = ComplexField(g, rng.random((16, 16)).astype(complex))
    assert integrate2d(f).real >= 0


def test_path_integrate_dz():
    g = make_grid((0, 1, 0, 1), (11, 11))
    form = Form1(constant_field(g, 1.0), constant_field(g, 0.0))
    path = [(i, 0) for i in range(11)]
    assert path_integrate(form, path) == pytest.approx(1.0)


def test_path_integrate_dzbar_vertical():
    g = make_grid((0, 1, 0, 1), (11, 11))
    form = Form1(constant_field(g, 0.0), constant_field(g, 1.0))
    path = [(0, i) for i in range(11)]
    assert path_integrate(form, path) == pytest.approx(-1j)


def test_path_integrate_closed_loop_of_closed_form():
    g = make_grid((-1, 1, -1, 1), (21, 21))
    f = field_from_function(g, lambda z: z + np.conj(z))
    form = Form1(f, f)
    loop = rect_loop(2, 3, 15, 17)
    # linear integrand: trapezoid is exact, loop integral vanishes to rounding
    assert abs(path_integrate(form, loop)) < 1e-12


def test_closed_loop_h2_property():
    # a smooth closed form integrates to O(h^2 * loop length) around any loop
    vals = {}
    for n in (41, 81):
        g = make_grid((-1, 1, -1, 1), (n, n))
        F = lambda z: np.exp(0.7 * z + 0.3 * np.conj(z))   # p_zbar = q_z
        p = field_from_function(g, lambda z: 0.7 * F(z))
        q = field_from_function(g, lambda z: 0.3 * F(z))
        loop = rect_loop(n // 8, n // 5, n - n // 8, n - n // 3)
        vals[n] = abs(path_integrate(Form1(p, q), loop))
    assert vals[41] / vals[81] >= 3.5      # O(h^2)
    assert vals[81] < 1e-3


def test_path_integrate_rejects_nonadjacent():
    g = make_grid((0, 1, 0, 1), (8, 8))
    form = Form1(constant_field(g, 1.0), constant_field(g, 0.0))
    with pytest.raises(PathError):
        path_integrate(form, [(0, 0), (2, 0)])


def test_lpath_orders():
    g = make_grid((0, 1, 0, 1), (8, 8))
    p = lpath(g, (1, 1), (4, 3), "x_first")
    assert p[0] == (1, 1) and p[-1] == (4, 3)
    assert all(abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 for a, b in zip(p, p[1:]))
    q = lpath(g, (4, 3), (1, 1), "y_first")
    assert q[0] == (4, 3) and q[-1] == (1, 1)


def test_antiderivative_path_independence():
    # closed form p = z, q = conj(z): both L-path orders agree to O(h^2)
    g = make_grid((-1, 1, -1, 1), (41, 41))
    p = field_from_function(g, lambda z: z)
    q = field_from_function(g, np.conj)
    a1 = antiderivative(Form1(p, q), (20, 20), "x_first")
    a2 = antiderivative(Form1(p, q), (20, 20), "y_first")
    assert np.max(np.abs(a1.values - a2.values)) < 1e-12


def test_complexfield_csv_roundtrip(tmp_path):
    g = make_grid((-1, 1, -1, 1), (9, 7))
    f = field_from_function(g, lambda z: z ** 2 + 1j)
    path = tmp_path / "f.csv"
    save_complexfield_csv(f, path)
    back = load_complexfield_csv(path)
    assert back.grid == g
    assert np.max(np.abs(back.values - f.values)) < 1e-15
