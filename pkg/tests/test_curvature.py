import numpy as np
import pytest
from scipy.stats import ortho_group

from heisurf import core
from heisurf import curvature as cv
from heisurf import surface as sf
from heisurf.poly import Poly, random_poly

A5, B5, D5 = np.array([1.0, -2.0]), np.array([0.5, 0.0]), 3.0


def ex55_point(rng):
    z = rng.uniform(-2, 2, 4)
    return np.append(z, -(A5 @ z[:2] + B5 @ z[2:] + D5))


def ex55_h_sq(p):
    x, y = p[:2], p[2:4]
    return 2.0 / np.sum(np.concatenate([A5 + y, B5 - x]) ** 2)


def random_surface_point(rng, n, kind=None):
    """A random degree <= 3 polynomial surface and a non-characteristic point on it."""
    kind = kind or rng.choice(["t-graph", "implicit", "intrinsic-y1"])
    while True:
        if kind == "t-graph":
            S = sf.TGraph(random_poly(rng, 2 * n, 3))
            p = S.parametrize(rng.uniform(-1, 1, 2 * n))
        elif kind == "intrinsic-y1":
            phi = random_poly(rng, 2 * n, 3)
            box = sf.Box(-2 * np.ones(2 * n), 2 * np.ones(2 * n))
            S = sf.IntrinsicY1Graph(phi, box)
            p = sf.lift_psi(phi, rng.uniform(-1, 1, 2 * n), box)
        else:
            # implicit surface through a chosen point: f(x) = g(x) - g(p)
            g = random_poly(rng, 2 * n + 1, 3)
            p = rng.uniform(-1, 1, 2 * n + 1)
            S = sf.Implicit(g - g(p))
        if not sf.surface_point_data(S, p).charFlag and np.linalg.norm(sf.surface_point_data(S, p).NH) > 1e-3:
            return S, p


def test_vertical_hyperplane_flat(rng):
    S = sf.vertical_hyperplane([1.0, 2.0], [0.5, -1.0], 0.3)
    p = np.array([0.3, 0.0, 0.0, 0.0, 4.0])
    np.testing.assert_array_equal(cv.nu_derivative_matrix(S, p), 0)
    f = cv.second_fundamental_form(S, p)
    np.testing.assert_array_equal(f.H_matrix, 0)
    assert cv.norm_h_sq_formula(S, p) == 0
    assert cv.mean_curvature(S, p) == 0
    assert cv.is_htg_at(S, p)


def test_fixture_hyperplane(rng):
    S = sf.hyperplane(A5, B5, 1.0, D5)
    for _ in range(30):
        p = ex55_point(rng)
        D = cv.nu_derivative_matrix(S, p)
        Td = cv.td_h(S, p)
        assert np.einsum("hk,kh", D, D) == pytest.approx(-2 * Td ** 2, rel=1e-10)
        assert cv.norm_h_sq_formula(S, p) == pytest.approx(ex55_h_sq(p), rel=1e-10)
        assert abs(cv.norm_tilde_h_sq_formula(S, p)) < 1e-10
        assert abs(cv.mean_curvature(S, p)) < 1e-12
        assert cv.is_htg_at(S, p)
        f = cv.second_fundamental_form(S, p, verify=True)
        assert f.route_residual < cv.VERIFY_TOL
        assert f.norm_sq - cv.symmetrize(f).norm_sq == pytest.approx(2 * Td ** 2, rel=1e-10)


def test_plane_at_unit_point():
    S = sf.hyperplane([0.0, 0.0], [0.0, 0.0], 1.0, 0.0)
    assert cv.norm_h_sq_formula(S, [1.0, 0, 0, 0, 0]) == pytest.approx(2.0, abs=1e-10)


def test_characteristic_refused():
    S = sf.hyperplane(A5, B5, 1.0, D5)
    p0 = np.array([B5[0], B5[1], -A5[0], -A5[1], -D5])
    for fn in (cv.nu_derivative_matrix, cv.second_fundamental_form, cv.norm_h_sq_formula,
               cv.norm_tilde_h_sq_formula, cv.mean_curvature, cv.is_htg_at):
        with pytest.raises(sf.CharacteristicPointError):
            fn(S, p0)


def test_d_matrix_vs_finite_differences(rng):
    for n in (1, 2, 3):
        for _ in range(5):
            S, p = random_surface_point(rng, n)
            D = cv.nu_derivative_matrix(S, p)
            h = 1e-5
            for k in range(2 * n):
                e = core.frame_vector(k + 1, p)

                def nu(x):
                    _, g, _ = S.defining_jets(x[None, :])
                    G = core.frame_matrix(x)[:2 * n] @ g[0]
                    return G / np.linalg.norm(G)
                np.testing.assert_allclose(D[k], (nu(p + h * e) - nu(p - h * e)) / (2 * h), atol=1e-5)


def test_identities_on_random_surfaces(rng):
    for n in (1, 2, 3):
        for _ in range(20):
            S, p = random_surface_point(rng, n)
            f = cv.second_fundamental_form(S, p, verify=True)
            assert f.route_residual < cv.VERIFY_TOL
            h2, th2 = cv.norm_h_sq_formula(S, p), cv.norm_tilde_h_sq_formula(S, p)
            scale = 1 + abs(h2)
            assert abs(h2 - th2 - 2 * (n - 1) * f.TdH ** 2) < 1e-8 * scale
            assert f.norm_sq == pytest.approx(h2, abs=1e-8 * scale)
            assert cv.symmetrize(f).norm_sq == pytest.approx(th2, abs=1e-8 * scale)
            H = cv.mean_curvature(S, p)
            assert np.trace(f.H_matrix) == pytest.approx(H, abs=1e-9 * scale)
            assert np.trace(cv.symmetrize(f).H_matrix) == pytest.approx(H, abs=1e-9 * scale)
            if n == 1:
                assert f.H_matrix.shape == (1, 1)
                assert h2 == th2


def test_basis_invariance(rng):
    for n in (2, 3):
        S, p = random_surface_point(rng, n)
        f = cv.second_fundamental_form(S, p)
        Q = ortho_group.rvs(2 * n - 1, random_state=int(rng.integers(1 << 31)))
        g = cv.rebase(f, Q)
        np.testing.assert_allclose(g.basis @ g.basis.T, np.eye(2 * n - 1), atol=1e-12)
        assert g.norm_sq == pytest.approx(f.norm_sq, abs=1e-10)
        assert cv.symmetrize(g).norm_sq == pytest.approx(cv.symmetrize(f).norm_sq, abs=1e-10)


def test_extension_independence(rng):
    for n in (1, 2, 3):
        for _ in range(10):
            S, p = random_surface_point(rng, n)
            D = cv.nu_derivative_matrix(S, p)
            base = np.einsum("hk,kh", D, D)
            other = cv.trace_term_with_extension(S, p, rng.normal(size=2 * n) * 3)
            assert other == pytest.approx(base, abs=1e-7 * (1 + abs(base)))


def test_symmetrize_properties(rng):
    A = rng.normal(size=(3, 3))
    f = cv.ShapeForm(np.eye(3, 4), A, 0.0)
    s = cv.symmetrize(f)
    np.testing.assert_array_equal(cv.symmetrize(s).H_matrix, s.H_matrix)
    np.testing.assert_allclose(cv.symmetrize(cv.ShapeForm(f.basis, A - A.T, 0.0)).H_matrix, 0, atol=1e-15)
    S = A + A.T
    np.testing.assert_array_equal(cv.symmetrize(cv.ShapeForm(f.basis, S, 0.0)).H_matrix, S)


def test_saddle_minimal_not_htg(rng):
    S = sf.saddle(2)
    found = False
    for _ in range(50):
        p = S.parametrize(rng.uniform(-1, 1, 4))
        if sf.is_characteristic(S, p):
            continue
        assert abs(cv.mean_curvature(S, p)) < 1e-10
        if cv.norm_tilde_h_sq_formula(S, p) > 1e-4:
            found = True
            assert not cv.is_htg_at(S, p)
    assert found


def test_non_polynomial_routes(rng):
    H = sf.helicoid()
    for _ in range(5):
        p = H.parametrize([rng.uniform(0.2, 1.5), rng.uniform(-2, 2)])
        f = cv.second_fundamental_form(H, p, verify=True)
        assert f.route_residual < cv.VERIFY_TOL
        assert abs(f.H_matrix[0, 0]) < 1e-12
    chart = sf.SaddleY1Chart(2)
    box = sf.Box(np.array([0.5, -1, -1, -1.0]), np.array([1.0, 1, 1, 0.0]))
    S = sf.IntrinsicY1Graph(chart, box)
    T = sf.saddle(2)
    q = np.array([0.8, 0.3, -0.2, -0.4])
    p = sf.lift_psi(chart, q, box)
    assert cv.norm_tilde_h_sq_formula(S, p) == pytest.approx(cv.norm_tilde_h_sq_formula(T, p), rel=1e-10)
    assert cv.mean_curvature(S, p) == pytest.approx(0, abs=1e-10)


def test_grid_matches_pointwise(rng):
    S = sf.saddle(2)
    Z = rng.uniform(-1, 1, (40, 4))
    Z[0] = [0.5, 0.0, 0.5, 0.0]          # characteristic: x1 = y1, x2 = y2 = 0
    P = S.parametrize_batch(Z)
    G = cv.curvature_grid(S, P, frobenius=True)
    assert G.char[0] and np.isnan(G.H[0])
    for r in range(1, 40):
        if G.char[r]:
            continue
        assert G.h_sq[r] == pytest.approx(cv.norm_h_sq_formula(S, P[r]), rel=1e-12)
        assert G.h_sq_frobenius[r] == pytest.approx(G.h_sq[r], rel=1e-9)
        assert G.tilde_h_sq_frobenius[r] == pytest.approx(G.tilde_h_sq[r], abs=1e-9)
    csv_text = G.to_csv()
    assert csv_text.splitlines()[0].endswith("charFlag,TdH,H,h_sq,tilde_h_sq,htg")
    assert len(csv_text.splitlines()) == 41
