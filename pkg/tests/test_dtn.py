from math import factorial

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from dtnjordan.assembly import CoefficientSet, assemble_forms, conormal
from dtnjordan.dtn import (adjoint_dtn_eval, dtn_derivatives_contour, dtn_derivatives_taylor,
                           dtn_eval, dtn_nodal, taylor_polynomial)
from dtnjordan.errors import ContourViolationError, OrderError, ResolventViolationError
from dtnjordan.harness import closed_form_interval_dtn
from dtnjordan.instances import make_rng, random_coefficients
from dtnjordan.mesh import build_interval_mesh, build_rectangle_mesh
from dtnjordan.realizations import dirichlet_pencil, solve_homogeneous_bvp


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.parametrize("n", [2, 5, 25, 100])
def test_dtn_at_zero_is_exact(n):
    d = build_interval_mesh(n)
    forms = assemble_forms(d, CoefficientSet.laplacian(d))
    D = dtn_eval(forms, dirichlet_pencil(forms), 0.0)
    np.testing.assert_allclose(D, [[1, -1], [-1, 1]], rtol=0, atol=1e-12)


def test_dtn_at_minus_one_converges():
    ref = np.array([[np.cosh(1), -1], [-1, np.cosh(1)]]) / np.sinh(1)
    np.testing.assert_allclose(ref, [[1.3130, -0.8509], [-0.8509, 1.3130]], atol=1e-4)
    errs = []
    for n in (25, 50, 100):
        d = build_interval_mesh(n)
        forms = assemble_forms(d, CoefficientSet.laplacian(d))
        errs.append(np.abs(dtn_eval(forms, dirichlet_pencil(forms), -1.0) - ref).max())
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) >= 1.0)


def test_closed_form_helper_matches_sinh_form():
    ref = np.array([[np.cosh(1), -1], [-1, np.cosh(1)]]) / np.sinh(1)
    np.testing.assert_allclose(closed_form_interval_dtn(-1.0), ref, rtol=1e-14)
    np.testing.assert_allclose(closed_form_interval_dtn(0.0), [[1, -1], [-1, 1]])


def test_dtn_rejects_dirichlet_eigenvalue(laplace_1d):
    with pytest.raises(ResolventViolationError):
        dtn_eval(laplace_1d.forms, laplace_1d.pencil, laplace_1d.pencil.spectrum[0])


def test_dtn_columns_are_conormals(complex_2d):
    forms, p = complex_2d.forms, complex_2d.pencil
    lam = 1.0 + 2.0j
    D = dtn_eval(forms, p, lam)
    for j in range(forms.n_boundary):
        e = np.zeros(forms.n_boundary)
        e[j] = 1
        g = conormal(solve_homogeneous_bvp(forms, p, lam, e), None, lam, forms).values
        np.testing.assert_allclose(D[:, j], g, atol=1e-12 * np.abs(D).max())


def test_adjoint_real_symmetric_case(laplace_1d):
    f, p = laplace_1d.forms, laplace_1d.pencil
    np.testing.assert_allclose(adjoint_dtn_eval(f, p, -2.5), dtn_eval(f, p, -2.5), atol=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_dtn_duality(re, im, seed):
    d = build_rectangle_mesh(3, 4, 1.0, 1.0)
    forms = assemble_forms(d, random_coefficients(make_rng(seed), d))
    p = dirichlet_pencil(forms)
    lam = complex(re, im)
    if p.margin(lam) < 1e-6:
        return
    D = dtn_eval(forms, p, lam)
    Dt = adjoint_dtn_eval(forms, p, np.conj(lam))
    assert np.abs(Dt - D.conj().T).max() <= 1e-12 * np.abs(D).max()


def test_adjoint_with_imaginary_potential():
    d = build_interval_mesh(30)
    forms = assemble_forms(d, CoefficientSet.schroedinger_complex(d, 2j))
    p = dirichlet_pencil(forms)
    lam = -1.0 + 0.5j
    np.testing.assert_allclose(adjoint_dtn_eval(forms, p, np.conj(lam)),
                               dtn_eval(forms, p, lam).conj().T, atol=1e-12)


def _symbolic_n2_derivatives(lam0, order):
    lam = sp.symbols("lam")
    h = sp.Rational(1, 2)
    K = sp.Matrix([[2, -2, 0], [-2, 4, -2], [0, -2, 2]])
    M = h / 6 * sp.Matrix([[2, 1, 0], [1, 4, 1], [0, 1, 2]])
    A = K - lam * M
    G, I = [0, 2], [1]
    S = A.extract(G, G) - A.extract(G, I) * A.extract(I, I).inv() * A.extract(I, G)
    out = []
    for l in range(order + 1):
        out.append(np.array(sp.diff(S, lam, l).subs(lam, lam0).evalf(30), dtype=complex))
    return out


@pytest.mark.parametrize("lam0", [-1, sp.Rational(3, 2), sp.Rational(-7, 3)])
def test_taylor_matches_symbolic_n2(laplace_1d_n2, lam0):
    t = dtn_derivatives_taylor(laplace_1d_n2.forms, laplace_1d_n2.pencil, float(lam0), 4)
    for a, b in zip(t.matrices, _symbolic_n2_derivatives(lam0, 4)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13 * np.abs(b).max())


def test_taylor_order_zero_and_fd(complex_1d):
    f, p = complex_1d.forms, complex_1d.pencil
    lam0 = -0.5 + 0.25j
    t = dtn_derivatives_taylor(f, p, lam0, 1)
    assert t.method == "taylor" and t.order == 1
    np.testing.assert_allclose(t.matrices[0], dtn_eval(f, p, lam0), rtol=1e-14)
    fd = (dtn_eval(f, p, lam0 + 1e-6) - t.matrices[0]) / 1e-6
    assert _rel(fd, t.matrices[1]) < 1e-5


def test_taylor_order_cap(complex_1d):
    with pytest.raises(OrderError):
        dtn_derivatives_taylor(complex_1d.forms, complex_1d.pencil, 0.0, 9)
    with pytest.raises(OrderError):
        dtn_derivatives_taylor(complex_1d.forms, complex_1d.pencil, 0.0, -1)


@pytest.mark.parametrize("fixture", ["complex_1d", "complex_2d"])
def test_contour_matches_taylor(request, fixture):
    b = request.getfixturevalue(fixture)
    lam0 = 0.3 - 0.2j
    t = dtn_derivatives_taylor(b.forms, b.pencil, lam0, 4)
    c = dtn_derivatives_contour(b.forms, b.pencil, lam0, 4)
    assert c.method == "contour"
    for a, z in zip(t.matrices, c.matrices):
        assert _rel(z, a) <= 1e-8


def test_contour_radius_spanning_eigenvalue(laplace_1d):
    p = laplace_1d.pencil
    dist = p.distance_to_spectrum(5.0)
    with pytest.raises(ContourViolationError):
        dtn_derivatives_contour(laplace_1d.forms, p, 5.0, 2, radius=1.5 * dist)


def test_taylor_remainder_order(complex_2d):
    f, p = complex_2d.forms, complex_2d.pencil
    lam0 = 0.5
    lmax = 2
    t = dtn_derivatives_taylor(f, p, lam0, lmax)
    deltas = [0.2, 0.1, 0.05]
    errs = [np.linalg.norm(dtn_eval(f, p, lam0 + d * (1 + 1j)) - taylor_polynomial(t, lam0 + d * (1 + 1j)))
            for d in deltas]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > lmax + 0.8)


def test_taylor_coefficient_scaling(complex_1d):
    t = dtn_derivatives_taylor(complex_1d.forms, complex_1d.pencil, 0.0, 3)
    np.testing.assert_allclose(t.taylor_coefficient(3), t.matrices[3] / factorial(3))


def test_dtn_nodal_1d_equals_dual(complex_1d):
    f, p = complex_1d.forms, complex_1d.pencil
    np.testing.assert_allclose(dtn_nodal(f, p, 1.0), dtn_eval(f, p, 1.0), rtol=1e-14)


def test_dtn_nodal_2d_uses_edge_weights(complex_2d):
    f, p = complex_2d.forms, complex_2d.pencil
    D = dtn_eval(f, p, 1.0)
    N = dtn_nodal(f, p, 1.0)
    assert not np.allclose(N, D)
    np.testing.assert_allclose(f.mass_boundary @ N, D, atol=1e-12 * np.abs(D).max())
    # uniform edges: row sums of the boundary Gram are the lumped edge lengths
    x = f.domain.node_coordinates[f.boundary]
    corners = ((np.isclose(x[:, 0], 0) | np.isclose(x[:, 0], 1.2))
               & (np.isclose(x[:, 1], 0) | np.isclose(x[:, 1], 1.0)))
    lumped = f.mass_boundary.sum(axis=1)
    assert np.allclose(lumped[corners], 0.5 * (1.2 / 6 + 1.0 / 5))
