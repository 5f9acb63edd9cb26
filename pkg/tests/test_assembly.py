import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dtnjordan.assembly import (CoefficientSet, ConormalVector, assemble_forms,
                                certificate_matrix, conormal, ellipticity_certificate, trace)
from dtnjordan.errors import (DimensionError, EllipticityError, InfeasibleCoercivityError,
                              NotInOperatorDomainError)
from dtnjordan.instances import make_rng, random_coefficients
from dtnjordan.mesh import build_interval_mesh, build_rectangle_mesh
from dtnjordan.realizations import boundary_operator, solve_inhomogeneous_bvp

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


def test_stiffness_n2_by_hand():
    d = build_interval_mesh(2)
    K = assemble_forms(d, CoefficientSet.laplacian(d)).K
    np.testing.assert_allclose(K, [[2, -2, 0], [-2, 4, -2], [0, -2, 2]], atol=1e-14)


def test_mass_n2_by_hand():
    d = build_interval_mesh(2)
    M = assemble_forms(d, CoefficientSet.laplacian(d)).mass
    np.testing.assert_allclose(M, np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]]) / 12, atol=1e-15)


def test_zero_principal_part_is_not_elliptic():
    d = build_interval_mesh(2)
    with pytest.raises(EllipticityError):
        assemble_forms(d, CoefficientSet.uniform(d, c_principal=[[0.0]], mu=1.0))
    # mu defaults to the computed coercivity, here 0
    with pytest.raises(EllipticityError):
        assemble_forms(d, CoefficientSet.uniform(d, c_principal=[[0.0]]))


def test_coefficient_count_mismatch():
    d = build_interval_mesh(4)
    c = CoefficientSet.laplacian(build_interval_mesh(3))
    with pytest.raises(DimensionError):
        assemble_forms(d, c)


def test_dual_is_conjugate_transpose_with_complex_c0():
    d = build_interval_mesh(7)
    f = assemble_forms(d, CoefficientSet.schroedinger_complex(d, 0.3 + 2j))
    assert np.array_equal(f.K_dual, f.K.conj().T)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_dual_form_matches_independent_assembly(seed, dim):
    d = build_interval_mesh(9) if dim == 1 else build_rectangle_mesh(3, 4, 1.0, 1.5)
    c = random_coefficients(make_rng(seed), d)
    K = assemble_forms(d, c).K
    Kd = assemble_forms(d, c.dual()).K
    np.testing.assert_allclose(Kd, K.conj().T, atol=1e-13 * np.abs(K).max())


@given(st.integers(0, 2**32 - 1))
def test_gram_matrices_positive(seed):
    d = build_rectangle_mesh(4, 3, 1.0, 2.0)
    f = assemble_forms(d, random_coefficients(make_rng(seed), d))
    for G in (f.mass, f.mass_boundary, f.h1):
        np.testing.assert_allclose(G, G.conj().T, atol=1e-15)
        assert np.linalg.eigvalsh(G)[0] > 0
    assert np.all(f.trace_selector.sum(axis=1) == 1)


def test_trace_examples(laplace_1d_n2):
    forms = laplace_1d_n2.forms
    np.testing.assert_array_equal(trace(np.ones(3), forms), [1, 1])
    np.testing.assert_array_equal(trace([0, 0.5, 1], forms), [0, 1])
    np.testing.assert_array_equal(trace([0, 7.0, 0], forms), [0, 0])
    with pytest.raises(DimensionError):
        trace(np.ones(4), forms)


def test_conormal_of_linear_function(laplace_1d_n2):
    g = conormal(np.array([0, 0.5, 1.0]), None, 0.0, laplace_1d_n2.forms)
    assert g.coordinate_convention == "dual"
    np.testing.assert_allclose(g.values, [-1, 1], atol=1e-14)


def test_conormal_of_interior_supported_eigen_data(laplace_1d):
    forms, pencil = laplace_1d.forms, laplace_1d.pencil
    from scipy.linalg import eig
    w, V = eig(pencil.K_II, pencil.M_II)
    k = np.argmin(np.abs(w))
    f = np.zeros(forms.n, complex)
    f[forms.interior] = V[:, k]
    lam = 2.0
    g = conormal(f, (w[k] - lam) * f, lam, forms)
    np.testing.assert_allclose(g.values, (forms.K @ f)[forms.boundary] -
                               (forms.mass @ (w[k] * f))[forms.boundary], atol=1e-10)


def test_conormal_rejects_inconsistent_data(laplace_1d):
    f = np.random.default_rng(0).standard_normal(laplace_1d.forms.n)
    with pytest.raises(NotInOperatorDomainError):
        conormal(f, None, 0.0, laplace_1d.forms)


@given(st.integers(0, 2**32 - 1), cplx)
def test_green_first_identity_and_linearity(seed, lam):
    d = build_rectangle_mesh(4, 4, 1.0, 1.0)
    forms = assemble_forms(d, random_coefficients(make_rng(seed), d))
    from dtnjordan.realizations import dirichlet_pencil
    pencil = dirichlet_pencil(forms)
    if pencil.margin(lam) < 1e-6:
        return
    rng = np.random.default_rng(seed)
    nb, n = forms.n_boundary, forms.n
    phis = rng.standard_normal((2, nb)) + 1j * rng.standard_normal((2, nb))
    hs = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    fs = [solve_inhomogeneous_bvp(forms, pencil, lam, p, h) for p, h in zip(phis, hs)]
    gs = [conormal(f, h, lam, forms).values for f, h in zip(fs, hs)]
    test = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a_fg = np.vdot(test, forms.K @ fs[0])
    rhs = a_fg - np.vdot(test, forms.mass @ (lam * fs[0] + hs[0]))
    lhs = np.vdot(trace(test, forms), gs[0])
    assert abs(lhs - rhs) <= 1e-12 * forms.k_norm * np.linalg.norm(fs[0]) * np.linalg.norm(test)
    a, b = 0.7 - 0.2j, -1.3j
    combo = conormal(a * fs[0] + b * fs[1], a * hs[0] + b * hs[1], lam, forms).values
    np.testing.assert_allclose(combo, a * gs[0] + b * gs[1],
                               atol=1e-11 * forms.k_norm * max(map(np.linalg.norm, fs)))


def test_conormal_vector_round_trip(complex_2d):
    forms = complex_2d.forms
    v = np.arange(forms.n_boundary) + 1j
    c = ConormalVector(v, "dual")
    back = c.to_nodal(forms).to_dual(forms)
    np.testing.assert_allclose(back.values, v, rtol=1e-13)
    assert back.coordinate_convention == "dual"


def test_ellipticity_laplacian_half(laplace_1d):
    forms = laplace_1d.forms
    nu = ellipticity_certificate(forms, None, 0.5)
    assert nu >= 0
    assert np.linalg.eigvalsh(certificate_matrix(forms, None, 0.5, nu))[0] >= -1e-12 * forms.k_norm


def test_ellipticity_zero_target_is_direct_eigensolve(complex_1d):
    import scipy.linalg as sla
    forms = complex_1d.forms
    B = boundary_operator(forms, [[1.0, 2.0j], [0.5, -1.0]])
    nu = ellipticity_certificate(forms, B, 0.0, rtol=0.0)
    KB = certificate_matrix(forms, B, 0.0, 0.0)
    low = sla.eigh(KB, forms.mass, eigvals_only=True)[0]
    assert nu == pytest.approx(max(0.0, -low), rel=1e-10, abs=1e-12)


def test_ellipticity_infeasible_target(laplace_1d):
    with pytest.raises(InfeasibleCoercivityError):
        ellipticity_certificate(laplace_1d.forms, None, 10 * laplace_1d.forms.mu_principal)


@given(st.floats(0, 0.99), st.floats(0, 0.99))
def test_ellipticity_monotone(a, b):
    d = build_interval_mesh(20)
    forms = assemble_forms(d, CoefficientSet.schroedinger_complex(d, -3 + 1j))
    lo, hi = sorted((a, b))
    assert ellipticity_certificate(forms, None, lo) <= ellipticity_certificate(forms, None, hi) \
        + 1e-9
