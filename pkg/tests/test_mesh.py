import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dtnjordan.errors import InvalidMeshError
from dtnjordan.mesh import build_interval_mesh, build_rectangle_mesh, classify_dofs


def test_interval_n2():
    d = build_interval_mesh(2, 1.0)
    np.testing.assert_allclose(d.node_coordinates[:, 0], [0, 0.5, 1])
    assert list(d.boundary_nodes) == [0, 2]
    assert list(d.interior_nodes) == [1]
    assert d.element_diameter_max == pytest.approx(0.5)


def test_interval_n4_length2():
    d = build_interval_mesh(4, 2.0)
    assert d.n_nodes == 5
    assert d.element_diameter_max == pytest.approx(0.5)
    assert list(d.boundary_nodes) == [0, 4]


def test_interval_rejects_single_element():
    with pytest.raises(InvalidMeshError):
        build_interval_mesh(1, 1.0)


def test_rectangle_counts_2x2():
    d = build_rectangle_mesh(2, 2, 1.0, 1.0)
    assert (d.n_nodes, d.n_elements, d.n_boundary, len(d.interior_nodes)) == (9, 8, 8, 1)


def test_rectangle_counts_3x2():
    d = build_rectangle_mesh(3, 2, 1.0, 1.0)
    assert (d.n_nodes, d.n_elements, d.n_boundary, len(d.interior_nodes)) == (12, 12, 10, 2)


def test_rectangle_rejects_thin_grid():
    with pytest.raises(InvalidMeshError):
        build_rectangle_mesh(1, 2, 1.0, 1.0)


@pytest.mark.parametrize("n, interior, boundary", [(2, [1], [0, 2]), (4, [1, 2, 3], [0, 4])])
def test_classify_interval(n, interior, boundary):
    assert classify_dofs(build_interval_mesh(n)) == (interior, boundary)


def test_classify_rectangle():
    i, b = classify_dofs(build_rectangle_mesh(2, 2, 1.0, 1.0))
    assert len(i) == 1 and len(b) == 8


@given(st.integers(2, 60), st.floats(0.1, 10.0))
def test_interval_invariants(n, length):
    d = build_interval_mesh(n, length)
    assert d.n_nodes == n + 1
    assert np.all(d.element_measures() > 0)
    assert d.element_measures().sum() == pytest.approx(length, rel=1e-14)
    i, b = classify_dofs(d)
    assert sorted(i + b) == list(range(d.n_nodes))
    assert classify_dofs(d) == (i, b)


@given(st.integers(2, 12), st.integers(2, 12), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_rectangle_invariants(nx, ny, w, h):
    d = build_rectangle_mesh(nx, ny, w, h)
    assert d.n_nodes == (nx + 1) * (ny + 1)
    assert np.all(d.element_measures() > 0)
    assert d.element_measures().sum() == pytest.approx(w * h, rel=1e-13)
    i, b = classify_dofs(d)
    assert sorted(i + b) == list(range(d.n_nodes))
    assert not set(i) & set(b)
    x, y = d.node_coordinates[b].T
    tol = 1e-12 * max(w, h)
    on_edge = (np.abs(x) < tol) | (np.abs(x - w) < tol) | (np.abs(y) < tol) | (np.abs(y - h) < tol)
    assert on_edge.all()
    assert len(b) == 2 * (nx + ny)
