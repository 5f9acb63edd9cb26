"""Structured P1 meshes on intervals and rectangles.

Nodes carry one degree of freedom each, so the trace of a nodal vector is
its restriction to the boundary nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMeshError

__all__ = [
    "DiscreteDomain",
    "build_interval_mesh",
    "build_rectangle_mesh",
    "classify_dofs",
]


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Mesh with an interior/boundary partition of its nodes.

    Attributes
    ----------
    dimension : int
        1 or 2.
    node_coordinates : ndarray, shape (N, dimension)
    elements : ndarray, shape (E, dimension + 1)
        Node indices of each segment or (counter-clockwise) triangle.
    boundary_nodes, interior_nodes : ndarray of int
        Sorted ascending; together a partition of ``range(N)``.
    element_diameter_max : float
    boundary_edges : ndarray, shape (n_edges, 2)
        Boundary facets as node pairs (2D only; empty in 1D).
    """

    dimension: int
    node_coordinates: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    interior_nodes: np.ndarray
    element_diameter_max: float
    boundary_edges: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    extent: tuple = ()

    @property
    def n_nodes(self) -> int:
        return self.node_coordinates.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_nodes.shape[0]

    def element_measures(self) -> np.ndarray:
        x = self.node_coordinates
        el = self.elements
        if self.dimension == 1:
            return np.abs(x[el[:, 1], 0] - x[el[:, 0], 0])
        e1 = x[el[:, 1]] - x[el[:, 0]]
        e2 = x[el[:, 2]] - x[el[:, 0]]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def measure(self) -> float:
        return float(np.prod(self.extent))


def build_interval_mesh(n: int, length: float = 1.0) -> DiscreteDomain:
    """Uniform partition of ``[0, length]`` into ``n`` segments."""
    if int(n) != n or n < 2:
        raise InvalidMeshError(f"interval mesh needs n >= 2, got {n}")
    if not length > 0:
        raise InvalidMeshError(f"length must be positive, got {length}")
    n = int(n)
    x = np.linspace(0.0, float(length), n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return DiscreteDomain(
        dimension=1,
        node_coordinates=_frozen(x[:, None], np.float64),
        elements=_frozen(elements, np.int64),
        boundary_nodes=_frozen([0, n], np.int64),
        interior_nodes=_frozen(np.arange(1, n), np.int64),
        element_diameter_max=float(length) / n,
        extent=(float(length),),
    )


def build_rectangle_mesh(nx: int, ny: int, width: float = 1.0,
                         height: float = 1.0) -> DiscreteDomain:
    """Structured triangulation of ``[0, width] x [0, height]``.

    Node ``(i, j)`` has global index ``j * (nx + 1) + i``. Each grid cell is
    split along its lower-left to upper-right diagonal.
    """
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise InvalidMeshError(f"rectangle mesh needs nx, ny >= 2, got {nx}, {ny}")
    if not (width > 0 and height > 0):
        raise InvalidMeshError("width and height must be positive")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, float(width), nx + 1)
    ys = np.linspace(0.0, float(height), ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            n0, n1 = idx(i, j), idx(i + 1, j)
            n2, n3 = idx(i, j + 1), idx(i + 1, j + 1)
            tris.append((n0, n1, n3))
            tris.append((n0, n3, n2))

    on_edge = ((np.arange(nx + 1)[None, :] == 0) | (np.arange(nx + 1)[None, :] == nx)
               | (np.arange(ny + 1)[:, None] == 0) | (np.arange(ny + 1)[:, None] == ny))
    on_edge = on_edge.ravel()
    boundary = np.flatnonzero(on_edge)
    interior = np.flatnonzero(~on_edge)

    edges = []
    for i in range(nx):
        edges.append((idx(i, 0), idx(i + 1, 0)))
        edges.append((idx(i, ny), idx(i + 1, ny)))
    for j in range(ny):
        edges.append((idx(0, j), idx(0, j + 1)))
        edges.append((idx(nx, j), idx(nx, j + 1)))

    hx, hy = width / nx, height / ny
    return DiscreteDomain(
        dimension=2,
        node_coordinates=_frozen(coords, np.float64),
        elements=_frozen(tris, np.int64),
        boundary_nodes=_frozen(boundary, np.int64),
        interior_nodes=_frozen(interior, np.int64),
        element_diameter_max=float(np.hypot(hx, hy)),
        boundary_edges=_frozen(edges, np.int64),
        extent=(float(width), float(height)),
    )


def classify_dofs(domain: DiscreteDomain) -> tuple[list[int], list[int]]:
    """Return ``(interior, boundary)`` node indices, each sorted."""
    return (sorted(int(i) for i in domain.interior_nodes),
            sorted(int(i) for i in domain.boundary_nodes))
