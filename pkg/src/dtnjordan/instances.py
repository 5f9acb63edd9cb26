"""Seeded problem instances.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``. Values
are drawn in the order documented on each function so the instances can be
regenerated by any PCG64 implementation with NumPy's stream conventions.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .assembly import CoefficientSet, FormMatrices, assemble_forms
from .mesh import DiscreteDomain, build_interval_mesh, build_rectangle_mesh
from .realizations import (BoundaryOperator, DirichletPencil, boundary_operator,
                           dirichlet_pencil)

__all__ = [
    "Instance",
    "make_rng",
    "random_coefficients",
    "random_boundary_matrix",
    "random_complex_instance",
    "random_polynomial_function",
    "polynomial_taylor_coefficients",
]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class Instance:
    domain: DiscreteDomain
    coeffs: CoefficientSet
    forms: FormMatrices
    pencil: DirichletPencil
    B: BoundaryOperator


def _cnormal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_coefficients(rng: np.random.Generator, domain: DiscreteDomain,
                        convection: float = 0.5) -> CoefficientSet:
    """Identity principal part, random complex ``c0`` and convection terms.

    Draw order: ``c0`` real parts then imaginary parts (one per element,
    uniform on [-2, 2] and [-1, 1]); then ``b`` and ``c`` as complex
    normals of shape ``(n_elements, d)`` scaled by ``convection``.
    """
    ne, d = domain.n_elements, domain.dimension
    c0 = rng.uniform(-2, 2, ne) + 1j * rng.uniform(-1, 1, ne)
    b = convection * _cnormal(rng, (ne, d))
    c = convection * _cnormal(rng, (ne, d))
    return CoefficientSet(np.broadcast_to(np.eye(d), (ne, d, d)).astype(complex), b, c, c0, 1.0)


def random_boundary_matrix(rng: np.random.Generator, n_boundary: int,
                           scale: float = 1.0) -> np.ndarray:
    """Complex normal ``n_boundary x n_boundary`` matrix (real parts drawn first)."""
    return scale * _cnormal(rng, (n_boundary, n_boundary))


def random_complex_instance(seed: int, n: int = 16, dims: int = 1,
                            convection: float = 0.5) -> Instance:
    """Non-self-adjoint instance with complex ``c0`` and a random nodal boundary operator.

    Draws :func:`random_coefficients` then :func:`random_boundary_matrix`
    from one generator.
    """
    rng = make_rng(seed)
    domain = build_interval_mesh(n, 1.0) if dims == 1 else build_rectangle_mesh(n, n, 1.0, 1.0)
    coeffs = random_coefficients(rng, domain, convection)
    forms = assemble_forms(domain, coeffs)
    B = boundary_operator(forms, random_boundary_matrix(rng, domain.n_boundary), "nodal")
    return Instance(domain, coeffs, forms, dirichlet_pencil(forms), B)


# partial-multiplicity patterns at the engineered zero; at most one length exceeds 1
MULTIPLICITY_PATTERNS = [(), (1,), (2,), (3,), (1, 1), (2, 1), (2, 2), (3, 1), (2, 1, 1),
                         (1, 1, 1), (3, 3)]


def random_polynomial_function(seed: int, size: int = 4, degree: int = 3):
    """Random matrix polynomial with a zero of known partial multiplicities.

    ``F(lam) = P diag(d_i(lam)) Q`` with ``d_i = a_i (lam - lam0)^{m_i} prod_k (lam - rho_ik)``
    of degree ``degree`` and ``P, Q`` random unitary matrices (Q factors of
    complex normal matrices). The other roots ``rho_ik`` keep a distance of
    at least 0.5 from ``lam0``, so rank decisions at ``lam0`` are well
    separated. Returns ``(lam0, coefficients, pattern)`` with coefficients in
    ascending powers of ``lam``.

    Draw order: pattern index, ``lam0`` (complex normal), ``P``, ``Q``; then
    for each diagonal entry ``a_i`` (complex normal) followed by, per extra
    root, a modulus uniform on [0.5, 2] and an angle uniform on [0, 2 pi).
    """
    rng = make_rng(seed)
    pattern = MULTIPLICITY_PATTERNS[int(rng.integers(len(MULTIPLICITY_PATTERNS)))]
    lam0 = complex(_cnormal(rng, ()))
    P = np.linalg.qr(_cnormal(rng, (size, size)))[0]
    Q = np.linalg.qr(_cnormal(rng, (size, size)))[0]
    mult = list(pattern) + [0] * (size - len(pattern))
    coeffs = np.zeros((degree + 1, size, size), dtype=complex)
    for i, m in enumerate(mult):
        lead = complex(_cnormal(rng, ()))
        roots = [lam0] * m
        for _ in range(degree - m):
            rad = rng.uniform(0.5, 2.0)
            ang = rng.uniform(0.0, 2 * np.pi)
            roots.append(lam0 + rad * np.exp(1j * ang))
        c = lead * np.polynomial.polynomial.polyfromroots(roots)
        for k in range(len(c)):
            coeffs[k] += c[k] * np.outer(P[:, i], Q[i, :])
    return lam0, coeffs, pattern


def polynomial_taylor_coefficients(coeffs, lam0):
    """Taylor coefficients ``F^(l)(lam0)/l!`` of a matrix polynomial."""
    deg = len(coeffs) - 1
    out = []
    for l in range(deg + 1):
        out.append(sum(comb(k, l) * lam0 ** (k - l) * coeffs[k] for k in range(l, deg + 1)))
    return out
