"""Assembly of the sesquilinear form, its dual, Gram matrices and the trace.

Conventions
-----------
For nodal vectors ``f, g`` the form is ``a(f, g) = g^H K f``, i.e.
``K[i, j] = a(phi_j, phi_i)``. Inner products are ``(f, g)_M = g^H M f``.
Boundary functionals are stored in *dual* coordinates (their pairings
against the boundary nodal functions); ``<psi, Tr g> = (Tr g)^H psi``.
Nodal (L2 on the boundary) coordinates are obtained by solving with the
boundary Gram matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import kernels
from .errors import (DimensionError, EllipticityError,
                     InfeasibleCoercivityError, NotInOperatorDomainError)
from .mesh import DiscreteDomain

__all__ = [
    "CoefficientSet",
    "FormMatrices",
    "ConormalVector",
    "assemble_forms",
    "trace",
    "conormal",
    "ellipticity_certificate",
    "certificate_matrix",
]

TOL_CONSISTENCY = 1e-8


def _hermitian_part(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Piecewise-constant coefficients, one value per element.

    ``c_principal[e]`` is the d x d matrix ``c_kl``; ``b_conv[e]`` multiplies
    ``f * conj(d_k g)``; ``c_conv[e]`` multiplies ``d_k f * conj(g)``;
    ``c_zero[e]`` multiplies ``f * conj(g)``.
    """

    c_principal: np.ndarray
    b_conv: np.ndarray
    c_conv: np.ndarray
    c_zero: np.ndarray
    mu: float

    @property
    def n_elements(self) -> int:
        return self.c_principal.shape[0]

    @property
    def dimension(self) -> int:
        return self.c_principal.shape[1]

    def principal_coercivity(self) -> float:
        """Smallest eigenvalue of the Hermitian part of ``c_kl`` over all elements."""
        if self.n_elements == 0:
            return np.inf
        return float(np.linalg.eigvalsh(_hermitian_part(self.c_principal))[:, 0].min())

    def dual(self) -> "CoefficientSet":
        """Coefficients of the dual form ``a*(f, g) = conj(a(g, f))``."""
        return CoefficientSet(
            c_principal=np.conj(np.swapaxes(self.c_principal, 1, 2)),
            b_conv=np.conj(self.c_conv),
            c_conv=np.conj(self.b_conv),
            c_zero=np.conj(self.c_zero),
            mu=self.mu,
        )

    @classmethod
    def uniform(cls, domain: DiscreteDomain, c_principal=None, b_conv=None,
                c_conv=None, c_zero=0.0, mu=None) -> "CoefficientSet":
        """Same coefficients on every element.

        ``mu`` defaults to the coercivity constant of ``c_principal``.
        """
        d, ne = domain.dimension, domain.n_elements
        cp = np.eye(d) if c_principal is None else np.asarray(c_principal, dtype=complex)
        cp = np.broadcast_to(np.reshape(cp, (d, d)), (ne, d, d)).astype(complex)
        b = np.zeros(d) if b_conv is None else np.asarray(b_conv, dtype=complex)
        c = np.zeros(d) if c_conv is None else np.asarray(c_conv, dtype=complex)
        coeffs = cls(
            c_principal=cp,
            b_conv=np.broadcast_to(b, (ne, d)).astype(complex),
            c_conv=np.broadcast_to(c, (ne, d)).astype(complex),
            c_zero=np.broadcast_to(np.asarray(c_zero, dtype=complex), (ne,)).astype(complex),
            mu=0.0,
        )
        if mu is None:
            mu = coeffs.principal_coercivity()
        return cls(coeffs.c_principal, coeffs.b_conv, coeffs.c_conv, coeffs.c_zero,
                   float(mu))

    @classmethod
    def laplacian(cls, domain: DiscreteDomain) -> "CoefficientSet":
        return cls.uniform(domain)

    @classmethod
    def schroedinger_complex(cls, domain: DiscreteDomain, c0) -> "CoefficientSet":
        return cls.uniform(domain, c_zero=complex(c0))

    @classmethod
    def anisotropic(cls, domain: DiscreteDomain, c_matrix) -> "CoefficientSet":
        return cls.uniform(domain, c_principal=c_matrix)


def check_coefficients(domain: DiscreteDomain, coeffs: CoefficientSet) -> None:
    ne, d = domain.n_elements, domain.dimension
    shapes = {
        "c_principal": (coeffs.c_principal.shape, (ne, d, d)),
        "b_conv": (coeffs.b_conv.shape, (ne, d)),
        "c_conv": (coeffs.c_conv.shape, (ne, d)),
        "c_zero": (coeffs.c_zero.shape, (ne,)),
    }
    for name, (got, want) in shapes.items():
        if tuple(got) != want:
            raise DimensionError(f"{name} has shape {tuple(got)}, expected {want}")
    if not coeffs.mu > 0:
        raise EllipticityError(f"ellipticity constant must be positive, got {coeffs.mu}")
    worst = coeffs.principal_coercivity()
    if worst < coeffs.mu * (1 - 1e-12):
        raise EllipticityError(
            f"Re c_kl xi_k conj(xi_l) >= mu |xi|^2 fails: min eigenvalue {worst:.6g} "
            f"< mu = {coeffs.mu:.6g}")


@dataclass(frozen=True, eq=False)
class FormMatrices:
    """Dense matrices of the discretized forms on a mesh."""

    domain: DiscreteDomain
    K: np.ndarray
    K_dual: np.ndarray
    mass: np.ndarray
    mass_boundary: np.ndarray
    h1: np.ndarray
    laplace: np.ndarray
    trace_selector: np.ndarray
    mu_principal: float

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.trace_selector.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return self.domain.interior_nodes

    @property
    def boundary(self) -> np.ndarray:
        return self.domain.boundary_nodes

    @cached_property
    def k_norm(self) -> float:
        return float(np.linalg.norm(self.K, 2))

    @cached_property
    def mass_boundary_cho(self):
        return sla.cho_factor(self.mass_boundary)

    def boundary_to_nodal(self, values: np.ndarray) -> np.ndarray:
        """Dual -> nodal boundary coordinates (``Mass_boundary^{-1} values``)."""
        return sla.cho_solve(self.mass_boundary_cho, values)

    def boundary_to_dual(self, values: np.ndarray) -> np.ndarray:
        return self.mass_boundary @ values

    def extend(self, phi: np.ndarray) -> np.ndarray:
        """Zero extension of boundary values to a full nodal vector."""
        phi = np.asarray(phi)
        out = np.zeros((self.n,) + phi.shape[1:], dtype=np.result_type(phi, float))
        out[self.boundary] = phi
        return out


def _boundary_mass(domain: DiscreteDomain) -> np.ndarray:
    nb = domain.n_boundary
    if domain.dimension == 1:
        # point boundary: counting measure
        return np.eye(nb)
    local = np.searchsorted(domain.boundary_nodes, domain.boundary_edges)
    x = domain.node_coordinates
    lengths = np.linalg.norm(x[domain.boundary_edges[:, 1]] - x[domain.boundary_edges[:, 0]],
                             axis=1)
    Mb = np.zeros((nb, nb))
    ref = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    for (a, b), ell in zip(local, lengths):
        Mb[np.ix_([a, b], [a, b])] += ell * ref
    return Mb


def assemble_forms(domain: DiscreteDomain, coeffs: CoefficientSet) -> FormMatrices:
    """Assemble all matrices with exact integration of P1 products.

    Raises
    ------
    DimensionError
        Coefficient arrays do not match the element count.
    EllipticityError
        The principal part is not uniformly elliptic with constant ``mu``.
    """
    check_coefficients(domain, coeffs)
    K, M, L = kernels.assemble_p1(domain.node_coordinates, domain.elements,
                                  coeffs.c_principal, coeffs.b_conv, coeffs.c_conv,
                                  coeffs.c_zero)
    S = np.zeros((domain.n_boundary, domain.n_nodes))
    S[np.arange(domain.n_boundary), domain.boundary_nodes] = 1.0
    return FormMatrices(
        domain=domain,
        K=K,
        K_dual=K.conj().T.copy(),
        mass=M,
        mass_boundary=_boundary_mass(domain),
        h1=L + M,
        laplace=L,
        trace_selector=S,
        mu_principal=coeffs.principal_coercivity(),
    )


def trace(f, forms: FormMatrices) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[0] != forms.n:
        raise DimensionError(f"vector of length {f.shape[0]} on a mesh with {forms.n} nodes")
    return forms.trace_selector @ f


@dataclass(frozen=True)
class ConormalVector:
    values: np.ndarray
    coordinate_convention: str = "dual"

    def to_nodal(self, forms: FormMatrices) -> "ConormalVector":
        if self.coordinate_convention == "nodal":
            return self
        return ConormalVector(forms.boundary_to_nodal(self.values), "nodal")

    def to_dual(self, forms: FormMatrices) -> "ConormalVector":
        if self.coordinate_convention == "dual":
            return self
        return ConormalVector(forms.boundary_to_dual(self.values), "dual")


def operator_residual(f, h, lam, forms: FormMatrices, which="primal") -> np.ndarray:
    """Full residual ``(A - lam M) f - M h`` with ``A`` = K or K_dual."""
    A = forms.K if which == "primal" else forms.K_dual
    f = np.asarray(f)
    h = np.zeros_like(f) if h is None else np.asarray(h)
    return A @ f - lam * (forms.mass @ f) - forms.mass @ h


def conormal(f, h, lam, forms: FormMatrices, which: str = "primal",
             tol_consistency: float = TOL_CONSISTENCY) -> ConormalVector:
    """Co-normal derivative of ``f`` whose strong action is ``lam * f + h``.

    For ``which="dual"`` the dual matrix is used with ``conj(lam)``, so the
    same ``lam`` can be passed for a primal problem and its adjoint.

    Raises
    ------
    NotInOperatorDomainError
        The interior rows of the residual exceed ``tol_consistency`` relative
        to ``||K|| ||f|| + ||M h||``.
    """
    if which not in ("primal", "dual"):
        raise ValueError(f"which must be 'primal' or 'dual', got {which!r}")
    f = np.asarray(f)
    if f.shape[0] != forms.n:
        raise DimensionError(f"vector of length {f.shape[0]} on a mesh with {forms.n} nodes")
    lam_eff = lam if which == "primal" else np.conj(lam)
    r = operator_residual(f, h, lam_eff, forms, which)
    mh = 0.0 if h is None else np.linalg.norm(forms.mass @ np.asarray(h))
    scale = forms.k_norm * np.linalg.norm(f) + mh
    interior = np.linalg.norm(r[forms.interior])
    if interior > tol_consistency * scale:
        raise NotInOperatorDomainError(
            f"interior residual {interior:.3e} exceeds {tol_consistency:.1e} * {scale:.3e}")
    return ConormalVector(r[forms.boundary], "dual")


def robin_matrix(forms: FormMatrices, b_dual) -> np.ndarray:
    S = forms.trace_selector
    return forms.K - S.T @ b_dual @ S


def certificate_matrix(forms: FormMatrices, B, mu_target: float, nu: float) -> np.ndarray:
    """Hermitian part of ``K_B + nu M - mu_target H1``."""
    KB = forms.K if B is None else robin_matrix(forms, B.b_dual)
    return _hermitian_part(KB) + nu * forms.mass - mu_target * forms.h1


def ellipticity_certificate(forms: FormMatrices, B=None, mu_target: float = 0.0,
                            rtol: float = 1e-8) -> float:
    """Smallest shift ``nu >= 0`` making ``Re a_B(f) + nu ||f||^2 >= mu ||f||_H1^2``.

    The optimal shift is the largest generalized eigenvalue of
    ``(mu H1 - Re K_B, M)``; it is returned inflated by ``rtol`` so the
    certificate matrix is positive semidefinite after rounding.

    Raises
    ------
    InfeasibleCoercivityError
        ``mu_target`` exceeds the coercivity of the principal coefficients, so
        no mesh-independent shift exists.
    """
    if mu_target < 0:
        raise ValueError("mu_target must be non-negative")
    if mu_target > forms.mu_principal * (1 + 1e-12):
        raise InfeasibleCoercivityError(
            f"mu_target={mu_target:.6g} exceeds the principal coercivity "
            f"{forms.mu_principal:.6g}")
    H = -certificate_matrix(forms, B, mu_target, 0.0)
    top = float(sla.eigh(H, forms.mass, eigvals_only=True)[-1])
    nu = max(0.0, top)
    return nu + rtol * max(1.0, nu)
