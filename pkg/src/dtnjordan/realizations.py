"""Dirichlet and Robin realizations as matrix pencils, and boundary value solves."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .assembly import FormMatrices, robin_matrix
from .errors import DimensionError, ResolventViolationError

__all__ = [
    "DirichletPencil",
    "BoundaryOperator",
    "RobinPencil",
    "dirichlet_pencil",
    "in_resolvent_set",
    "solve_homogeneous_bvp",
    "solve_inhomogeneous_bvp",
    "boundary_operator",
    "robin_pencil",
    "in_robin_domain",
]

TOL_RESOLVENT = 1e-10


@dataclass(frozen=True, eq=False)
class DirichletPencil:
    """Interior blocks ``(K_II, M_II)`` and their generalized spectrum.

    ``spectrum_dual`` is computed independently from the dual matrix.
    """

    K_II: np.ndarray
    M_II: np.ndarray
    spectrum: np.ndarray
    spectrum_dual: np.ndarray
    tol_resolvent: float = TOL_RESOLVENT

    @cached_property
    def k_norm(self) -> float:
        return float(np.linalg.norm(self.K_II, 2))

    def margin(self, lam) -> float:
        """Smallest singular value of ``K_II - lam M_II`` relative to ``||K_II||``."""
        s = sla.svdvals(self.K_II - lam * self.M_II)
        return float(s[-1] / self.k_norm)

    def distance_to_spectrum(self, lam) -> float:
        return float(np.min(np.abs(self.spectrum - lam)))


def dirichlet_pencil(forms: FormMatrices, tol_resolvent: float = TOL_RESOLVENT) -> DirichletPencil:
    I = forms.interior
    K_II = forms.K[np.ix_(I, I)]
    M_II = forms.mass[np.ix_(I, I)]
    Kd_II = forms.K_dual[np.ix_(I, I)]
    spec = sla.eigvals(K_II, M_II)
    spec_dual = sla.eigvals(Kd_II, M_II)
    order = np.lexsort((spec.imag, spec.real))
    order_d = np.lexsort((spec_dual.imag, spec_dual.real))
    return DirichletPencil(K_II=K_II, M_II=M_II, spectrum=spec[order],
                           spectrum_dual=spec_dual[order_d], tol_resolvent=tol_resolvent)


def in_resolvent_set(pencil: DirichletPencil, lam) -> tuple[bool, float]:
    """``(inside, margin)``; ``inside`` iff the relative margin exceeds the tolerance."""
    m = pencil.margin(lam)
    return m > pencil.tol_resolvent, m


def require_resolvent(pencil: DirichletPencil, lam) -> float:
    ok, m = in_resolvent_set(pencil, lam)
    if not ok:
        raise ResolventViolationError(lam, m, pencil.tol_resolvent)
    return m


def _interior_factor(forms: FormMatrices, pencil: DirichletPencil, lam, which="primal"):
    require_resolvent(pencil, lam)
    A = forms.K if which == "primal" else forms.K_dual
    I = forms.interior
    return sla.lu_factor(A[np.ix_(I, I)] - lam * forms.mass[np.ix_(I, I)])


def solve_homogeneous_bvp(forms: FormMatrices, pencil: DirichletPencil, lam, phi,
                          which: str = "primal") -> np.ndarray:
    """Discrete ``(A - lam) f = 0`` with ``Tr f = phi``.

    ``which="dual"`` solves the adjoint problem with the dual form at the
    given ``lam`` (pass ``conj(lam0)`` for the adjoint of a problem at
    ``lam0``). The resolvent check uses the conjugated parameter in that
    case, since the dual Dirichlet spectrum is the conjugate one.
    """
    phi = np.asarray(phi)
    if phi.shape[0] != forms.n_boundary:
        raise DimensionError(f"boundary data of length {phi.shape[0]}, expected {forms.n_boundary}")
    check_lam = lam if which == "primal" else np.conj(lam)
    require_resolvent(pencil, check_lam)
    A = forms.K if which == "primal" else forms.K_dual
    I, G = forms.interior, forms.boundary
    lu = sla.lu_factor(A[np.ix_(I, I)] - lam * forms.mass[np.ix_(I, I)])
    rhs = (A[np.ix_(I, G)] - lam * forms.mass[np.ix_(I, G)]) @ phi
    f = np.zeros((forms.n,) + phi.shape[1:], dtype=complex)
    f[G] = phi
    f[I] = -sla.lu_solve(lu, rhs)
    return f


def dirichlet_resolvent_apply(forms: FormMatrices, pencil: DirichletPencil, lam, h) -> np.ndarray:
    """Discrete ``(A_D - lam)^{-1} h`` as a full nodal vector (zero trace)."""
    lu = _interior_factor(forms, pencil, lam)
    I = forms.interior
    f = np.zeros((forms.n,) + np.shape(h)[1:], dtype=complex)
    f[I] = sla.lu_solve(lu, (forms.mass @ np.asarray(h))[I])
    return f


def solve_inhomogeneous_bvp(forms: FormMatrices, pencil: DirichletPencil, lam, phi, h) -> np.ndarray:
    """Discrete ``(A - lam) f = h`` with ``Tr f = phi``.

    Homogeneous solution with trace ``phi`` plus the interior Dirichlet solve
    of ``h``.
    """
    h = np.asarray(h)
    if h.shape[0] != forms.n:
        raise DimensionError(f"source of length {h.shape[0]}, expected {forms.n}")
    return (solve_homogeneous_bvp(forms, pencil, lam, phi)
            + dirichlet_resolvent_apply(forms, pencil, lam, h))


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Boundary operator in nodal coordinates with its semiboundedness bound.

    ``eta`` is the largest ``Re <B phi, phi> / ||phi||^2`` over the boundary
    space (both in the boundary L2 inner product).
    """

    b_nodal: np.ndarray
    b_dual: np.ndarray
    eta: float


def semibound(b_dual: np.ndarray, mass_boundary: np.ndarray) -> float:
    H = 0.5 * (b_dual + b_dual.conj().T)
    return float(sla.eigh(H, mass_boundary, eigvals_only=True)[-1])


def boundary_operator(forms: FormMatrices, matrix=None, coordinates: str = "nodal") -> BoundaryOperator:
    """Wrap a boundary matrix given in nodal or dual coordinates.

    ``matrix=None`` is the zero operator (Neumann-type realization).
    """
    nb = forms.n_boundary
    if matrix is None:
        matrix = np.zeros((nb, nb), dtype=complex)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (nb, nb):
        raise DimensionError(f"boundary operator has shape {matrix.shape}, expected {(nb, nb)}")
    if coordinates == "nodal":
        b_nodal = matrix
        b_dual = forms.mass_boundary @ matrix
    elif coordinates == "dual":
        b_dual = matrix
        b_nodal = forms.boundary_to_nodal(matrix)
    else:
        raise ValueError(f"coordinates must be 'nodal' or 'dual', got {coordinates!r}")
    return BoundaryOperator(b_nodal=b_nodal, b_dual=b_dual,
                            eta=semibound(b_dual, forms.mass_boundary))


@dataclass(frozen=True, eq=False)
class RobinPencil:
    K_B: np.ndarray
    mass: np.ndarray
    spectrum: np.ndarray
    B: BoundaryOperator


def robin_pencil(forms: FormMatrices, B: BoundaryOperator) -> RobinPencil:
    """``K_B = K - Tr^T Mass_boundary B_nodal Tr`` and its spectrum."""
    if B.b_dual.shape != (forms.n_boundary, forms.n_boundary):
        raise DimensionError("boundary operator does not match the mesh boundary")
    KB = robin_matrix(forms, B.b_dual)
    spec = sla.eigvals(KB, forms.mass)
    order = np.lexsort((spec.imag, spec.real))
    return RobinPencil(K_B=KB, mass=forms.mass, spectrum=spec[order], B=B)


def robin_domain_residual(forms: FormMatrices, B: BoundaryOperator, f, h, lam) -> float:
    """Relative mismatch of ``gamma_N f`` and ``B Tr f`` in nodal coordinates."""
    from .assembly import conormal

    gamma = conormal(f, h, lam, forms).to_nodal(forms).values
    target = B.b_nodal @ (forms.trace_selector @ f)
    mh = 0.0 if h is None else np.linalg.norm(forms.mass @ np.asarray(h))
    scale = forms.k_norm * np.linalg.norm(f) + mh
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(gamma - target) / scale)


def in_robin_domain(forms: FormMatrices, B: BoundaryOperator, f, h, lam, tol: float = 1e-8) -> bool:
    return robin_domain_residual(forms, B, f, h, lam) <= tol
