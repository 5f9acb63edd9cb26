"""Dirichlet-to-Neumann matrices as boundary Schur complements.

``D(lam)`` is returned in dual boundary coordinates:
``S(lam) = A_GG - A_GI A_II^{-1} A_IG`` with ``A = K - lam M``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg as sla

from .assembly import FormMatrices
from .errors import ContourViolationError, OrderError
from .realizations import DirichletPencil, require_resolvent

__all__ = [
    "DtnDerivatives",
    "dtn_eval",
    "adjoint_dtn_eval",
    "dtn_derivatives_taylor",
    "dtn_derivatives_contour",
    "dtn_nodal",
    "taylor_polynomial",
    "ORDER_CAP",
]

ORDER_CAP = 8


@dataclass(frozen=True, eq=False)
class DtnDerivatives:
    """``matrices[l]`` is the l-th derivative of ``D`` at ``lambda0``."""

    lambda0: complex
    order: int
    matrices: tuple
    method: str

    def taylor_coefficient(self, l: int) -> np.ndarray:
        return self.matrices[l] / factorial(l)


def _blocks(forms: FormMatrices, lam, which="primal"):
    A = (forms.K if which == "primal" else forms.K_dual) - lam * forms.mass
    I, G = forms.interior, forms.boundary
    return A[np.ix_(G, G)], A[np.ix_(G, I)], A[np.ix_(I, G)], A[np.ix_(I, I)]


def _schur(forms, lam, which):
    A_GG, A_GI, A_IG, A_II = _blocks(forms, lam, which)
    return A_GG - A_GI @ sla.lu_solve(sla.lu_factor(A_II), A_IG)


def dtn_eval(forms: FormMatrices, pencil: DirichletPencil, lam) -> np.ndarray:
    require_resolvent(pencil, lam)
    return _schur(forms, lam, "primal")


def adjoint_dtn_eval(forms: FormMatrices, pencil: DirichletPencil, lam) -> np.ndarray:
    """Dirichlet-to-Neumann matrix of the dual form at ``lam``.

    The dual Dirichlet spectrum is the conjugate of the primal one, so the
    resolvent check is made at ``conj(lam)``.
    """
    require_resolvent(pencil, np.conj(lam))
    return _schur(forms, lam, "dual")


def dtn_derivatives_taylor(forms: FormMatrices, pencil: DirichletPencil, lambda0, order: int,
                           order_cap: int = ORDER_CAP) -> DtnDerivatives:
    """Exact derivatives from the Neumann series of the interior resolvent.

    With ``R0 = (K_II - lam0 M_II)^{-1}`` the interior inverse at
    ``lam0 + d`` is ``sum_l d^l (R0 M_II)^l R0``; the boundary blocks are
    affine in ``d``. Cauchy products of the three series give the Taylor
    coefficients. One LU factorization is reused for every order.
    """
    order = int(order)
    if order < 0 or order > order_cap:
        raise OrderError(f"order must lie in [0, {order_cap}], got {order}")
    require_resolvent(pencil, lambda0)
    A_GG, A_GI, A_IG, A_II = _blocks(forms, lambda0, "primal")
    I, G = forms.interior, forms.boundary
    M = forms.mass
    M_II, M_GI, M_IG, M_GG = M[np.ix_(I, I)], M[np.ix_(G, I)], M[np.ix_(I, G)], M[np.ix_(G, G)]
    lu = sla.lu_factor(A_II)

    # V[b] = (R0 M_II)^b R0 Y for Y = A_IG and Y = -M_IG
    def chain(Y):
        out = [sla.lu_solve(lu, Y)]
        for _ in range(order):
            out.append(sla.lu_solve(lu, M_II @ out[-1]))
        return out

    V0 = chain(A_IG)
    V1 = chain(-M_IG) if order >= 1 else []
    X = [A_GI, -M_GI]

    coeffs = []
    for l in range(order + 1):
        c = np.zeros_like(A_GG)
        if l == 0:
            c += A_GG
        elif l == 1:
            c -= M_GG
        for a in range(min(l, 1) + 1):
            for cdeg in range(min(l - a, 1) + 1):
                b = l - a - cdeg
                V = V0[b] if cdeg == 0 else V1[b]
                c -= X[a] @ V
        coeffs.append(c)
    mats = tuple(factorial(l) * c for l, c in enumerate(coeffs))
    return DtnDerivatives(complex(lambda0), order, mats, "taylor")


def dtn_derivatives_contour(forms: FormMatrices, pencil: DirichletPencil, lambda0, order: int,
                            radius: float | None = None, nodes: int = 64,
                            radius_factor: float = 0.5) -> DtnDerivatives:
    """Derivatives from the Cauchy integral, trapezoid rule on a circle.

    ``radius`` defaults to ``radius_factor`` times the distance from
    ``lambda0`` to the Dirichlet spectrum.
    """
    order = int(order)
    if order < 0:
        raise OrderError("order must be non-negative")
    dist = pencil.distance_to_spectrum(lambda0)
    if radius is None:
        radius = radius_factor * dist
    if not radius > 0:
        raise ContourViolationError("contour radius must be positive")
    if radius >= dist:
        raise ContourViolationError(
            f"disk of radius {radius:.4g} around {complex(lambda0)} reaches the Dirichlet "
            f"spectrum at distance {dist:.4g}")
    theta = 2 * np.pi * np.arange(nodes) / nodes
    pts = lambda0 + radius * np.exp(1j * theta)
    for p in pts:
        m = pencil.margin(p)
        if m <= pencil.tol_resolvent:
            raise ContourViolationError(f"quadrature node {p} has resolvent margin {m:.3e}")
    samples = np.stack([_schur(forms, p, "primal") for p in pts])
    mats = []
    for l in range(order + 1):
        w = np.exp(-1j * l * theta) / (nodes * radius ** l)
        mats.append(factorial(l) * np.tensordot(w, samples, axes=(0, 0)))
    return DtnDerivatives(complex(lambda0), order, tuple(mats), "contour")


def taylor_polynomial(derivs: DtnDerivatives, lam) -> np.ndarray:
    d = lam - derivs.lambda0
    return sum(d ** l / factorial(l) * D for l, D in enumerate(derivs.matrices))


def dtn_nodal(forms: FormMatrices, pencil: DirichletPencil, lam) -> np.ndarray:
    """``Mass_boundary^{-1} D(lam)``: the operator acting on boundary L2 functions."""
    return forms.boundary_to_nodal(dtn_eval(forms, pencil, lam))
