"""Jordan chains of matrix pencils and Keldysh chains of analytic matrix functions.

Both problems are handled through Taylor coefficients ``T_l = F^(l)(lam0) / l!``
of a matrix function ``F``: a chain ``x_0, ..., x_k`` satisfies
``sum_{l<=j} T_l x_{j-l} = 0`` for every ``j``. For a pencil
``F(lam) = K_B - lam M`` this is ``(K_B - lam0 M) f_j = M f_{j-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .assembly import FormMatrices
from .dtn import DtnDerivatives, dtn_derivatives_taylor
from .errors import ConstructionError, DegenerateSeedError, DimensionError, OrderError
from .realizations import BoundaryOperator, DirichletPencil, boundary_operator, require_resolvent

__all__ = [
    "JordanChain",
    "KeldyshChain",
    "TOL_CHAIN",
    "MAX_LEN",
    "default_rank_tol",
    "greedy_chains",
    "chain_residuals",
    "toeplitz_kernel_dims",
    "chain_length_profile",
    "pencil_jordan_chains",
    "keldysh_chains",
    "keldysh_coefficients",
    "make_defective_boundary_operator",
]

TOL_CHAIN = 1e-8
MAX_LEN = 6


@dataclass(frozen=True, eq=False)
class JordanChain:
    lambda0: complex
    vectors: tuple
    residuals: tuple
    normalization: str = "unit-norm f0, largest entry real positive"

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True, eq=False)
class KeldyshChain:
    lambda0: complex
    vectors: tuple
    residuals: tuple
    normalization: str = "unit-norm phi0, largest entry real positive"

    def __len__(self):
        return len(self.vectors)


def default_rank_tol(A: np.ndarray, s: np.ndarray | None = None) -> float:
    if s is None:
        s = np.linalg.svd(A, compute_uv=False)
    top = s[0] if s.size else 0.0
    return max(A.shape) * np.finfo(float).eps * top


def _normalize(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k])


def chain_residuals(coeffs, vectors) -> list[float]:
    """Relative residual ``||sum_l T_l x_{j-l}|| / sum_l ||T_l|| ||x_{j-l}||`` per level."""
    norms = [np.linalg.norm(T, 2) for T in coeffs]
    out = []
    for j in range(len(vectors)):
        r = sum(coeffs[l] @ vectors[j - l] for l in range(min(j, len(coeffs) - 1) + 1))
        scale = sum(norms[l] * np.linalg.norm(vectors[j - l])
                    for l in range(min(j, len(coeffs) - 1) + 1))
        out.append(float(np.linalg.norm(r) / scale) if scale > 0 else 0.0)
    return out


def greedy_chains(coeffs, max_len: int = MAX_LEN, tol_rank: float | None = None,
                  tol_chain: float = TOL_CHAIN) -> list[list[np.ndarray]]:
    """Maximal chains started from each direction of the numerical kernel of ``T_0``.

    The kernel basis is rotated so that directions whose first link is
    solvable are separated from those that are not; each direction is then
    extended with minimal-norm least-squares links until a link fails
    ``tol_chain``. Coefficients beyond ``len(coeffs)`` are taken as zero.
    """
    T0 = np.asarray(coeffs[0])
    U, s, Vh = np.linalg.svd(T0)
    if tol_rank is None:
        tol_rank = default_rank_tol(T0, s)
    r = int(np.sum(s > tol_rank))
    n = T0.shape[1]
    if r == n:
        return []
    N = Vh[r:].conj().T
    U_perp = U[:, r:]
    if len(coeffs) > 1 and U_perp.shape[1] > 0 and N.shape[1] > 1:
        C = U_perp.conj().T @ np.asarray(coeffs[1]) @ N
        _, _, Qh = np.linalg.svd(C)
        N = N @ Qh.conj().T
    pinv = (Vh[:r].conj().T / s[:r]) @ U[:, :r].conj().T
    norms = [np.linalg.norm(T, 2) for T in coeffs]

    chains = []
    for c in range(N.shape[1]):
        x = [_normalize(N[:, c])]
        while len(x) < max_len:
            j = len(x)
            terms = range(1, min(j, len(coeffs) - 1) + 1)
            rhs = -sum((coeffs[l] @ x[j - l] for l in terms), np.zeros(T0.shape[0], complex))
            xj = pinv @ rhs
            res = np.linalg.norm(T0 @ xj - rhs)
            scale = norms[0] * np.linalg.norm(xj) + sum(norms[l] * np.linalg.norm(x[j - l])
                                                       for l in terms)
            if res > tol_chain * scale:
                break
            x.append(xj)
        chains.append(x)
    return chains


def toeplitz_kernel_dims(coeffs, max_len: int, rtol: float | None = None) -> list[int]:
    """``dim ker`` of the block lower-triangular Toeplitz matrices of size 1..max_len.

    Block ``(a, b)`` with ``a >= b`` is ``T_{a-b}``. With ``rtol`` the rank
    cut is ``rtol * sigma_max``; otherwise the default numerical-rank rule.
    """
    m, n = np.asarray(coeffs[0]).shape
    dims = []
    for k in range(1, max_len + 1):
        T = np.zeros((k * m, k * n), dtype=complex)
        for a in range(k):
            for b in range(a + 1):
                if a - b < len(coeffs):
                    T[a * m:(a + 1) * m, b * n:(b + 1) * n] = coeffs[a - b]
        s = np.linalg.svd(T, compute_uv=False)
        tol = default_rank_tol(T, s) if rtol is None else rtol * s[0]
        dims.append(int(k * n - np.sum(s > tol)))
    return dims


def chain_length_profile(lengths, max_len: int) -> list[int]:
    """Kernel dimensions implied by chain lengths: ``sum_i min(len_i, j)``."""
    return [sum(min(L, j) for L in lengths) for j in range(1, max_len + 1)]


def pencil_jordan_chains(K_B, M, lambda0, max_len: int = MAX_LEN,
                         tol_rank: float | None = None,
                         tol_chain: float = TOL_CHAIN) -> list[JordanChain]:
    """Jordan chains of the pencil ``(K_B, M)`` at ``lambda0``.

    Returns an empty list when ``K_B - lambda0 M`` has full numerical rank.
    """
    K_B = np.asarray(K_B)
    M = np.asarray(M)
    coeffs = [K_B - lambda0 * M, -M]
    out = []
    for vecs in greedy_chains(coeffs, max_len, tol_rank, tol_chain):
        out.append(JordanChain(complex(lambda0), tuple(vecs),
                               tuple(chain_residuals(coeffs, vecs))))
    return out


def keldysh_coefficients(derivs: DtnDerivatives, B: BoundaryOperator, n_terms: int | None = None):
    """Taylor coefficients of ``D(lam) - B`` at ``derivs.lambda0``."""
    n_terms = derivs.order + 1 if n_terms is None else n_terms
    coeffs = [derivs.matrices[0] - B.b_dual]
    coeffs += [derivs.matrices[l] / factorial(l) for l in range(1, n_terms)]
    return coeffs


def keldysh_chains(derivs: DtnDerivatives, B: BoundaryOperator, max_len: int = MAX_LEN,
                   tol_rank: float | None = None,
                   tol_chain: float = TOL_CHAIN) -> list[KeldyshChain]:
    """Keldysh chains of ``lam -> D(lam) - B`` at ``derivs.lambda0``.

    Raises
    ------
    OrderError
        ``derivs.order < max_len - 1``.
    """
    if derivs.order < max_len - 1:
        raise OrderError(
            f"chains of length {max_len} need derivatives up to order {max_len - 1}, "
            f"got {derivs.order}")
    if B.b_dual.shape != derivs.matrices[0].shape:
        raise DimensionError("boundary operator does not match the DtN matrices")
    coeffs = keldysh_coefficients(derivs, B, max_len)
    return [KeldyshChain(derivs.lambda0, tuple(v), tuple(chain_residuals(coeffs, v)))
            for v in greedy_chains(coeffs, max_len, tol_rank, tol_chain)]


def make_defective_boundary_operator(forms: FormMatrices, pencil: DirichletPencil, lambda0,
                                     phi0) -> BoundaryOperator:
    """Boundary operator for which ``D(lam) - B`` has a chain of length >= 2 at ``lambda0``.

    ``B = D(lam0) + w v^H`` (dual coordinates) with ``w = D'(lam0) phi0`` and
    a unit vector ``v`` orthogonal to ``phi0``. Then ``(D - B)(lam0) phi0 = 0``
    and ``D'(lam0) phi0 = w`` lies in the range ``span(w)``, so ``phi1 = v``
    continues the chain.
    """
    nb = forms.n_boundary
    if nb < 2:
        raise ConstructionError("need at least two boundary nodes")
    phi0 = np.asarray(phi0, dtype=complex)
    if phi0.shape != (nb,):
        raise DimensionError(f"seed has shape {phi0.shape}, expected {(nb,)}")
    if np.linalg.norm(phi0) == 0:
        raise DegenerateSeedError("seed vector is zero")
    require_resolvent(pencil, lambda0)
    derivs = dtn_derivatives_taylor(forms, pencil, lambda0, 1)
    D0, D1 = derivs.matrices
    w = D1 @ phi0
    if np.linalg.norm(w) <= 1e-14 * np.linalg.norm(D1, 2) * np.linalg.norm(phi0):
        raise DegenerateSeedError("D'(lambda0) phi0 vanishes")
    Q, _ = np.linalg.qr(phi0[:, None], mode="complete")
    v = Q[:, 1]
    return boundary_operator(forms, D0 + np.outer(w, v.conj()), coordinates="dual")
