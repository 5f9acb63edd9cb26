"""Checkable reports for the chain correspondence and the supporting identities.

Every check returns a :class:`VerificationReport`; ``passed`` holds iff each
residual is at most its tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .assembly import FormMatrices, certificate_matrix, conormal, ellipticity_certificate
from .dtn import (DtnDerivatives, adjoint_dtn_eval, dtn_derivatives_contour,
                  dtn_derivatives_taylor, dtn_eval, dtn_nodal)
from .errors import OrderError
from .keldysh import JordanChain, KeldyshChain, keldysh_coefficients
from .realizations import (BoundaryOperator, DirichletPencil, dirichlet_resolvent_apply,
                           require_resolvent, robin_domain_residual, robin_pencil,
                           solve_homogeneous_bvp, solve_inhomogeneous_bvp)

__all__ = [
    "VerificationReport",
    "TOL_THEOREM",
    "theorem_main_forward",
    "theorem_main_backward",
    "birman_schwinger_check",
    "mainlem_identity_check",
    "formula_identity_check",
    "greens_identity_check",
    "dual_form_check",
    "dtn_duality_check",
    "dtn_nodal_form_check",
    "resolvent_identity_check",
    "derivative_cross_check",
    "ellipticity_check",
    "round_trip_check",
]

TOL_THEOREM = 1e-8
TOL_EXACT = 1e-12


@dataclass
class VerificationReport:
    name: str
    residuals: dict
    tolerances: dict
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerances[k] for k, r in self.residuals.items())

    def failures(self) -> list[str]:
        return [k for k, r in self.residuals.items() if not r <= self.tolerances[k]]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "tolerances": {k: float(self.tolerances[k]) for k in self.residuals},
            "context": self.context,
        }


def _report(name, residuals, tol, context=None, overrides=None):
    tolerances = {k: tol for k in residuals}
    tolerances.update(overrides or {})
    return VerificationReport(name, residuals, tolerances, context or {})


def _cjson(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _rel(num, den):
    return float(num / den) if den > 0 else float(num)


def theorem_main_forward(forms: FormMatrices, pencil: DirichletPencil, B: BoundaryOperator,
                         chain: JordanChain, derivs: DtnDerivatives,
                         tol_theorem: float = TOL_THEOREM,
                         tol_nonzero: float = 1e-8) -> VerificationReport:
    """Traces of a Jordan chain of the Robin pencil form a Keldysh chain.

    Residual at level ``j`` is ``||sum_{l<=j} M^(l)(lam0)/l! phi_{j-l}||``
    relative to ``||D(lam0)|| max_{i<=j} ||phi_i||``; the ``goal_j`` entries
    evaluate the same relation as ``sum D^(l)/l! phi_{j-l} - B phi_j``.
    """
    lam0 = chain.lambda0
    margin = require_resolvent(pencil, lam0)
    k = len(chain) - 1
    if derivs.order < k:
        raise OrderError(f"chain of length {k + 1} needs derivative order {k}")
    phis = [forms.trace_selector @ f for f in chain.vectors]
    coeffs = keldysh_coefficients(derivs, B, k + 1)
    d_norm = np.linalg.norm(derivs.matrices[0], 2)
    res = {"trace_f0_deficit": max(0.0, tol_nonzero - _rel(np.linalg.norm(phis[0]),
                                                          np.linalg.norm(chain.vectors[0])))}
    tols = {"trace_f0_deficit": 0.0}
    for j in range(k + 1):
        scale = d_norm * max(np.linalg.norm(p) for p in phis[:j + 1])
        r = sum(coeffs[l] @ phis[j - l] for l in range(j + 1))
        goal = sum(derivs.matrices[l] / factorial(l) @ phis[j - l] for l in range(j + 1))
        res[f"intromain_{j}"] = _rel(np.linalg.norm(r), scale)
        res[f"goal_{j}"] = _rel(np.linalg.norm(goal - B.b_dual @ phis[j]), scale)
    context = {"lambda0": _cjson(lam0), "chain_length": k + 1, "resolvent_margin": margin,
               "traces": [[_cjson(z) for z in p] for p in phis]}
    return _report("theorem_main_forward", res, tol_theorem, context, tols)


def theorem_main_backward(forms: FormMatrices, pencil: DirichletPencil, B: BoundaryOperator,
                          kchain: KeldyshChain, tol_theorem: float = TOL_THEOREM
                          ) -> tuple[JordanChain, VerificationReport]:
    """Rebuild a Jordan chain from a Keldysh chain by boundary value solves.

    ``f_0`` solves the homogeneous problem with trace ``phi_0``; ``f_m``
    solves ``(A - lam0) f_m = f_{m-1}`` with trace ``phi_m``.
    """
    lam0 = kchain.lambda0
    margin = require_resolvent(pencil, lam0)
    KB = forms.K - forms.trace_selector.T @ B.b_dual @ forms.trace_selector
    A = KB - lam0 * forms.mass
    a_norm = np.linalg.norm(A, 2)
    m_norm = np.linalg.norm(forms.mass, 2)
    fs = []
    res = {}
    links = []
    for m, phi in enumerate(kchain.vectors):
        if m == 0:
            f = solve_homogeneous_bvp(forms, pencil, lam0, phi)
            prev = np.zeros_like(f)
        else:
            prev = fs[-1]
            f = solve_inhomogeneous_bvp(forms, pencil, lam0, phi, prev)
        link = np.linalg.norm(A @ f - forms.mass @ prev)
        links.append(_rel(link, a_norm * np.linalg.norm(f) + m_norm * np.linalg.norm(prev)))
        res[f"pencil_link_{m}"] = links[-1]
        res[f"robin_condition_{m}"] = robin_domain_residual(forms, B, f, prev, lam0)
        res[f"trace_{m}"] = _rel(np.linalg.norm(forms.trace_selector @ f - phi),
                                 np.linalg.norm(phi))
        fs.append(f)
    chain = JordanChain(complex(lam0), tuple(fs), tuple(links), "boundary value reconstruction")
    context = {"lambda0": _cjson(lam0), "chain_length": len(fs), "resolvent_margin": margin}
    return chain, _report("theorem_main_backward", res, tol_theorem, context)


def _kernel_basis(A, rtol, scale=None):
    U, s, Vh = np.linalg.svd(A)
    top = s[0] if scale is None else scale
    r = int(np.sum(s > rtol * top))
    return Vh[r:].conj().T, s


def birman_schwinger_check(forms: FormMatrices, pencil: DirichletPencil, B: BoundaryOperator,
                           lambda0, rank_rtol: float = 1e-8,
                           tol: float = TOL_THEOREM) -> VerificationReport:
    """Trace maps ``ker(K_B - lam0 M)`` bijectively onto ``ker(D(lam0) - B)``.

    Kernel dimensions come from SVD ranks at relative threshold ``rank_rtol``.
    """
    margin = require_resolvent(pencil, lambda0)
    KB = robin_pencil(forms, B).K_B
    A = KB - lambda0 * forms.mass
    N, s_a = _kernel_basis(A, rank_rtol)
    D0 = dtn_eval(forms, pencil, lambda0)
    Mf = D0 - B.b_dual
    P, s_m = _kernel_basis(Mf, rank_rtol, np.linalg.norm(D0, 2) + np.linalg.norm(B.b_dual, 2))
    k_pencil, k_bound = N.shape[1], P.shape[1]
    res = {"dimension_mismatch": float(abs(k_pencil - k_bound))}
    tols = {"dimension_mismatch": 0.0}
    if k_pencil:
        TN = forms.trace_selector @ N
        sv = np.linalg.svd(TN, compute_uv=False)
        res["trace_injectivity"] = _rel(sv[0], sv[-1]) * rank_rtol
        tols["trace_injectivity"] = 1.0
        if k_bound:
            proj = TN - P @ (P.conj().T @ TN)
            res["bijection"] = _rel(np.linalg.norm(proj), np.linalg.norm(TN))
    context = {"lambda0": _cjson(lambda0), "dim_ker_pencil": k_pencil,
               "dim_ker_boundary": k_bound, "resolvent_margin": margin,
               "pencil_singular_values_tail": [float(x) for x in s_a[-3:]],
               "boundary_singular_values": [float(x) for x in s_m]}
    return _report("birman_schwinger", res, tol, context, tols)


def _adjoint_solutions(forms, pencil, lam0, tests):
    return solve_homogeneous_bvp(forms, pencil, np.conj(lam0), tests, which="dual")


def mainlem_identity_check(forms: FormMatrices, pencil: DirichletPencil, B: BoundaryOperator,
                           chain: JordanChain, derivs: DtnDerivatives, phis=None,
                           tol: float = TOL_THEOREM) -> VerificationReport:
    """Pairings of chain vectors with adjoint solutions against DtN derivatives.

    For each test trace ``phi`` (default: every boundary basis vector) and
    ``g`` the adjoint homogeneous solution with trace ``phi`` at
    ``conj(lam0)``:

    * ``useful_j``:  ``(f_{j-1}, g) = <(D(lam0) - B) phi_j, phi>``, ``j = 0..k``
    * ``iieq_j``:    ``(f_{j-1}, g) = -sum_{l=1}^{j} <D^(l) phi_{j-l}, phi> / l!``,
      ``j = 1..k+1``
    """
    lam0 = chain.lambda0
    margin = require_resolvent(pencil, lam0)
    k = len(chain) - 1
    if derivs.order < k + 1:
        raise OrderError(f"need derivatives up to order {k + 1}, got {derivs.order}")
    tests = np.eye(forms.n_boundary, dtype=complex) if phis is None else np.asarray(phis)
    G = _adjoint_solutions(forms, pencil, lam0, tests)
    fs = [np.zeros(forms.n, complex)] + list(chain.vectors)
    traces = [forms.trace_selector @ f for f in chain.vectors]
    M = forms.mass
    m_norm = np.linalg.norm(M, 2)
    d_norms = [np.linalg.norm(D, 2) / factorial(l) for l, D in enumerate(derivs.matrices)]
    Mf = derivs.matrices[0] - B.b_dual
    mf_norm = d_norms[0] + np.linalg.norm(B.b_dual, 2)
    res = {}
    for j in range(k + 2):
        pair = G.conj().T @ (M @ fs[j])
        t_norm = np.linalg.norm(tests, axis=0)
        g_norm = np.linalg.norm(G, axis=0)
        base = m_norm * np.linalg.norm(fs[j]) * g_norm
        if j <= k:
            rhs = tests.conj().T @ (Mf @ traces[j])
            scale = base + mf_norm * np.linalg.norm(traces[j]) * t_norm
            res[f"useful_{j}"] = float(np.max(np.abs(pair - rhs) / np.maximum(scale, 1e-300)))
        if j >= 1:
            s = sum(tests.conj().T @ (derivs.matrices[l] @ traces[j - l]) / factorial(l)
                    for l in range(1, j + 1))
            scale = base + sum(d_norms[l] * np.linalg.norm(traces[j - l])
                               for l in range(1, j + 1)) * t_norm
            res[f"iieq_{j}"] = float(np.max(np.abs(pair + s) / np.maximum(scale, 1e-300)))
    context = {"lambda0": _cjson(lam0), "chain_length": k + 1, "n_tests": tests.shape[1],
               "resolvent_margin": margin}
    return _report("mainlem_identities", res, tol, context)


def formula_identity_check(forms: FormMatrices, pencil: DirichletPencil, chain: JordanChain,
                           derivs: DtnDerivatives, lambdas, phis=None,
                           tol: float = TOL_THEOREM) -> VerificationReport:
    """The telescoped identity behind the derivative pairings, at ``lam != lam0``.

    ``-(f_{j-1}, g_lam) = sum_{l=1}^{j} <(lam-lam0)^{-l} (D(lam) - T_{l-1}(lam)) phi_{j-l}, phi>``
    where ``T_{l-1}`` is the Taylor polynomial of degree ``l-1`` at ``lam0``
    and ``g_lam`` the adjoint solution at ``conj(lam)``.
    """
    lam0 = chain.lambda0
    k = len(chain) - 1
    if derivs.order < k:
        raise OrderError(f"need derivatives up to order {k}")
    tests = np.eye(forms.n_boundary, dtype=complex) if phis is None else np.asarray(phis)
    fs = list(chain.vectors)
    traces = [forms.trace_selector @ f for f in fs]
    M = forms.mass
    res = {}
    for i, lam in enumerate(lambdas):
        G = _adjoint_solutions(forms, pencil, lam, tests)
        D = dtn_eval(forms, pencil, lam)
        dl = lam - lam0
        worst = 0.0
        for j in range(1, k + 2):
            lhs = -(G.conj().T @ (M @ fs[j - 1]))
            rhs = np.zeros(tests.shape[1], complex)
            for l in range(1, j + 1):
                rem = D - sum(dl ** s / factorial(s) * derivs.matrices[s] for s in range(l))
                rhs += tests.conj().T @ (rem @ traces[j - l]) / dl ** l
            scale = np.abs(lhs) + np.abs(rhs) + np.linalg.norm(M, 2) * np.linalg.norm(fs[j - 1]) \
                * np.linalg.norm(G, axis=0)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
        res[f"formula_at_{i}"] = worst
    context = {"lambda0": _cjson(lam0), "lambdas": [_cjson(z) for z in lambdas]}
    return _report("mainlem_formula", res, tol, context)


def greens_identity_check(forms: FormMatrices, f, h_f, lam_f, g, h_g, lam_g,
                          tol: float = TOL_EXACT) -> VerificationReport:
    """Green's second identity for a primal and a dual consistent pair.

    ``A f = lam_f f + h_f`` and ``A~ g = lam_g g + h_g`` in the discrete
    sense (interior rows). Checks
    ``(A f, g) - (f, A~ g) = <Tr f, gamma~ g> - <gamma f, Tr g>``.
    """
    f, g = np.asarray(f), np.asarray(g)
    h_f = np.zeros_like(f) if h_f is None else np.asarray(h_f)
    h_g = np.zeros_like(g) if h_g is None else np.asarray(h_g)
    gf = conormal(f, h_f, lam_f, forms).values
    gg = conormal(g, h_g, np.conj(lam_g), forms, which="dual").values
    M = forms.mass
    Af = lam_f * f + h_f
    Ag = lam_g * g + h_g
    lhs = np.vdot(g, M @ Af) - np.vdot(Ag, M @ f)
    Tf, Tg = forms.trace_selector @ f, forms.trace_selector @ g
    rhs = np.vdot(gg, Tf) - np.vdot(Tg, gf)
    scale = forms.k_norm * np.linalg.norm(f) * np.linalg.norm(g) + abs(lhs)
    return _report("greens_identity", {"green2": _rel(abs(lhs - rhs), scale)}, tol,
                   {"lhs": _cjson(lhs), "rhs": _cjson(rhs)})


def dual_form_check(forms: FormMatrices, dual_forms: FormMatrices | None = None,
                    tol: float = TOL_EXACT) -> VerificationReport:
    """``K_dual = K^H``; optionally against an independent assembly of the dual coefficients."""
    res = {"conjugate_transpose": _rel(np.abs(forms.K_dual - forms.K.conj().T).max(),
                                       np.abs(forms.K).max())}
    if dual_forms is not None:
        res["independent_dual_assembly"] = _rel(np.abs(dual_forms.K - forms.K.conj().T).max(),
                                                np.abs(forms.K).max())
    return _report("dual_form_identity", res, tol)


def dtn_duality_check(forms: FormMatrices, pencil: DirichletPencil, lambdas,
                      tol: float = TOL_EXACT) -> VerificationReport:
    """``D~(conj lam) = D(lam)^H`` at each ``lam``."""
    res = {}
    for i, lam in enumerate(lambdas):
        D = dtn_eval(forms, pencil, lam)
        Dt = adjoint_dtn_eval(forms, pencil, np.conj(lam))
        res[f"duality_at_{i}"] = _rel(np.abs(Dt - D.conj().T).max(), np.abs(D).max())
    return _report("dtn_duality", res, tol, {"lambdas": [_cjson(z) for z in lambdas]})


def dtn_nodal_form_check(forms: FormMatrices, pencil: DirichletPencil, lam, n_random: int = 4,
                         seed: int = 0, tol: float = TOL_EXACT) -> VerificationReport:
    """``a(f, g) - lam (f, g) = (Dnodal phi, Tr g)_boundary`` for homogeneous ``f``."""
    rng = np.random.default_rng(seed)
    nb, n = forms.n_boundary, forms.n
    phi = rng.standard_normal((nb, n_random)) + 1j * rng.standard_normal((nb, n_random))
    g = rng.standard_normal((n, n_random)) + 1j * rng.standard_normal((n, n_random))
    f = solve_homogeneous_bvp(forms, pencil, lam, phi)
    psi = dtn_nodal(forms, pencil, lam) @ phi
    lhs = np.einsum("ik,ik->k", g.conj(), (forms.K - lam * forms.mass) @ f)
    rhs = np.einsum("ik,ik->k", (forms.trace_selector @ g).conj(), forms.mass_boundary @ psi)
    scale = forms.k_norm * np.linalg.norm(f, axis=0) * np.linalg.norm(g, axis=0)
    return _report("dtn_nodal_form", {"form_representation": float(np.max(np.abs(lhs - rhs) / scale))},
                   tol, {"lambda": _cjson(lam)})


def resolvent_identity_check(forms: FormMatrices, pencil: DirichletPencil, lam, lam0,
                             n_random: int = 3, seed: int = 0,
                             tol: float = 1e-10) -> VerificationReport:
    """``g_lam = g_lam0 + (lam - lam0) (A_D - lam)^{-1} g_lam0`` for homogeneous solutions."""
    rng = np.random.default_rng(seed)
    nb = forms.n_boundary
    phi = rng.standard_normal((nb, n_random)) + 1j * rng.standard_normal((nb, n_random))
    g0 = solve_homogeneous_bvp(forms, pencil, lam0, phi)
    g = solve_homogeneous_bvp(forms, pencil, lam, phi)
    corrected = g0 + (lam - lam0) * dirichlet_resolvent_apply(forms, pencil, lam, g0)
    err = np.linalg.norm(g - corrected) / np.linalg.norm(g)
    return _report("resolvent_identity", {"gres": float(err)}, tol,
                   {"lambda": _cjson(lam), "lambda0": _cjson(lam0)})


def derivative_cross_check(forms: FormMatrices, pencil: DirichletPencil, lambda0, order: int = 4,
                           nodes: int = 64, fd_step: float = 1e-6, tol: float = 1e-8,
                           tol_fd: float = 1e-5, radius_factor: float = 0.5) -> VerificationReport:
    """Taylor-recurrence vs contour derivatives, and a forward difference for order 1."""
    t = dtn_derivatives_taylor(forms, pencil, lambda0, order)
    c = dtn_derivatives_contour(forms, pencil, lambda0, order, nodes=nodes,
                                radius_factor=radius_factor)
    res = {f"taylor_vs_contour_{l}": _rel(np.linalg.norm(a - b), np.linalg.norm(a))
           for l, (a, b) in enumerate(zip(t.matrices, c.matrices))}
    res["taylor_vs_dtn_eval"] = _rel(np.linalg.norm(t.matrices[0] - dtn_eval(forms, pencil, lambda0)),
                                     np.linalg.norm(t.matrices[0]))
    tols = {}
    if order >= 1:
        fd = (dtn_eval(forms, pencil, lambda0 + fd_step) - t.matrices[0]) / fd_step
        res["finite_difference_1"] = _rel(np.linalg.norm(fd - t.matrices[1]),
                                          np.linalg.norm(t.matrices[1]))
        tols["finite_difference_1"] = tol_fd
    return _report("derivative_cross_validation", res, tol, {"lambda0": _cjson(lambda0)}, tols)


def ellipticity_check(forms: FormMatrices, B: BoundaryOperator | None = None,
                      mu_target: float | None = None, tol: float = 1e-10) -> VerificationReport:
    """Certificate shift from :func:`ellipticity_certificate`, re-checked by ``eigvalsh``."""
    if mu_target is None:
        mu_target = 0.5 * forms.mu_principal
    nu = ellipticity_certificate(forms, B, mu_target)
    C = certificate_matrix(forms, B, mu_target, nu)
    lo = float(np.linalg.eigvalsh(C)[0])
    scale = np.linalg.norm(C, 2)
    return _report("ellipticity_certificate",
                   {"negative_part": max(0.0, -lo) / scale, "finite": 0.0 if np.isfinite(nu) else 1.0},
                   tol, {"nu": nu, "mu_target": mu_target, "min_eigenvalue": lo,
                         "eta": None if B is None else B.eta},
                   {"finite": 0.0})


def round_trip_check(kchain: KeldyshChain, forward: VerificationReport,
                     tol: float = 0.0) -> VerificationReport:
    """Traces reported by the forward check equal the Keldysh vectors they came from."""
    res = {}
    for m, (phi, tr) in enumerate(zip(kchain.vectors, forward.context["traces"])):
        tr = np.array([complex(*z) for z in tr])
        res[f"trace_{m}"] = _rel(np.linalg.norm(tr - phi), np.linalg.norm(phi))
    return _report("chain_round_trip", res, tol)
