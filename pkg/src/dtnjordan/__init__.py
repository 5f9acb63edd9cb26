"""Dirichlet-to-Neumann matrices of non-self-adjoint elliptic operators and the
correspondence between Jordan chains of Robin realizations and Keldysh chains
of ``lam -> D(lam) - B``, at desk scale with P1 finite elements.
"""
from .assembly import (CoefficientSet, ConormalVector, FormMatrices, assemble_forms,
                       check_coefficients, conormal, ellipticity_certificate, trace)
from .dtn import (DtnDerivatives, adjoint_dtn_eval, dtn_derivatives_contour,
                  dtn_derivatives_taylor, dtn_eval, dtn_nodal)
from .errors import *  # noqa: F401,F403
from .keldysh import (JordanChain, KeldyshChain, keldysh_chains,
                      make_defective_boundary_operator, pencil_jordan_chains)
from .kernels import BACKEND
from .mesh import DiscreteDomain, build_interval_mesh, build_rectangle_mesh, classify_dofs
from .realizations import (BoundaryOperator, DirichletPencil, RobinPencil, boundary_operator,
                           dirichlet_pencil, in_resolvent_set, in_robin_domain, robin_pencil,
                           solve_homogeneous_bvp, solve_inhomogeneous_bvp)
from .verify import (VerificationReport, birman_schwinger_check, greens_identity_check,
                     mainlem_identity_check, theorem_main_backward, theorem_main_forward)

__version__ = "0.1.0"
