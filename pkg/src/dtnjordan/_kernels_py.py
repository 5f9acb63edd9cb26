"""NumPy implementation of the P1 element loop (fallback for the Cython kernel)."""
import numpy as np


def element_geometry(coords, elements):
    """Barycentric gradients ``G[e, i, k]`` and measures ``vol[e]``."""
    coords = np.asarray(coords, dtype=np.float64)
    elements = np.asarray(elements, dtype=np.int64)
    d = coords.shape[1]
    if d == 1:
        h = coords[elements[:, 1], 0] - coords[elements[:, 0], 0]
        G = np.empty((elements.shape[0], 2, 1))
        G[:, 0, 0] = -1.0 / h
        G[:, 1, 0] = 1.0 / h
        return G, np.abs(h)
    p0 = coords[elements[:, 0]]
    e1 = coords[elements[:, 1]] - p0
    e2 = coords[elements[:, 2]] - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    G = np.empty((elements.shape[0], 3, 2))
    G[:, 1, 0] = e2[:, 1] / det
    G[:, 1, 1] = -e2[:, 0] / det
    G[:, 2, 0] = -e1[:, 1] / det
    G[:, 2, 1] = e1[:, 0] / det
    G[:, 0, :] = -G[:, 1, :] - G[:, 2, :]
    return G, 0.5 * np.abs(det)


def assemble_p1(coords, elements, c_principal, b_conv, c_conv, c_zero):
    """Dense global matrices ``(K, mass, laplace)`` for piecewise-constant data.

    ``K[i, j] = a(phi_j, phi_i)``.
    """
    coords = np.asarray(coords, dtype=np.float64)
    elements = np.asarray(elements, dtype=np.int64)
    n = coords.shape[0]
    d = coords.shape[1]
    nloc = d + 1
    G, vol = element_geometry(coords, elements)

    principal = np.einsum("eik,ekl,ejl->eij", G, c_principal, G)
    # c_k d_k phi_j * phi_i: constant in i; b_k phi_j * d_k phi_i: constant in j
    conv_c = np.einsum("ek,ejk->ej", c_conv, G)[:, None, :] / nloc
    conv_b = np.einsum("ek,eik->ei", b_conv, G)[:, :, None] / nloc
    ref_mass = (np.ones((nloc, nloc)) + np.eye(nloc)) / (nloc * (nloc + 1))
    zero = c_zero[:, None, None] * ref_mass[None]
    k_loc = vol[:, None, None] * (principal + conv_c + conv_b + zero)
    m_loc = vol[:, None, None] * ref_mass[None]
    l_loc = vol[:, None, None] * np.einsum("eik,ejk->eij", G, G)

    rows = np.repeat(elements, nloc, axis=1).ravel()
    cols = np.tile(elements, (1, nloc)).ravel()
    K = np.zeros((n, n), dtype=np.complex128)
    M = np.zeros((n, n))
    L = np.zeros((n, n))
    np.add.at(K, (rows, cols), k_loc.ravel())
    np.add.at(M, (rows, cols), m_loc.ravel())
    np.add.at(L, (rows, cols), l_loc.ravel())
    return K, M, L
