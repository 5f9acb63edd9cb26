# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled P1 element loop. Same contract as ``_kernels_py.assemble_p1``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def assemble_p1(coords, elements, c_principal, b_conv, c_conv, c_zero):
    cdef const double[:, ::1] x = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] el = np.ascontiguousarray(elements, dtype=np.int64)
    cdef const double complex[:, :, ::1] C = np.ascontiguousarray(c_principal, dtype=np.complex128)
    cdef const double complex[:, ::1] bv = np.ascontiguousarray(b_conv, dtype=np.complex128)
    cdef const double complex[:, ::1] cv = np.ascontiguousarray(c_conv, dtype=np.complex128)
    cdef const double complex[::1] c0 = np.ascontiguousarray(c_zero, dtype=np.complex128)

    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t ne = el.shape[0]
    cdef Py_ssize_t nloc = d + 1

    K_arr = np.zeros((n, n), dtype=np.complex128)
    M_arr = np.zeros((n, n), dtype=np.float64)
    L_arr = np.zeros((n, n), dtype=np.float64)
    cdef double complex[:, ::1] K = K_arr
    cdef double[:, ::1] M = M_arr
    cdef double[:, ::1] L = L_arr

    cdef double G[3][2]
    cdef double vol, det, h, e1x, e1y, e2x, e2y, mref, gg
    cdef double complex acc, cg, bg
    cdef Py_ssize_t e, i, j, k, l, gi, gj
    cdef double inv_nloc = 1.0 / nloc
    cdef double mdiag = 2.0 / (nloc * (nloc + 1))
    cdef double moff = 1.0 / (nloc * (nloc + 1))

    for e in range(ne):
        if d == 1:
            h = x[el[e, 1], 0] - x[el[e, 0], 0]
            G[0][0] = -1.0 / h
            G[1][0] = 1.0 / h
            vol = fabs(h)
        else:
            e1x = x[el[e, 1], 0] - x[el[e, 0], 0]
            e1y = x[el[e, 1], 1] - x[el[e, 0], 1]
            e2x = x[el[e, 2], 0] - x[el[e, 0], 0]
            e2y = x[el[e, 2], 1] - x[el[e, 0], 1]
            det = e1x * e2y - e1y * e2x
            G[1][0] = e2y / det
            G[1][1] = -e2x / det
            G[2][0] = -e1y / det
            G[2][1] = e1x / det
            G[0][0] = -G[1][0] - G[2][0]
            G[0][1] = -G[1][1] - G[2][1]
            vol = 0.5 * fabs(det)

        for i in range(nloc):
            gi = el[e, i]
            bg = 0.0
            for k in range(d):
                bg = bg + bv[e, k] * G[i][k]
            for j in range(nloc):
                gj = el[e, j]
                acc = 0.0
                gg = 0.0
                cg = 0.0
                for k in range(d):
                    gg = gg + G[i][k] * G[j][k]
                    cg = cg + cv[e, k] * G[j][k]
                    for l in range(d):
                        acc = acc + G[i][k] * C[e, k, l] * G[j][l]
                mref = mdiag if i == j else moff
                acc = acc + (cg + bg) * inv_nloc + c0[e] * mref
                K[gi, gj] = K[gi, gj] + vol * acc
                M[gi, gj] = M[gi, gj] + vol * mref
                L[gi, gj] = L[gi, gj] + vol * gg
    return K_arr, M_arr, L_arr
