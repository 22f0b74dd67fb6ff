# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for the subset-selection solver.

Mirrors the API of :mod:`fsdiag.kernels_numpy` (the pure fallback). The
simplex / l1-ball thresholds use Condat's expected-O(n) scan instead of a
full sort, and ``admm_step`` fuses the whole iteration to avoid temporaries.
"""

import numpy as np

from libc.math cimport fabs, fmax, INFINITY


cdef double _simplex_tau(double* y, Py_ssize_t n, double radius,
                         double* v, double* vt) noexcept nogil:
    """Threshold tau of the projection of y onto the simplex of size `radius`.

    The projection itself is x_i = max(y_i - tau, 0). Buffers v and vt must
    each hold at least n doubles.
    """
    cdef Py_ssize_t vn = 1, vtn = 0, k, i
    cdef double rho = y[0] - radius
    cdef double val
    cdef bint changed
    v[0] = y[0]
    for k in range(1, n):
        if y[k] > rho:
            rho += (y[k] - rho) / (vn + 1)
            if rho > y[k] - radius:
                v[vn] = y[k]
                vn += 1
            else:
                for i in range(vn):
                    vt[vtn + i] = v[i]
                vtn += vn
                v[0] = y[k]
                vn = 1
                rho = y[k] - radius
    for k in range(vtn):
        if vt[k] > rho:
            v[vn] = vt[k]
            vn += 1
            rho += (vt[k] - rho) / vn
    changed = True
    while changed:
        changed = False
        k = 0
        while k < vn:
            val = v[k]
            if val <= rho:
                vn -= 1
                v[k] = v[vn]
                rho += (rho - val) / vn
                changed = True
            else:
                k += 1
    return rho


def project_columns_simplex(double[:, ::1] a):
    """Project each column of ``a`` (I, J) onto the probability simplex."""
    cdef Py_ssize_t i_dim = a.shape[0], j_dim = a.shape[1], i, j
    out_arr = np.empty((i_dim, j_dim), dtype=np.float64)
    scratch = np.empty(3 * i_dim, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] buf = scratch
    cdef double* y = &buf[0]
    cdef double* v = y + i_dim
    cdef double* vt = v + i_dim
    cdef double tau
    with nogil:
        for j in range(j_dim):
            for i in range(i_dim):
                y[i] = a[i, j]
            tau = _simplex_tau(y, i_dim, 1.0, v, vt)
            for i in range(i_dim):
                out[i, j] = fmax(y[i] - tau, 0.0)
    return out_arr


def prox_rows_maxnorm(double[:, ::1] vmat, double[::1] t):
    """Proximal operator of ``t_i * max_j |v_ij|`` applied to each row."""
    cdef Py_ssize_t i_dim = vmat.shape[0], j_dim = vmat.shape[1], i, j
    out_arr = np.empty((i_dim, j_dim), dtype=np.float64)
    scratch = np.empty(3 * j_dim, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] buf = scratch
    cdef double* y = &buf[0]
    cdef double* v = y + j_dim
    cdef double* vt = v + j_dim
    cdef double ti, mass, tau, val
    with nogil:
        for i in range(i_dim):
            ti = t[i]
            if ti <= 0.0:
                for j in range(j_dim):
                    out[i, j] = vmat[i, j]
                continue
            mass = 0.0
            for j in range(j_dim):
                y[j] = fabs(vmat[i, j])
                mass += y[j]
            if mass <= ti:
                for j in range(j_dim):
                    out[i, j] = 0.0
                continue
            tau = _simplex_tau(y, j_dim, ti, v, vt)
            for j in range(j_dim):
                val = vmat[i, j]
                if val > tau:
                    val = tau
                elif val < -tau:
                    val = -tau
                out[i, j] = val
    return out_arr


def admm_step(double[:, ::1] d_scaled, double[:, ::1] z, double[:, ::1] c,
              double[:, ::1] u, double[::1] t, double over_relax):
    """One fused splitting iteration in place; returns squared residual norms."""
    cdef Py_ssize_t i_dim = z.shape[0], j_dim = z.shape[1], i, j
    scratch = np.empty(3 * i_dim + 4 * j_dim, dtype=np.float64)
    cdef double[::1] buf = scratch
    cdef double* col = &buf[0]
    cdef double* v1 = col + i_dim
    cdef double* vt1 = v1 + i_dim
    cdef double* row = vt1 + i_dim
    cdef double* absrow = row + j_dim
    cdef double* v2 = absrow + j_dim
    cdef double* vt2 = v2 + j_dim
    cdef double tau, ti, mass, val, cn, dz, dc
    cdef double r2 = 0.0, s2 = 0.0
    with nogil:
        for j in range(j_dim):
            for i in range(i_dim):
                col[i] = c[i, j] - u[i, j] - d_scaled[i, j]
            tau = _simplex_tau(col, i_dim, 1.0, v1, vt1)
            for i in range(i_dim):
                z[i, j] = fmax(col[i] - tau, 0.0)
        for i in range(i_dim):
            ti = t[i]
            mass = 0.0
            for j in range(j_dim):
                val = over_relax * z[i, j] + (1.0 - over_relax) * c[i, j] + u[i, j]
                row[j] = val
                mass += fabs(val)
            if ti <= 0.0:
                tau = INFINITY
            elif mass <= ti:
                tau = 0.0
            else:
                for j in range(j_dim):
                    absrow[j] = fabs(row[j])
                tau = _simplex_tau(absrow, j_dim, ti, v2, vt2)
            for j in range(j_dim):
                val = row[j]
                cn = val
                if cn > tau:
                    cn = tau
                elif cn < -tau:
                    cn = -tau
                dz = z[i, j] - cn
                r2 += dz * dz
                dc = cn - c[i, j]
                s2 += dc * dc
                u[i, j] = val - cn
                c[i, j] = cn
    return r2, s2
