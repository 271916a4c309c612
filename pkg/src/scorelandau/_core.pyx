# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled O(N^2) pair-sum kernels: collision drift, log-determinant rates,
and the entropy decay estimate.

All functions mirror scorelandau._pairwise_py exactly (same normalization,
same floor policy: pairs with |z|^2 <= floor^2 contribute nothing).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow, sqrt

cnp.import_array()


cdef inline double _wgt(double r2, double c, double gamma) noexcept nogil:
    # c * |z|^gamma, with cheap paths for the exponents used in practice
    if gamma == 0.0:
        return c
    elif gamma == -3.0:
        return c / (r2 * sqrt(r2))
    elif gamma == -2.0:
        return c / r2
    elif gamma == -1.0:
        return c / sqrt(r2)
    elif gamma == 1.0:
        return c * sqrt(r2)
    elif gamma == 2.0:
        return c * r2
    return c * pow(r2, 0.5 * gamma)


def drift_sum(double[:, ::1] V, double[:, ::1] S, double c, double gamma,
              double floor, bint identity):
    """G_i = (1/N) sum_j A(v_i - v_j)(s_i - s_j)."""
    cdef Py_ssize_t N = V.shape[0]
    cdef Py_ssize_t d = V.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef double z0, z1, z2, x0, x1, x2, r2, zx, w, wr2, wzx
    cdef double floor2 = floor * floor
    cdef double inv_n = 1.0 / N

    out = np.zeros((N, d), dtype=np.float64)
    cdef double[:, ::1] G = out
    cdef double[::1] zv = np.empty(d)
    cdef double[::1] xv = np.empty(d)

    if identity:
        # A = I: G_i = s_i - mean(s), the analytic reduction of the pair sum
        mean = np.asarray(S).mean(axis=0)
        np.copyto(out, np.asarray(S) - mean)
        return out

    if d == 2:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                r2 = z0 * z0 + z1 * z1
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                zx = z0 * x0 + z1 * x1
                wr2 = w * r2
                wzx = w * zx
                z0 = wr2 * x0 - wzx * z0
                z1 = wr2 * x1 - wzx * z1
                G[i, 0] += z0
                G[i, 1] += z1
                G[j, 0] -= z0
                G[j, 1] -= z1
    elif d == 3:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                z2 = V[i, 2] - V[j, 2]
                r2 = z0 * z0 + z1 * z1 + z2 * z2
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                x2 = S[i, 2] - S[j, 2]
                zx = z0 * x0 + z1 * x1 + z2 * x2
                wr2 = w * r2
                wzx = w * zx
                z0 = wr2 * x0 - wzx * z0
                z1 = wr2 * x1 - wzx * z1
                z2 = wr2 * x2 - wzx * z2
                G[i, 0] += z0
                G[i, 1] += z1
                G[i, 2] += z2
                G[j, 0] -= z0
                G[j, 1] -= z1
                G[j, 2] -= z2
    else:
        for i in range(N):
            for j in range(i + 1, N):
                r2 = 0.0
                zx = 0.0
                for a in range(d):
                    zv[a] = V[i, a] - V[j, a]
                    xv[a] = S[i, a] - S[j, a]
                    r2 += zv[a] * zv[a]
                    zx += zv[a] * xv[a]
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                wr2 = w * r2
                wzx = w * zx
                for a in range(d):
                    z0 = wr2 * xv[a] - wzx * zv[a]
                    G[i, a] += z0
                    G[j, a] -= z0

    for i in range(N):
        for a in range(d):
            G[i, a] *= inv_n
    return out


def logdet_rate_sum(double[:, ::1] V, double[:, ::1] S, double[:, :, ::1] J,
                    double c, double gamma, double floor, bint identity):
    """Per-particle log-determinant rates

        rate_i = -(1/N) sum_j [ A(z_ij) : grad s(v_i)^T
                                - c (d-1) |z_ij|^gamma z_ij . (s_i - s_j) ],

    with z_ij = v_i - v_j.  J[i] holds grad s(v_i); since A is symmetric the
    contraction A : J equals A : J^T, i.e. c |z|^gamma (|z|^2 tr J - z^T J z).
    """
    cdef Py_ssize_t N = V.shape[0]
    cdef Py_ssize_t d = V.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef double z0, z1, z2, x0, x1, x2, r2, zx, w, zJz_i, zJz_j, t2
    cdef double floor2 = floor * floor
    cdef double dm1 = d - 1.0

    out = np.zeros(N, dtype=np.float64)
    cdef double[::1] acc = out
    cdef double[::1] zv = np.empty(d)

    tr_arr = np.ascontiguousarray(np.trace(np.asarray(J), axis1=1, axis2=2))
    cdef double[::1] tr = tr_arr

    if identity:
        # A = I even at z = 0, so every j (including j = i) contributes tr J_i
        np.copyto(out, -tr_arr)
        return out

    if d == 2:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                r2 = z0 * z0 + z1 * z1
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                zx = z0 * x0 + z1 * x1
                zJz_i = (z0 * (J[i, 0, 0] * z0 + J[i, 0, 1] * z1)
                         + z1 * (J[i, 1, 0] * z0 + J[i, 1, 1] * z1))
                zJz_j = (z0 * (J[j, 0, 0] * z0 + J[j, 0, 1] * z1)
                         + z1 * (J[j, 1, 0] * z0 + J[j, 1, 1] * z1))
                t2 = w * dm1 * zx
                acc[i] += w * (r2 * tr[i] - zJz_i) - t2
                acc[j] += w * (r2 * tr[j] - zJz_j) - t2
    elif d == 3:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                z2 = V[i, 2] - V[j, 2]
                r2 = z0 * z0 + z1 * z1 + z2 * z2
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                x2 = S[i, 2] - S[j, 2]
                zx = z0 * x0 + z1 * x1 + z2 * x2
                zJz_i = (z0 * (J[i, 0, 0] * z0 + J[i, 0, 1] * z1 + J[i, 0, 2] * z2)
                         + z1 * (J[i, 1, 0] * z0 + J[i, 1, 1] * z1 + J[i, 1, 2] * z2)
                         + z2 * (J[i, 2, 0] * z0 + J[i, 2, 1] * z1 + J[i, 2, 2] * z2))
                zJz_j = (z0 * (J[j, 0, 0] * z0 + J[j, 0, 1] * z1 + J[j, 0, 2] * z2)
                         + z1 * (J[j, 1, 0] * z0 + J[j, 1, 1] * z1 + J[j, 1, 2] * z2)
                         + z2 * (J[j, 2, 0] * z0 + J[j, 2, 1] * z1 + J[j, 2, 2] * z2))
                t2 = w * dm1 * zx
                acc[i] += w * (r2 * tr[i] - zJz_i) - t2
                acc[j] += w * (r2 * tr[j] - zJz_j) - t2
    else:
        for i in range(N):
            for j in range(i + 1, N):
                r2 = 0.0
                zx = 0.0
                for a in range(d):
                    zv[a] = V[i, a] - V[j, a]
                    r2 += zv[a] * zv[a]
                    zx += zv[a] * (S[i, a] - S[j, a])
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                zJz_i = 0.0
                zJz_j = 0.0
                for a in range(d):
                    for b in range(d):
                        zJz_i += zv[a] * J[i, a, b] * zv[b]
                        zJz_j += zv[a] * J[j, a, b] * zv[b]
                t2 = w * dm1 * zx
                acc[i] += w * (r2 * tr[i] - zJz_i) - t2
                acc[j] += w * (r2 * tr[j] - zJz_j) - t2

    for i in range(N):
        acc[i] *= -1.0 / N
    return out


def entropy_rate_sum(double[:, ::1] V, double[:, ::1] S, double c, double gamma,
                     double floor, bint identity):
    """-(1/N^2) sum_{i,j} s_i . A(v_i - v_j)(s_i - s_j).

    Terms are accumulated pairwise, (i,j) fused with (j,i), which makes each
    contribution the quadratic form (s_i - s_j) . A (s_i - s_j) >= 0.
    """
    cdef Py_ssize_t N = V.shape[0]
    cdef Py_ssize_t d = V.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double z0, z1, z2, x0, x1, x2, r2, x2sum, zx, w, total = 0.0
    cdef double floor2 = floor * floor
    cdef double[::1] zv = np.empty(d)
    cdef double[::1] xv = np.empty(d)

    if identity:
        if d == 2:
            for i in range(N):
                for j in range(i + 1, N):
                    x0 = S[i, 0] - S[j, 0]
                    x1 = S[i, 1] - S[j, 1]
                    total += x0 * x0 + x1 * x1
        elif d == 3:
            for i in range(N):
                for j in range(i + 1, N):
                    x0 = S[i, 0] - S[j, 0]
                    x1 = S[i, 1] - S[j, 1]
                    x2 = S[i, 2] - S[j, 2]
                    total += x0 * x0 + x1 * x1 + x2 * x2
        else:
            for i in range(N):
                for j in range(i + 1, N):
                    for a in range(d):
                        x0 = S[i, a] - S[j, a]
                        total += x0 * x0
        return -total / (<double> N * N)

    if d == 2:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                r2 = z0 * z0 + z1 * z1
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                zx = z0 * x0 + z1 * x1
                x2sum = x0 * x0 + x1 * x1
                total += w * (r2 * x2sum - zx * zx)
    elif d == 3:
        for i in range(N):
            for j in range(i + 1, N):
                z0 = V[i, 0] - V[j, 0]
                z1 = V[i, 1] - V[j, 1]
                z2 = V[i, 2] - V[j, 2]
                r2 = z0 * z0 + z1 * z1 + z2 * z2
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                x0 = S[i, 0] - S[j, 0]
                x1 = S[i, 1] - S[j, 1]
                x2 = S[i, 2] - S[j, 2]
                zx = z0 * x0 + z1 * x1 + z2 * x2
                x2sum = x0 * x0 + x1 * x1 + x2 * x2
                total += w * (r2 * x2sum - zx * zx)
    else:
        for i in range(N):
            for j in range(i + 1, N):
                r2 = 0.0
                zx = 0.0
                x2sum = 0.0
                for a in range(d):
                    zv[a] = V[i, a] - V[j, a]
                    xv[a] = S[i, a] - S[j, a]
                    r2 += zv[a] * zv[a]
                    zx += zv[a] * xv[a]
                    x2sum += xv[a] * xv[a]
                if r2 <= floor2:
                    continue
                w = _wgt(r2, c, gamma)
                total += w * (r2 * x2sum - zx * zx)

    return -total / (<double> N * N)
