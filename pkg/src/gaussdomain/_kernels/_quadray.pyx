# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of py_backend: per-line quadratic coverage kernels.

Scalar loop per direction; the chi-square tail comes from scipy's cython
bindings.  Values agree with the python backend to accumulation roundoff
(the line coefficients are summed in a different order).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, NAN
from scipy.special.cython_special cimport chdtrc

cnp.import_array()

cdef double TANGENT_TOL = 1e-9


cdef inline double _phi_bar(double z, double df) noexcept nogil:
    cdef double half_sf = 0.5 * chdtrc(df, z * z)
    if z >= 0.0:
        return half_sf
    return 1.0 - half_sf


cdef inline double _interval_mass(double lo, double hi, double df) noexcept nogil:
    # evaluate from whichever tail keeps small quantities small; forming
    # 1 - tail and subtracting zeroes out intervals deep in either tail
    if lo >= 0.0:
        return _phi_bar(lo, df) - _phi_bar(hi, df)
    if hi <= 0.0:
        return _phi_bar(-hi, df) - _phi_bar(-lo, df)
    return 1.0 - _phi_bar(-lo, df) - _phi_bar(hi, df)


cdef inline double _sign(double v) noexcept nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def quad_alpha_batch(q2, q1, q0, dirs, df):
    """Coverage weight alpha in [0, 2] for each direction's full line."""
    cdef const double[:, ::1] q2v = np.ascontiguousarray(q2, dtype=np.float64)
    cdef const double[::1] q1v = np.ascontiguousarray(q1, dtype=np.float64)
    cdef const double[:, ::1] dv = np.ascontiguousarray(np.atleast_2d(dirs), dtype=np.float64)
    cdef double c = q0
    cdef double dfv = df
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t k = dv.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, r, s
    cdef double a, b, acc, disc, sq, qd, r1, r2, lo, hi, psi

    with nogil:
        for i in range(n):
            a = 0.0
            b = 0.0
            for r in range(k):
                acc = 0.0
                for s in range(k):
                    acc += q2v[r, s] * dv[i, s]
                a += dv[i, r] * acc
                b += q1v[r] * dv[i, r]
            if a == 0.0:
                if b == 0.0:
                    out[i] = 1.0 + _sign(c)
                else:
                    # covered half-line == upper tail past -c/|b| either way
                    out[i] = 2.0 * _phi_bar(-c / (b if b > 0.0 else -b), dfv)
                continue
            psi = _sign(a)
            disc = b * b - 4.0 * a * c
            if disc <= 0.0:
                out[i] = 1.0 + psi
                continue
            sq = sqrt(disc)
            if b >= 0.0:
                qd = -0.5 * (b + sq)
            else:
                qd = -0.5 * (b - sq)
            r1 = qd / a
            r2 = c / qd
            if r1 <= r2:
                lo = r1
                hi = r2
            else:
                lo = r2
                hi = r1
            if hi - lo < TANGENT_TOL:
                out[i] = 1.0 + psi
                continue
            if a > 0.0:
                out[i] = 2.0 * (_phi_bar(hi, dfv) + _phi_bar(-lo, dfv))
            else:
                out[i] = 2.0 * _interval_mass(lo, hi, dfv)
    return out_arr


def quad_trace_batch(q2, q1, q0, dirs):
    """Per-line sign at -inf and sorted crossing pair (nan-padded)."""
    cdef const double[:, ::1] q2v = np.ascontiguousarray(q2, dtype=np.float64)
    cdef const double[::1] q1v = np.ascontiguousarray(q1, dtype=np.float64)
    cdef const double[:, ::1] dv = np.ascontiguousarray(np.atleast_2d(dirs), dtype=np.float64)
    cdef double c = q0
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t k = dv.shape[1]
    psi_arr = np.empty(n, dtype=np.float64)
    roots_arr = np.full((n, 2), np.nan, dtype=np.float64)
    cdef double[::1] psi_v = psi_arr
    cdef double[:, ::1] roots_v = roots_arr
    cdef Py_ssize_t i, r, s
    cdef double a, b, acc, disc, sq, qd, r1, r2, lo, hi

    with nogil:
        for i in range(n):
            a = 0.0
            b = 0.0
            for r in range(k):
                acc = 0.0
                for s in range(k):
                    acc += q2v[r, s] * dv[i, s]
                a += dv[i, r] * acc
                b += q1v[r] * dv[i, r]
            if a == 0.0:
                if b == 0.0:
                    psi_v[i] = _sign(c)
                else:
                    psi_v[i] = -_sign(b)
                    roots_v[i, 0] = -c / b
                continue
            psi_v[i] = _sign(a)
            disc = b * b - 4.0 * a * c
            if disc <= 0.0:
                continue
            sq = sqrt(disc)
            if b >= 0.0:
                qd = -0.5 * (b + sq)
            else:
                qd = -0.5 * (b - sq)
            r1 = qd / a
            r2 = c / qd
            if r1 <= r2:
                lo = r1
                hi = r2
            else:
                lo = r2
                hi = r1
            if hi - lo < TANGENT_TOL:
                continue
            roots_v[i, 0] = lo
            roots_v[i, 1] = hi
    return psi_arr, roots_arr
