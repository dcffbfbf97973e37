# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels; same interface as ``_kernels_py``."""

import numpy as np

cimport cython
from libc.math cimport atan2, fmod, log, M_PI

from ._series import COEFFICIENTS

cdef enum:
    MAXTERMS = 64

cdef double _coef[MAXTERMS]
cdef int _nterms = len(COEFFICIENTS)
for _i in range(_nterms):
    _coef[_i] = COEFFICIENTS[_i]


cdef inline double _clausen_reduced(double x) nogil:
    cdef double x2, p, s
    cdef int k
    if x == 0.0:
        return 0.0
    x2 = x * x
    p = x
    s = 0.0
    for k in range(_nterms):
        p *= x2
        s += _coef[k] * p
    return x - x * log(x) + s


cdef inline double _lob(double theta) nogil:
    cdef double t = fmod(theta, M_PI)
    if t < 0.0:
        t += M_PI
    if t > 0.5 * M_PI:
        return -0.5 * _clausen_reduced(2.0 * (M_PI - t))
    return 0.5 * _clausen_reduced(2.0 * t)


cdef inline double _arg(double re, double im) nogil:
    if im == 0.0 and re < 0.0:
        return M_PI
    return atan2(im, re)


cdef double _tet_vol(double complex z) nogil:
    cdef double complex w1, w2
    if z.imag == 0.0:
        return 0.0
    w1 = 1.0 / (1.0 - z)
    w2 = 1.0 - 1.0 / z
    return _lob(_arg(z.real, z.imag)) + _lob(_arg(w1.real, w1.imag)) + _lob(_arg(w2.real, w2.imag))


def lobachevsky(double theta):
    return _lob(theta)


def tetra_volume(z):
    return _tet_vol(complex(z))


def tetra_volumes(z):
    cdef const double complex[:] zz = np.ascontiguousarray(z, dtype=complex)
    cdef Py_ssize_t n = zz.shape[0], j
    out = np.empty(n, dtype=float)
    cdef double[:] o = out
    for j in range(n):
        o[j] = _tet_vol(zz[j])
    return out


def residual_jacobian(A1, A2, C, L1, L2, z):
    cdef const double[:, :] a1 = np.ascontiguousarray(A1, dtype=float)
    cdef const double[:, :] a2 = np.ascontiguousarray(A2, dtype=float)
    cdef const double complex[:] c = np.ascontiguousarray(C, dtype=complex)
    cdef const double complex[:] l1 = np.ascontiguousarray(L1, dtype=complex)
    cdef const double complex[:] l2 = np.ascontiguousarray(L2, dtype=complex)
    cdef const double complex[:] zz = np.ascontiguousarray(z, dtype=complex)
    cdef Py_ssize_t m = a1.shape[0], n = a1.shape[1], i, j
    F = np.empty(m, dtype=complex)
    J = np.empty((m, n), dtype=complex)
    cdef double complex[:] f = F
    cdef double complex[:, :] jj = J
    cdef double complex acc
    cdef double complex[MAXTERMS] inv_z, inv_w
    if n > MAXTERMS:
        raise ValueError("too many tetrahedra for the compiled kernel")
    for j in range(n):
        inv_z[j] = 1.0 / zz[j]
        inv_w[j] = 1.0 / (1.0 - zz[j])
    for i in range(m):
        acc = -c[i]
        for j in range(n):
            acc = acc + a1[i, j] * l1[j] + a2[i, j] * l2[j]
            jj[i, j] = a1[i, j] * inv_z[j] - a2[i, j] * inv_w[j]
        f[i] = acc
    return F, J
