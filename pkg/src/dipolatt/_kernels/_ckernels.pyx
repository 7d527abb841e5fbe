# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled quadrature kernels; see _pykernels for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin, M_PI

cnp.import_array()


def axisym_moments(r, theta, wtheta, double s_perp, double s_par, double d):
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(theta, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(wtheta, dtype=np.float64)
    cdef Py_ssize_t nr = rv.shape[0], nt = tv.shape[0], i, k
    cdef double norm = 1.0 / ((2 * M_PI) ** 1.5 * s_perp * s_perp * s_par)
    cdef double a = 0.5 / (s_perp * s_perp), b = 0.5 / (s_par * s_par)
    cdef double[::1] u = np.empty(nt)
    cdef double[::1] st = np.empty(nt)
    cdef double[::1] w0 = np.empty(nt)
    cdef double[::1] w2 = np.empty(nt)
    out0 = np.zeros(nr)
    out2 = np.zeros(nr)
    cdef double[::1] A0 = out0
    cdef double[::1] A2 = out2
    cdef double rr, x, z, rho, s0, s2
    for k in range(nt):
        u[k] = cos(tv[k])
        st[k] = sin(tv[k])
        w0[k] = 2 * M_PI * norm * wv[k] * st[k]
        w2[k] = w0[k] * (1.5 * u[k] * u[k] - 0.5)
    with nogil:
        for i in range(nr):
            rr = rv[i]
            s0 = 0.0
            s2 = 0.0
            for k in range(nt):
                x = rr * st[k]
                z = rr * u[k] - d
                rho = exp(-a * x * x - b * z * z)
                s0 = s0 + rho * w0[k]
                s2 = s2 + rho * w2[k]
            A0[i] = s0
            A2[i] = s2
    return out0, out2
