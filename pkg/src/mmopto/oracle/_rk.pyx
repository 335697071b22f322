# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator for the classical multimode
optomechanical equations of motion.

State layout: ``y[0:n]`` optical amplitudes, ``y[n]`` mechanical amplitude.

    da/dt = -L a - i g * a * z + b,     z = 2 Re c
    dc/dt = -(gamma/2 + i omega_m) c - i sum_n g_n |a_n|^2
"""

import numpy as np

from libc.math cimport sqrt, pow, fabs, isfinite
from libc.stdlib cimport malloc, free

ctypedef double complex cplx

# Dormand-Prince coefficients
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline void rhs(int n, const cplx* L, const cplx* b, const double* g,
                     double half_gamma, double omega_m, const cplx* y, cplx* dy) noexcept nogil:
    cdef int i, j
    cdef double z = 2.0 * y[n].real
    cdef double force = 0.0
    cdef cplx acc
    cdef cplx I = 1j
    for i in range(n):
        acc = b[i] - I * (g[i] * z) * y[i]
        for j in range(n):
            acc = acc - L[i * n + j] * y[j]
        dy[i] = acc
        force += g[i] * (y[i].real * y[i].real + y[i].imag * y[i].imag)
    dy[n] = -(half_gamma + I * omega_m) * y[n] - I * force


cdef inline double cabs(cplx x) noexcept nogil:
    return sqrt(x.real * x.real + x.imag * x.imag)


def dopri5(cplx[:, ::1] L, cplx[::1] b, double[::1] g, double half_gamma, double omega_m,
           cplx[::1] y0, double dt, Py_ssize_t n_samples, Py_ssize_t stride,
           double rtol, double atol, double blowup):
    """Integrate with step size capped at ``dt``; sample every ``stride`` steps.

    Returns ``(samples, n_done, n_steps, n_rejected)``.  ``n_done`` is the
    number of valid rows in ``samples``; it is smaller than ``n_samples``
    when the mechanical amplitude exceeded ``blowup`` or the state became
    non-finite.
    """
    cdef int n = b.shape[0]
    cdef int m = n + 1
    cdef int i
    out_arr = np.empty((n_samples, m), dtype=complex)
    cdef cplx[:, ::1] out = out_arr
    cdef cplx* buf = <cplx*> malloc(10 * m * sizeof(cplx))
    if buf == NULL:
        raise MemoryError()
    cdef cplx* y = buf
    cdef cplx* k1 = buf + m
    cdef cplx* k2 = buf + 2 * m
    cdef cplx* k3 = buf + 3 * m
    cdef cplx* k4 = buf + 4 * m
    cdef cplx* k5 = buf + 5 * m
    cdef cplx* k6 = buf + 6 * m
    cdef cplx* k7 = buf + 7 * m
    cdef cplx* yt = buf + 8 * m
    cdef cplx* yn = buf + 9 * m
    cdef cplx* swap
    cdef const cplx* Lp = &L[0, 0]
    cdef const cplx* bp = &b[0]
    cdef const double* gp = &g[0]
    cdef Py_ssize_t s, r
    cdef Py_ssize_t n_done = n_samples
    cdef long n_steps = 0, n_rej = 0
    cdef double h = dt, left, err, sc, e, fac
    cdef bint last, bad = False
    cdef cplx ei

    for i in range(m):
        y[i] = y0[i]
        out[0, i] = y0[i]

    try:
        with nogil:
            rhs(n, Lp, bp, gp, half_gamma, omega_m, y, k1)
            for s in range(1, n_samples):
                for r in range(stride):
                    left = dt
                    if h > dt:
                        h = dt
                    while left > 0.0:
                        last = h >= left
                        if last:
                            h = left
                        for i in range(m):
                            yt[i] = y[i] + h * A21 * k1[i]
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yt, k2)
                        for i in range(m):
                            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yt, k3)
                        for i in range(m):
                            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yt, k4)
                        for i in range(m):
                            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yt, k5)
                        for i in range(m):
                            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                                + A64 * k4[i] + A65 * k5[i])
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yt, k6)
                        for i in range(m):
                            yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                                + B5 * k5[i] + B6 * k6[i])
                        rhs(n, Lp, bp, gp, half_gamma, omega_m, yn, k7)
                        err = 0.0
                        for i in range(m):
                            ei = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i]
                                      + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                            sc = atol + rtol * max(cabs(y[i]), cabs(yn[i]))
                            e = cabs(ei) / sc
                            if e > err:
                                err = e
                        if not isfinite(err):
                            bad = True
                            break
                        if err <= 1.0:
                            n_steps += 1
                            swap = y; y = yn; yn = swap
                            swap = k1; k1 = k7; k7 = swap
                            if last:
                                left = 0.0
                            else:
                                left -= h
                            fac = 5.0 if err == 0.0 else 0.9 * pow(err, -0.2)
                            if fac > 5.0:
                                fac = 5.0
                            h = h * fac
                            if h > dt:
                                h = dt
                        else:
                            n_rej += 1
                            fac = 0.9 * pow(err, -0.2)
                            if fac < 0.2:
                                fac = 0.2
                            h = h * fac
                            if h < dt * 1e-10:
                                bad = True
                                break
                    if bad:
                        break
                    for i in range(m):
                        if not isfinite(y[i].real) or not isfinite(y[i].imag):
                            bad = True
                    if cabs(y[n]) > blowup:
                        bad = True
                    if bad:
                        break
                if bad:
                    n_done = s
                    break
                for i in range(m):
                    out[s, i] = y[i]
    finally:
        free(buf)
    return out_arr, n_done, n_steps, n_rej
