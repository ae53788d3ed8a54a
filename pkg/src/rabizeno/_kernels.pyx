# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.  Must stay call-compatible with ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


cdef inline void _rhs(double complex chi, double complex[::1] y, double[::1] kappa,
                      double complex[::1] ph, double complex* dchi,
                      double complex[::1] dy) noexcept nogil:
    cdef Py_ssize_t k, n = y.shape[0]
    cdef double complex acc = 0
    cdef double complex mi = -1j
    for k in range(n):
        acc += kappa[k] * y[k] * ph[k].conjugate()
        dy[k] = mi * kappa[k] * chi * ph[k]
    dchi[0] = mi * acc


cdef inline void _phases(double[::1] nu, double t, double complex[::1] ph) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(nu.shape[0]):
        ph[k] = cos(nu[k] * t) + 1j * sin(nu[k] * t)


def se_rk4(double complex chi, cnp.ndarray y_in, cnp.ndarray kappa_in,
           cnp.ndarray nu_in, double t0, double dt, long nsteps):
    """Advance the rotating-frame single-excitation amplitudes by ``nsteps`` RK4 steps.

    Returns ``(chi, y)``; ``y`` is a new array.
    """
    cdef double complex[::1] y = np.ascontiguousarray(y_in, dtype=np.complex128).copy()
    cdef double[::1] kappa = np.ascontiguousarray(kappa_in, dtype=np.float64)
    cdef double[::1] nu = np.ascontiguousarray(nu_in, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], k
    cdef long step
    cdef double complex[::1] ph0 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] phh = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] ph1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] ytmp = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef double complex c1, c2, c3, c4
    cdef double t = t0, h = dt
    with nogil:
        _phases(nu, t, ph0)
        for step in range(nsteps):
            t = t0 + step * h
            _phases(nu, t + 0.5 * h, phh)
            _phases(nu, t + h, ph1)
            _rhs(chi, y, kappa, ph0, &c1, k1)
            for k in range(n):
                ytmp[k] = y[k] + 0.5 * h * k1[k]
            _rhs(chi + 0.5 * h * c1, ytmp, kappa, phh, &c2, k2)
            for k in range(n):
                ytmp[k] = y[k] + 0.5 * h * k2[k]
            _rhs(chi + 0.5 * h * c2, ytmp, kappa, phh, &c3, k3)
            for k in range(n):
                ytmp[k] = y[k] + h * k3[k]
            _rhs(chi + h * c3, ytmp, kappa, ph1, &c4, k4)
            chi = chi + h / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
            for k in range(n):
                y[k] = y[k] + h / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k])
                ph0[k] = ph1[k]
    return chi, np.asarray(y)
