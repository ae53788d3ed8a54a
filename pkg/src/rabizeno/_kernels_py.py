"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def se_rk4(chi, y_in, kappa_in, nu_in, t0, dt, nsteps):
    """Advance the rotating-frame single-excitation amplitudes by ``nsteps`` RK4 steps.

    Returns ``(chi, y)``; ``y`` is a new array.
    """
    y = np.array(y_in, dtype=complex)
    kappa = np.asarray(kappa_in, dtype=float)
    nu = np.asarray(nu_in, dtype=float)
    chi = complex(chi)
    h = float(dt)

    def rhs(c, yy, ph):
        return -1j * np.dot(kappa * yy, ph.conj()), -1j * kappa * c * ph

    ph0 = np.exp(1j * nu * t0)
    for step in range(int(nsteps)):
        t = t0 + step * h
        phh = np.exp(1j * nu * (t + 0.5 * h))
        ph1 = np.exp(1j * nu * (t + h))
        c1, k1 = rhs(chi, y, ph0)
        c2, k2 = rhs(chi + 0.5 * h * c1, y + 0.5 * h * k1, phh)
        c3, k3 = rhs(chi + 0.5 * h * c2, y + 0.5 * h * k2, phh)
        c4, k4 = rhs(chi + h * c3, y + h * k3, ph1)
        chi = chi + h / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ph0 = ph1
    return chi, y
