"""Closed-form survival-probability decay rates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (ModelParams, SqueezeThermal, bose_occupation, squeeze_coeffs,
                    thermal_angles)

__all__ = [
    "ValidityWarning",
    "RateQuery",
    "sinc",
    "gamma_2nd",
    "gamma_th",
    "gamma_th_squeezed",
    "gamma_weak_coupling",
    "kernel_F",
    "chi_short_time",
]

_SINC_SWITCH = 1e-8
# below this |u| the imaginary part of the kernel uses its Taylor series
_KERNEL_SERIES_SWITCH = 0.1


class ValidityWarning(UserWarning):
    """Raised (as a warning) when ``g * tau >= 1``."""


@dataclass(frozen=True)
class RateQuery:
    """Parameters of a rate evaluation.  ``tau`` may be a scalar or an array."""

    params: ModelParams
    st: SqueezeThermal
    tau: float | np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if np.any(~(tau > 0)):
            raise ValueError("tau must be positive")
        if self.outside_validity:
            warnings.warn(f"g*tau >= 1 (g={self.params.g}); short-interval rate formulas "
                          "are outside their validity range", ValidityWarning, stacklevel=3)

    @property
    def outside_validity(self) -> bool:
        return bool(np.any(self.params.g * np.asarray(self.tau) >= 1.0))


def sinc(x):
    """``sin(x)/x`` with the removable singularity at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SWITCH
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def _tau_col(tau):
    tau = np.asarray(tau, dtype=float)
    return tau, tau[..., None]


def _shape_out(tau, value):
    return float(value) if np.ndim(tau) == 0 else value


def gamma_2nd(q: RateQuery):
    """Quadratic-expansion rate ``tau * sum g_m^2 coth(beta w_m / 2)``; squeezing is ignored."""
    th = thermal_angles(q.st, q.params)
    weight = np.sum(q.params.couplings ** 2 * (np.cosh(th) ** 2 + np.sinh(th) ** 2))
    return _shape_out(q.tau, np.asarray(q.tau) * weight)


def _thermal_sinc_rate(p: ModelParams, st: SqueezeThermal, tau, coupling_scale=1.0,
                       freq_scale=1.0):
    tau, tcol = _tau_col(tau)
    th = thermal_angles(st, p)
    w = freq_scale * p.omegas
    g2 = coupling_scale * p.couplings ** 2
    emit = np.cosh(th) ** 2 * g2 * sinc(tcol * (w - p.delta) / 2) ** 2
    absorb = np.sinh(th) ** 2 * g2 * sinc(tcol * (w + p.delta) / 2) ** 2
    return _shape_out(tau, tau * np.sum(emit + absorb, axis=-1))


def gamma_th(q: RateQuery):
    """Thermal decay rate from the single-excitation treatment (no squeezing)."""
    if q.st.r != 0:
        raise ValueError("gamma_th is defined for r = 0; use gamma_th_squeezed")
    return _thermal_sinc_rate(q.params, q.st, q.tau)


def gamma_th_squeezed(q: RateQuery):
    """Thermal rate with the squeezing renormalisation ``g^2 -> |K|^2 g^2``, ``w -> A w``.

    The qubit splitting is not renormalised, and the pair-creation terms
    proportional to ``B`` are not captured.
    """
    A, _, K = squeeze_coeffs(q.st)
    return _thermal_sinc_rate(q.params, q.st, q.tau, coupling_scale=abs(K) ** 2,
                              freq_scale=A)


def _box_integral(x, tau):
    """``int_0^tau exp(i x t) dt``."""
    return tau * np.exp(0.5j * x * tau) * sinc(0.5 * x * tau)


def gamma_weak_coupling(q: RateQuery):
    """Rate from the exact second-order flip probability in a squeezed thermal bath.

    Includes counter-rotating absorption and the anomalous correlation
    ``<a a>`` of the squeezed state, so it captures the phase shift of the
    critical squeezing angles.  Accurate to leading order in ``g``.
    """
    p, st = q.params, q.st
    tau, tcol = _tau_col(q.tau)
    w, g2 = p.omegas, p.couplings ** 2
    nbar = bose_occupation(st.beta, w)
    c2r, s2r = math.cosh(2 * st.r), math.sinh(2 * st.r)
    n_sq = nbar * c2r + math.sinh(st.r) ** 2
    m_sq = np.exp(1j * st.phi) * 0.5 * s2r * (2 * nbar + 1)
    j_em = _box_integral(p.delta - w, tcol)
    j_ab = _box_integral(p.delta + w, tcol)
    j_cr = _box_integral(-p.delta - w, tcol)
    flip = np.sum(g2 * ((n_sq + 1) * np.abs(j_em) ** 2 + n_sq * np.abs(j_ab) ** 2
                        + 2 * np.real(m_sq * j_em * j_cr)), axis=-1)
    return _shape_out(tau, -np.log1p(-flip) / tau)


def _u_minus_sin_over_u2(u):
    """``(u - sin u) / u^2``, stable near ``u = 0``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _KERNEL_SERIES_SWITCH
    safe = np.where(small, 1.0, u)
    direct = (safe - np.sin(safe)) / safe ** 2
    u2 = u * u
    # u/6 - u^3/120 + u^5/5040 - u^7/362880 + u^9/39916800
    series = u * (1 / 6 - u2 * (1 / 120 - u2 * (1 / 5040 - u2 * (1 / 362880 - u2 / 39916800))))
    return np.where(small, series, direct)


def kernel_F(delta, omega, t):
    """Short-time memory kernel ``F(delta, omega)`` evaluated at time ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    x = np.asarray(omega, dtype=float) - delta
    re = 0.5 * t * sinc(0.5 * x * t) ** 2
    im = -t * _u_minus_sin_over_u2(x * t)
    out = re + 1j * im
    return complex(out) if np.ndim(out) == 0 else out


def chi_short_time(params: ModelParams, st: SqueezeThermal, t) -> complex:
    """First-iteration excited-state amplitude (rotating frame)."""
    if st.r != 0:
        raise ValueError("chi_short_time is defined for r = 0")
    t = float(t)
    if t == 0:
        return 1 + 0j
    if params.g * t >= 1:
        warnings.warn("g*t >= 1: first-iteration amplitude outside validity",
                      ValidityWarning, stacklevel=2)
    th = thermal_angles(st, params)
    w, g2 = params.omegas, params.couplings ** 2
    s = np.sum(g2 * (np.cosh(th) ** 2 * kernel_F(params.delta, w, t)
                     + np.sinh(th) ** 2 * kernel_F(params.delta, -w, t)))
    return complex(np.exp(-t * s))
