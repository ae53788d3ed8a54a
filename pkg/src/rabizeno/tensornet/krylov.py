"""Lanczos approximation of ``exp(-i H t) v`` for Hermitian ``H``."""
from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = ["expm_lanczos"]


def _small_expm_e1(alpha, beta, t):
    """First column of ``exp(-i T t)`` for the tridiagonal ``T``."""
    if len(alpha) == 1:
        return np.array([np.exp(-1j * alpha[0] * t)])
    evals, evecs = eigh_tridiagonal(np.asarray(alpha), np.asarray(beta))
    return evecs @ (np.exp(-1j * evals * t) * evecs[0].conj())


def expm_lanczos(matvec, v: np.ndarray, t: float, *, tol: float = 1e-12, m_min: int = 10,
                 m_max: int = 80):
    """Return ``(exp(-i H t) v, info)``.

    The Krylov space grows until the a-posteriori error estimate
    ``beta_m |e_m^T exp(-i T t) e_1|`` drops below ``tol * |v|``, starting
    the check at ``m_min`` vectors.  ``info`` holds the final size,
    the error estimate and a ``converged`` flag.
    """
    shape = v.shape
    v = v.reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v.reshape(shape).copy(), {"m": 0, "err": 0.0, "converged": True}
    m_max = max(1, min(m_max, v.size))
    V = np.empty((m_max, v.size), dtype=complex)
    V[0] = v / nrm
    alpha, beta = [], []
    err = np.inf
    coeffs = None
    b = 0.0
    for j in range(m_max):
        w = matvec(V[j].reshape(shape)).reshape(-1)
        a = np.vdot(V[j], w).real
        w = w - a * V[j]
        if j > 0:
            w = w - beta[-1] * V[j - 1]
        # full reorthogonalisation; the spaces are small
        Vm = V[: j + 1]
        w = w - (Vm @ w.conj()).conj() @ Vm
        alpha.append(a)
        b = np.linalg.norm(w)
        m = j + 1
        if m >= min(m_min, m_max) or b < 1e-14 or m == m_max:
            coeffs = _small_expm_e1(alpha, beta, t)
            err = b * abs(coeffs[-1])
            if err < tol or b < 1e-14 or m == m_max:
                break
        beta.append(b)
        V[j + 1] = w / b
    out = nrm * (coeffs @ V[: len(coeffs)])
    return out.reshape(shape), {"m": len(coeffs), "err": float(err),
                                "converged": bool(err < tol or b < 1e-14)}
