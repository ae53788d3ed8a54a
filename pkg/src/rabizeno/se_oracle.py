"""Single-excitation integrator of the unsqueezed doubled dynamics.

The state is restricted to ``chi |up,0>``, ``p_m |down,1_a_m>`` and
``q_m |down,1_b_m>``.  Amplitudes are integrated in the rotating frame
(fast phases removed) by fixed-step RK4 and returned in the lab frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import ModelParams, SqueezeThermal, thermal_angles

__all__ = ["SEAmplitudes", "SETrajectory", "se_evolve", "survival_from_se", "default_se_dt"]

# fastest rotating-frame phase may advance at most this much per step
_PHASE_PER_STEP = 0.02


@dataclass(frozen=True)
class SEAmplitudes:
    chi: complex
    p: np.ndarray
    q: np.ndarray
    time: float

    @property
    def norm(self) -> float:
        return abs(self.chi) ** 2 + float(np.sum(np.abs(self.p) ** 2) + np.sum(np.abs(self.q) ** 2))


@dataclass
class SETrajectory:
    """Sampled amplitudes plus an integration report."""

    params: ModelParams
    st: SqueezeThermal
    samples: list[SEAmplitudes]
    dt: float
    report: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def __iter__(self):
        return iter(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def survival(self) -> np.ndarray:
        return np.array([survival_from_se(s) for s in self.samples])

    def energy(self) -> np.ndarray:
        return np.array([se_energy(self.params, self.st, s) for s in self.samples])


def _se_couplings(p: ModelParams, st: SqueezeThermal):
    th = thermal_angles(st, p)
    w = p.omegas
    kappa = np.concatenate([p.couplings * np.cosh(th), p.couplings * np.sinh(th)])
    # rotating-frame detunings of the p and q amplitudes
    nu = np.concatenate([w - p.delta, -(w + p.delta)])
    return kappa, nu


def default_se_dt(p: ModelParams, st: SqueezeThermal, t_final: float) -> float:
    _, nu = _se_couplings(p, st)
    dt = _PHASE_PER_STEP / max(np.max(np.abs(nu)), 1e-12)
    if p.g > 0:
        dt = min(dt, 1e-3 / p.g)
    return min(dt, t_final / 10)


def se_energy(p: ModelParams, st: SqueezeThermal, a: SEAmplitudes) -> float:
    """Expectation of the restricted Hamiltonian, coupling energy included."""
    th = thermal_angles(st, p)
    w = p.omegas
    free = (0.5 * p.delta * abs(a.chi) ** 2
            + np.sum((w - 0.5 * p.delta) * np.abs(a.p) ** 2)
            + np.sum((-w - 0.5 * p.delta) * np.abs(a.q) ** 2))
    coupling = 2 * np.real(np.conj(a.chi) * np.sum(p.couplings * (np.cosh(th) * a.p
                                                                  + np.sinh(th) * a.q)))
    return float(free + coupling)


def _integrate(p, st, kappa, nu, sample_times, dt):
    M = p.num_modes
    chi, y = 1 + 0j, np.zeros(2 * M, dtype=complex)
    out = []
    t_prev = 0.0
    for t in sample_times:
        span = t - t_prev
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-9))
            chi, y = kernels.se_rk4(chi, y, kappa, nu, t_prev, span / n, n)
        out.append(_to_lab(p, chi, y, t))
        t_prev = t
    return out


def _to_lab(p: ModelParams, chi_rot, y, t) -> SEAmplitudes:
    M, w = p.num_modes, p.omegas
    chi = chi_rot * np.exp(-0.5j * p.delta * t)
    pm = y[:M] * np.exp(-1j * (w - 0.5 * p.delta) * t)
    qm = y[M:] * np.exp(1j * (w + 0.5 * p.delta) * t)
    return SEAmplitudes(complex(chi), pm, qm, float(t))


def se_evolve(params: ModelParams, st: SqueezeThermal, t_final: float, dt: float | None = None,
              *, sample_times=None, check_halving: bool = True) -> SETrajectory:
    """Integrate the single-excitation equations from ``chi = 1`` up to ``t_final``.

    Parameters
    ----------
    dt : float, optional
        Step size.  The default is ``1e-3/g`` capped so that the fastest
        rotating-frame phase advances by at most 0.02 per step.
    sample_times : array_like, optional
        Output times in ``[0, t_final]``; defaults to 101 uniform samples.
        Steps are shortened so each sample time is hit exactly.
    check_halving : bool
        Re-run at ``dt/2`` and store the largest survival change in
        ``report["halving_delta"]``.
    """
    if st.r != 0:
        raise ValueError("single-excitation closure requires r = 0 (squeezing creates pairs)")
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if dt is None:
        dt = default_se_dt(params, st, t_final)
    elif not dt > 0:
        raise ValueError("dt must be positive")
    elif t_final / dt < 10:
        raise ValueError(f"dt={dt} gives fewer than 10 steps to t_final={t_final}")
    if sample_times is None:
        sample_times = np.linspace(0.0, t_final, 101)
    sample_times = np.unique(np.concatenate([[0.0], np.asarray(sample_times, dtype=float)]))
    if sample_times[0] < 0 or sample_times[-1] > t_final * (1 + 1e-12):
        raise ValueError("sample times must lie in [0, t_final]")

    kappa, nu = _se_couplings(params, st)
    samples = _integrate(params, st, kappa, nu, sample_times, dt)
    traj = SETrajectory(params, st, samples, dt, {"backend": kernels.BACKEND, "dt": dt})
    norms = np.array([s.norm for s in samples])
    energy = traj.energy()
    traj.report["norm_error"] = float(np.max(np.abs(norms - 1)))
    traj.report["energy_drift"] = float(np.max(np.abs(energy - energy[0])))
    if check_halving:
        fine = _integrate(params, st, kappa, nu, sample_times, dt / 2)
        traj.report["halving_delta"] = float(np.max(np.abs(
            traj.survival - np.array([survival_from_se(s) for s in fine]))))
    return traj


def survival_from_se(amps: SEAmplitudes) -> float:
    """Survival probability ``|chi|^2``."""
    return min(1.0, abs(amps.chi) ** 2)
