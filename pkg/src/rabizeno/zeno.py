"""Repeated-measurement analysis: decay rates, Zeno/anti-Zeno classification,
energy flow and critical squeezing angles."""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .model import ModelParams, SqueezeThermal, thermal_angles

logger = logging.getLogger(__name__)

__all__ = [
    "ENGINES",
    "DecayCurve",
    "CrossoverReport",
    "EnergyFlow",
    "AngleScan",
    "effective_decay_rate",
    "survival_n_measurements",
    "decay_curve",
    "classify_and_crossover",
    "energy_flow_analysis",
    "critical_angle_scan",
    "survival_at",
]

ENGINES = ("analytic", "analytic_squeezed", "perturbative", "se", "tdvp")
_P_ROUNDOFF = 1e-12


def effective_decay_rate(p_sur, tau):
    """``-ln(p_sur) / tau``; accepts scalars or matching arrays."""
    p = np.asarray(p_sur, dtype=float)
    t = np.asarray(tau, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("tau must be positive")
    if np.any(~(p > 0)):
        raise ValueError("survival probability must be positive")
    if np.any(p > 1 + _P_ROUNDOFF):
        raise ValueError("survival probability exceeds 1 beyond round-off")
    out = -np.log(np.minimum(p, 1.0)) / t
    return float(out) if out.ndim == 0 else out


def survival_n_measurements(p_sur_single: float, n: int) -> float:
    """Survival after ``n`` equally spaced projective measurements."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(p_sur_single) ** int(n)


# ---------------------------------------------------------------------------
# decay curves

@dataclass
class DecayCurve:
    tau_grid: np.ndarray
    p_sur: np.ndarray
    gamma: np.ndarray
    engine: str
    params: ModelParams
    st: SqueezeThermal
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.p_sur = np.asarray(self.p_sur, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if not (self.tau_grid.shape == self.p_sur.shape == self.gamma.shape):
            raise ValueError("tau_grid, p_sur and gamma must have the same length")
        if np.any(np.diff(self.tau_grid) <= 0):
            raise ValueError("tau_grid must be strictly increasing")

    def __len__(self):
        return len(self.tau_grid)


def _tau_grid(tau_grid) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    if tau.size == 0 or np.any(~(tau > 0)) or np.any(np.diff(tau) <= 0):
        raise ValueError("tau_grid must be a non-empty, strictly increasing positive sequence")
    return tau


def _tdvp_trajectory(params, st, t_final, sample_times, cfg, measure_modes=False,
                     auto_n_max=True):
    from .tensornet.driver import simulate
    from .tensornet.layout import NumericsConfig
    return simulate(params, st, cfg or NumericsConfig(), t_final, sample_times,
                    auto_n_max=auto_n_max, measure_modes=measure_modes)


def survival_at(engine: str, params: ModelParams, st: SqueezeThermal, tau, *, cfg=None,
                auto_n_max: bool = True):
    """``(p_sur, report)`` at each ``tau`` from one evolution of ``engine``."""
    tau = _tau_grid(tau)
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if engine in ("analytic", "analytic_squeezed", "perturbative"):
        fn = {"analytic": analytic.gamma_th, "analytic_squeezed": analytic.gamma_th_squeezed,
              "perturbative": analytic.gamma_weak_coupling}[engine]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.ValidityWarning)
            gamma = np.atleast_1d(fn(analytic.RateQuery(params, st, tau)))
        report = {"outside_validity": bool(np.any(params.g * tau >= 1))}
        return np.exp(-gamma * tau), report
    if engine == "se":
        from .se_oracle import se_evolve
        traj = se_evolve(params, st, float(tau[-1]), sample_times=tau)
        surv = traj.survival
        idx = np.searchsorted(traj.times, tau)
        return surv[idx], dict(traj.report)
    traj = _tdvp_trajectory(params, st, float(tau[-1]), tau, cfg, auto_n_max=auto_n_max)
    idx = [traj.at(t) for t in tau]
    return traj.survival[idx], dict(traj.report)


def decay_curve(engine: str, params: ModelParams, st: SqueezeThermal, tau_grid, *,
                cfg=None, auto_n_max: bool = True) -> DecayCurve:
    """Survival and effective decay rate on ``tau_grid``.

    Engines: ``analytic`` (thermal sinc formula, ``r = 0``),
    ``analytic_squeezed`` (same with the squeezing renormalisation),
    ``perturbative`` (second order in ``g``, any squeezing), ``se``
    (single-excitation integrator, ``r = 0``) and ``tdvp``.  Time-domain
    engines run a single evolution to ``max(tau_grid)`` and read off every
    grid point.
    """
    tau = _tau_grid(tau_grid)
    p, report = survival_at(engine, params, st, tau, cfg=cfg, auto_n_max=auto_n_max)
    p = np.clip(p, np.finfo(float).tiny, 1.0)
    return DecayCurve(tau, p, effective_decay_rate(p, tau), engine, params, st, report)


# ---------------------------------------------------------------------------
# classification

@dataclass
class CrossoverReport:
    """``kind`` is ``"pure QZE"``, ``"pure QAZE"`` or ``"crossover"``."""

    kind: str
    tau_c: float | None
    slope: np.ndarray = field(repr=False)
    sign_changes: list = field(default_factory=list)

    @property
    def regimes(self) -> list[str]:
        return ["QZE" if s > 0 else "QAZE" for s in self.slope]


def _vertex(x, y):
    """Abscissa of the vertex of the parabola through three points."""
    c = np.polyfit(x, y, 2)
    if c[0] == 0:
        return float(x[1])
    return float(-c[1] / (2 * c[0]))


def classify_and_crossover(curve: DecayCurve) -> CrossoverReport:
    """Sign of ``d gamma / d tau`` and the first QZE to QAZE crossover.

    The slope uses central differences (one-sided at the ends).  ``tau_c`` is
    the vertex of a quadratic through the three points bracketing the first
    positive-to-negative sign change.
    """
    tau, gam = curve.tau_grid, curve.gamma
    if len(tau) < 5:
        raise ValueError("classification needs at least 5 grid points")
    slope = np.gradient(gam, tau)
    pos = slope > 0
    changes = [i for i in range(len(slope) - 1) if pos[i] != pos[i + 1]]
    if not changes:
        return CrossoverReport("pure QZE" if pos[0] else "pure QAZE", None, slope)
    down = [i for i in changes if pos[i]]
    tau_c = None
    if down:
        i = down[0]
        # centre the stencil on the larger of the two bracketing samples
        k = i if gam[i] >= gam[i + 1] else i + 1
        k = min(max(k, 1), len(tau) - 2)
        tau_c = _vertex(tau[k - 1:k + 2], gam[k - 1:k + 2])
        tau_c = min(max(tau_c, tau[k - 1]), tau[k + 1])
    return CrossoverReport("crossover", tau_c, slope, [float(0.5 * (tau[i] + tau[i + 1]))
                                                       for i in changes])


# ---------------------------------------------------------------------------
# energy flow

@dataclass
class EnergyFlow:
    times: np.ndarray
    e_tls: np.ndarray
    e_modes: np.ndarray
    a1: float
    a2: float
    backflow: dict
    identity_error: float
    fit_window: float

    @property
    def qaze_enabling(self) -> bool:
        """Negative ``a2``, i.e. an initially convex ``E_TLS``."""
        return self.a2 < 0

    def backflow_modes(self) -> list[int]:
        return sorted(m for m, iv in self.backflow.items() if iv)


def _flow_arrays(traj):
    """``(times, sigma_z, numbers, omegas, delta, g, survival)`` for TDVP or SE trajectories."""
    from .se_oracle import SETrajectory
    if isinstance(traj, SETrajectory):
        p, st = traj.params, traj.st
        th = thermal_angles(st, p)
        c2, s2 = np.cosh(th) ** 2, np.sinh(th) ** 2
        pa = np.array([np.abs(s.p) ** 2 for s in traj])
        qb = np.array([np.abs(s.q) ** 2 for s in traj])
        chi2 = np.array([abs(s.chi) ** 2 for s in traj])
        sz = 2 * chi2 - 1
        numbers = c2[None, :] * pa + s2[None, :] * (1 + qb)
        return traj.times, sz, numbers, p.omegas, p.delta, p.g, traj.survival
    return (traj.times, traj.sigma_z, traj.numbers, traj.omegas, traj.delta, traj.g,
            traj.survival)


def _intervals(times, mask):
    out, start = [], None
    for t, flag in zip(times, mask):
        if flag and start is None:
            start = t
        if not flag and start is not None:
            out.append((float(start), float(prev)))
            start = None
        prev = t
    if start is not None:
        out.append((float(start), float(times[-1])))
    return out


def energy_flow_analysis(traj, *, fit_window: float = 0.3,
                         threshold: float | None = None) -> EnergyFlow:
    """Energy bookkeeping along a trajectory.

    ``E_TLS / delta - 1/2`` is fitted by ``-(a1 x + a2 x^2)`` with ``x = g t``
    over ``0 < x <= fit_window``.  A mode is flagged for backflow on every
    sample where ``dE_m/dt`` falls below ``-threshold`` after the mode has
    absorbed energy; the default threshold is ``1e-6 * omega0 * g^2``.
    """
    times, sz, numbers, omegas, delta, g, surv = _flow_arrays(traj)
    times = np.asarray(times, float)
    e_tls = 0.5 * delta * np.asarray(sz, float)
    e_modes = np.asarray(numbers, float) * np.asarray(omegas)[None, :]
    identity = float(np.max(np.abs(np.asarray(surv) - (e_tls / delta + 0.5))))

    if g == 0:
        a1 = a2 = 0.0
    else:
        x = g * times
        sel = (x > 0) & (x <= fit_window * (1 + 1e-12))
        if np.count_nonzero(sel) < 5:
            raise ValueError("fit window holds fewer than 5 samples")
        y = e_tls[sel] / delta - 0.5
        design = -np.column_stack([x[sel], x[sel] ** 2])
        (a1, a2), *_ = np.linalg.lstsq(design, y, rcond=None)
        a1, a2 = float(a1), float(a2)

    if threshold is None:
        threshold = 1e-6 * omegas[0] * g ** 2
    backflow = {}
    rate = np.gradient(e_modes, times, axis=0) if len(times) > 1 else np.zeros_like(e_modes)
    for m in range(e_modes.shape[1]):
        absorbed = np.maximum.accumulate(rate[:, m] > threshold)
        backflow[m] = _intervals(times, (rate[:, m] < -threshold) & absorbed)
    return EnergyFlow(times, e_tls, e_modes, a1, a2, backflow, identity, fit_window)


# ---------------------------------------------------------------------------
# critical angles

@dataclass
class AngleScan:
    phi: np.ndarray
    gamma: np.ndarray
    tau: float
    params: ModelParams
    st: SqueezeThermal
    engine: str
    phi_max: float | None
    phi_min: float | None
    reports: list = field(default_factory=list, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.phi_max is None

    @property
    def step(self) -> float:
        return 2 * math.pi / len(self.phi)

    @property
    def modulation_depth(self) -> float:
        """``(max - min) / mean`` of ``gamma`` over the scan."""
        return float((self.gamma.max() - self.gamma.min()) / self.gamma.mean())

    @property
    def separation(self) -> float | None:
        """``phi_min - phi_max`` wrapped into ``[0, 2 pi)``."""
        if self.degenerate:
            return None
        return float((self.phi_min - self.phi_max) % (2 * math.pi))


def _periodic_refine(phi, y, k, sign):
    n = len(phi)
    h = 2 * math.pi / n
    ym, y0, yp = y[(k - 1) % n], y[k], y[(k + 1) % n]
    denom = ym - 2 * y0 + yp
    off = 0.0 if denom == 0 else 0.5 * (ym - yp) / denom
    if sign * denom < 0 or abs(off) > 1:
        off = 0.0
    return float((phi[k] + off * h) % (2 * math.pi))


def _uniform_grid(phi_grid) -> np.ndarray:
    if phi_grid is None:
        return np.arange(128) * (2 * math.pi / 128)
    if isinstance(phi_grid, (int, np.integer)):
        return np.arange(phi_grid) * (2 * math.pi / phi_grid)
    phi = np.asarray(phi_grid, dtype=float)
    if phi.size >= 2 and math.isclose(phi[-1] - phi[0], 2 * math.pi, rel_tol=1e-12):
        phi = phi[:-1]  # periodic endpoint, checked for consistency by the caller
    n = phi.size
    if n < 4:
        raise ValueError("angle grid needs at least 4 points")
    expected = phi[0] + np.arange(n) * (2 * math.pi / n)
    if phi[0] != 0 or not np.allclose(phi, expected, atol=1e-12):
        raise ValueError("angle grid must be uniform over [0, 2 pi) starting at 0")
    return phi


def _angle_point(args):
    engine, params, st, tau, cfg, n_max_fixed = args
    if n_max_fixed is not None:
        cfg = cfg.replace(n_max=n_max_fixed)
    p, rep = survival_at(engine, params, st, [tau], cfg=cfg,
                         auto_n_max=n_max_fixed is None)
    return float(effective_decay_rate(p[0], tau)), rep


def critical_angle_scan(engine: str, params: ModelParams, st: SqueezeThermal, tau: float,
                        phi_grid=None, *, cfg=None, jobs: int = 1,
                        flat_tol: float = 1e-10) -> AngleScan:
    """``gamma(phi)`` at fixed ``tau`` and the refined extremal angles.

    ``phi_grid`` is a uniform grid over ``[0, 2 pi)`` (an array, or a point
    count; default 128 points).  For the ``tdvp`` engine the Fock cutoff is
    chosen once, at the first grid angle, and reused across the scan.  A
    scan whose relative spread is below ``flat_tol`` is degenerate.
    """
    if engine == "se":
        raise ValueError("the se engine cannot scan squeezing angles (requires r = 0)")
    phi = _uniform_grid(phi_grid)
    if len(phi) < 128:
        warnings.warn(f"angle grid step 2pi/{len(phi)} is coarser than pi/64", stacklevel=2)
    sts = [st.replace(phi=float(x)) for x in phi]
    reports: list = []
    if engine in ("analytic", "analytic_squeezed", "perturbative"):
        gam = np.empty(len(phi))
        for i, s in enumerate(sts):
            p, rep = survival_at(engine, params, s, [tau])
            gam[i] = effective_decay_rate(p[0], tau)
    else:
        from .tensornet.layout import NumericsConfig
        cfg = cfg or NumericsConfig()
        first, rep0 = _angle_point((engine, params, sts[0], tau, cfg, None))
        n_fixed = rep0.get("n_max", cfg.n_max)
        jobs_args = [(engine, params, s, tau, cfg, n_fixed) for s in sts[1:]]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rest = list(pool.map(_angle_point, jobs_args))
        else:
            rest = [_angle_point(a) for a in jobs_args]
        gam = np.array([first] + [r[0] for r in rest])
        reports = [rep0] + [r[1] for r in rest]

    spread = gam.max() - gam.min()
    if spread <= flat_tol * max(abs(gam).max(), 1e-300):
        phi_max = phi_min = None
    else:
        phi_max = _periodic_refine(phi, gam, int(np.argmax(gam)), -1)
        phi_min = _periodic_refine(phi, gam, int(np.argmin(gam)), +1)
    return AngleScan(phi, gam, float(tau), params, st, engine, phi_max, phi_min, reports)
