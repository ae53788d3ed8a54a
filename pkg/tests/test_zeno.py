import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from rabizeno.analytic import RateQuery, gamma_th
from rabizeno.model import ModelParams, SqueezeThermal
from rabizeno.se_oracle import se_evolve
from rabizeno.tensornet import ConvergenceWarning, NumericsConfig
from rabizeno.tensornet.tdvp import Trajectory
from rabizeno.zeno import (AngleScan, DecayCurve, classify_and_crossover, critical_angle_scan,
                           decay_curve, effective_decay_rate, energy_flow_analysis,
                           survival_n_measurements)

T0 = SqueezeThermal()


# -- decay rate and repeated measurements


@pytest.mark.parametrize("p, tau, expected", [
    (1.0, 0.3, 0.0),
    (math.exp(-0.01), 0.1, 0.1),
    (math.cos(0.05) ** 2, 0.5, 5.003e-3),
])
def test_effective_decay_rate_values(p, tau, expected):
    assert effective_decay_rate(p, tau) == pytest.approx(expected, rel=1e-3, abs=1e-15)


def test_effective_decay_rate_vacuum_rabi_exact():
    assert effective_decay_rate(math.cos(0.05) ** 2, 0.5) == pytest.approx(
        -2 * math.log(math.cos(0.05)) / 0.5, rel=1e-14)


@pytest.mark.parametrize("p, tau", [(0.0, 0.1), (-0.2, 0.1), (1.1, 0.1), (0.5, 0.0)])
def test_effective_decay_rate_rejects(p, tau):
    with pytest.raises(ValueError):
        effective_decay_rate(p, tau)


def test_effective_decay_rate_tolerates_roundoff():
    assert effective_decay_rate(1 + 1e-14, 0.2) == 0.0


@pytest.mark.parametrize("p, n, expected", [(0.7, 1, 0.7), (0.99, 100, 0.36603), (1.0, 37, 1.0)])
def test_survival_n_measurements(p, n, expected):
    assert survival_n_measurements(p, n) == pytest.approx(expected, abs=5e-6)


def test_survival_n_measurements_rejects_zero():
    with pytest.raises(ValueError):
        survival_n_measurements(0.5, 0)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(1e-3, 1.0), tau=st.floats(1e-3, 5), n=st.integers(1, 200))
def test_repeated_survival_is_exponential_in_rate(p, tau, n):
    gam = effective_decay_rate(p, tau)
    assert survival_n_measurements(p, n) == pytest.approx(math.exp(-gam * n * tau), rel=1e-9,
                                                          abs=1e-300)


# -- decay curves


def test_analytic_curve_matches_rate():
    p = ModelParams(g=0.1)
    tau = np.linspace(0.01, 1, 100)
    curve = decay_curve("analytic", p, T0, tau)
    assert np.allclose(curve.gamma, gamma_th(RateQuery(p, T0, tau)), rtol=1e-12)
    assert np.allclose(curve.gamma, -np.log(curve.p_sur) / curve.tau_grid, rtol=1e-12)


def test_decay_curve_validation():
    with pytest.raises(ValueError):
        decay_curve("analytic", ModelParams(), T0, [0.2, 0.1])
    with pytest.raises(ValueError):
        decay_curve("bogus", ModelParams(), T0, [0.1])
    with pytest.raises(ValueError):
        DecayCurve([0.1, 0.2], [1.0], [0.0, 0.0], "analytic", ModelParams(), T0)


def test_se_and_tdvp_agree_at_weak_coupling():
    p = ModelParams(g=0.02, num_modes=2)
    tau = np.linspace(2.5, 50, 20)
    se = decay_curve("se", p, T0, tau)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        tn = decay_curve("tdvp", p, T0, tau, cfg=NumericsConfig(n_max=4))
    assert np.max(np.abs(se.p_sur - tn.p_sur)) < 1e-3


@pytest.mark.parametrize("g", [0.01, 0.2])
def test_single_mode_is_pure_zeno(g):
    curve = decay_curve("analytic", ModelParams(g=g, num_modes=1), T0, np.arange(1, 101) / 100)
    assert np.all(np.diff(curve.gamma) > 0)
    assert classify_and_crossover(curve).kind == "pure QZE"


def test_multimode_crossover_window():
    curve = decay_curve("analytic", ModelParams(g=0.1), T0, np.arange(1, 101) / 100)
    rep = classify_and_crossover(curve)
    assert rep.kind == "crossover"
    assert 0.15 <= rep.tau_c <= 0.3
    assert rep.regimes[0] == "QZE"


# -- classification


def _synthetic(tau, gamma):
    return DecayCurve(tau, np.exp(-gamma * tau), gamma, "analytic", ModelParams(), T0)


def test_monotone_curve_is_pure_qze():
    tau = np.linspace(0.01, 1, 50)
    rep = classify_and_crossover(_synthetic(tau, tau ** 2))
    assert rep.kind == "pure QZE" and rep.tau_c is None


def test_decreasing_curve_is_pure_qaze():
    tau = np.linspace(0.01, 1, 50)
    assert classify_and_crossover(_synthetic(tau, 1 / tau)).kind == "pure QAZE"


def test_sinc_squared_crossover_root():
    tau = np.arange(1, 101) / 100
    gamma = tau * np.sinc(7 * tau / np.pi) ** 2
    # d/dtau [sin^2(7 tau) / (49 tau)] = 0  <=>  tan(7 tau) = 14 tau
    exact = brentq(lambda t: math.tan(7 * t) - 14 * t, 0.1, math.pi / 14 - 1e-9)
    rep = classify_and_crossover(_synthetic(tau, gamma))
    assert rep.kind == "crossover"
    assert abs(rep.tau_c - exact) < 0.01


def test_classification_needs_five_points():
    tau = np.linspace(0.1, 0.4, 4)
    with pytest.raises(ValueError):
        classify_and_crossover(_synthetic(tau, tau))


@settings(max_examples=30, deadline=None)
@given(peak=st.floats(0.1, 0.8), width=st.floats(0.2, 1.0))
def test_crossover_locates_smooth_peak(peak, width):
    tau = np.arange(1, 101) / 100
    gamma = np.exp(-((tau - peak) / width) ** 2)
    rep = classify_and_crossover(_synthetic(tau, gamma))
    assert abs(rep.tau_c - peak) < 0.01


# -- energy flow


def _rabi_trajectory(g, t_final, n=301):
    t = np.linspace(0, t_final, n)
    sz = 2 * np.cos(g * t) ** 2 - 1
    numbers = np.sin(g * t)[:, None] ** 2
    return Trajectory(times=t, sigma_z=sz, norm=np.ones(n), energy=np.zeros(n), numbers=numbers,
                      bond_dim=np.ones(n), discarded=np.zeros(n), fock_tail=np.zeros(n),
                      omegas=np.array([1.0]), delta=1.0, g=g)


def test_energy_flow_free():
    traj = se_evolve(ModelParams(g=0.0, num_modes=3), T0, 10.0)
    flow = energy_flow_analysis(traj)
    assert flow.a1 == 0 and flow.a2 == 0
    assert np.all(flow.e_modes == 0)
    assert np.ptp(flow.e_tls) < 1e-15
    assert flow.backflow_modes() == []


def test_energy_flow_vacuum_rabi_closed_form():
    flow = energy_flow_analysis(_rabi_trajectory(0.1, 10.0))
    # -sin^2 x = -(x^2 - x^4/3 + ...): no linear term, unit quadratic term
    # the quartic term leaks into the fit at the 1e-2 level over the default window
    assert abs(flow.a1) < 1e-2
    assert flow.a2 == pytest.approx(1.0, abs=0.05)
    narrow = energy_flow_analysis(_rabi_trajectory(0.1, 10.0, n=3001), fit_window=0.05)
    assert abs(narrow.a1) < 2e-4
    assert narrow.a2 == pytest.approx(1.0, abs=2e-3)
    assert not flow.qaze_enabling
    assert flow.identity_error < 1e-15
    assert flow.backflow_modes() == []


def test_energy_flow_detects_backflow_after_quarter_period():
    flow = energy_flow_analysis(_rabi_trajectory(0.1, 25.0))
    (start, end), = flow.backflow[0]
    assert start == pytest.approx(math.pi / 2 / 0.1, abs=0.2)
    assert end == pytest.approx(25.0)


def test_energy_flow_se_trajectory_identity():
    traj = se_evolve(ModelParams(g=0.1, num_modes=4), SqueezeThermal(beta=0.5), 10.0)
    flow = energy_flow_analysis(traj)
    assert flow.identity_error < 1e-10
    assert flow.e_modes.shape == (len(traj), 4)


def test_energy_flow_short_window():
    with pytest.raises(ValueError):
        energy_flow_analysis(_rabi_trajectory(0.1, 10.0, n=11), fit_window=0.3)


# -- critical angles


def test_unsqueezed_scan_is_degenerate():
    scan = critical_angle_scan("perturbative", ModelParams(g=0.01), SqueezeThermal(beta=1.0), 0.1)
    assert scan.degenerate and scan.separation is None


def test_single_mode_extrema_at_zero_and_pi():
    scan = critical_angle_scan("analytic_squeezed", ModelParams(g=0.01, num_modes=1),
                               SqueezeThermal(r=0.3), 0.1)
    assert scan.phi_max == pytest.approx(0.0, abs=1e-12)
    assert scan.phi_min == pytest.approx(math.pi, abs=1e-12)


def test_multimode_extrema_shift_positively():
    scan = critical_angle_scan("perturbative", ModelParams(g=0.01), SqueezeThermal(r=0.3), 0.1)
    assert 0 < scan.phi_max < math.pi / 2
    assert abs(scan.separation - math.pi) < 2 * scan.step
    assert scan.gamma[0] == pytest.approx(scan.gamma[-1], rel=0.05)


@pytest.mark.parametrize("r, g", [(0.1, 0.01), (0.3, 0.1), (0.1, 0.1)])
def test_critical_angles_independent_of_r_and_g(r, g):
    ref = critical_angle_scan("perturbative", ModelParams(g=0.01), SqueezeThermal(r=0.3), 0.1)
    scan = critical_angle_scan("perturbative", ModelParams(g=g), SqueezeThermal(r=r), 0.1)
    assert abs(scan.phi_max - ref.phi_max) < scan.step
    assert abs(scan.phi_min - ref.phi_min) < scan.step


def test_angle_grid_validation():
    p, s = ModelParams(g=0.01, num_modes=1), SqueezeThermal(r=0.3)
    with pytest.raises(ValueError):
        critical_angle_scan("se", p, s, 0.1)
    with pytest.raises(ValueError):
        critical_angle_scan("perturbative", p, s, 0.1, phi_grid=[0.1, 0.2, 0.3, 0.4])
    with pytest.warns(UserWarning, match="coarser"):
        scan = critical_angle_scan("perturbative", p, s, 0.1, phi_grid=np.linspace(0, 2 * np.pi, 9))
    assert len(scan.phi) == 8


@pytest.mark.filterwarnings("ignore::rabizeno.tensornet.ConvergenceWarning")
@pytest.mark.filterwarnings("ignore:angle grid")
def test_tdvp_scan_reuses_first_cutoff():
    scan = critical_angle_scan("tdvp", ModelParams(g=0.01, num_modes=2), SqueezeThermal(r=0.3),
                               0.1, phi_grid=8, cfg=NumericsConfig(n_max=12, dt=0.05))
    n_used = {rep["n_max"] for rep in scan.reports}
    assert len(n_used) == 1
    assert isinstance(scan, AngleScan) and not scan.degenerate
