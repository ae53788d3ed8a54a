import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from rabizeno.model import ModelParams, SqueezeThermal, thermal_angles
from rabizeno.se_oracle import default_se_dt, se_evolve


def _restricted_hamiltonian(p, s):
    """Lab-frame matrix on the basis (up; down 1_a_m; down 1_b_m)."""
    M, w = p.num_modes, p.omegas
    th = thermal_angles(s, p)
    H = np.zeros((2 * M + 1, 2 * M + 1))
    H[0, 0] = p.delta / 2
    H[1:M + 1, 0] = p.couplings * np.cosh(th)
    H[M + 1:, 0] = p.couplings * np.sinh(th)
    H[0, 1:] = H[1:, 0]
    H[np.arange(1, M + 1), np.arange(1, M + 1)] = w - p.delta / 2
    H[np.arange(M + 1, 2 * M + 1), np.arange(M + 1, 2 * M + 1)] = -w - p.delta / 2
    return H


def _exact_amplitudes(p, s, t):
    psi0 = np.zeros(2 * p.num_modes + 1, dtype=complex)
    psi0[0] = 1
    return expm(-1j * t * _restricted_hamiltonian(p, s)) @ psi0


def test_zero_coupling_keeps_survival():
    traj = se_evolve(ModelParams(g=0.0, num_modes=3), SqueezeThermal(), 5.0)
    assert np.max(np.abs(traj.survival - 1)) < 1e-15
    assert np.all([np.all(a.p == 0) and np.all(a.q == 0) for a in traj])


def test_single_resonant_mode_rabi():
    p = ModelParams(g=0.1, num_modes=1)
    traj = se_evolve(p, SqueezeThermal(), 30.0)
    t = traj.times
    assert np.max(np.abs(traj.survival - np.cos(0.1 * t) ** 2)) < 1e-8


def test_complete_transfer_at_quarter_period():
    p = ModelParams(g=0.1, num_modes=1)
    t = math.pi / 2 / 0.1
    traj = se_evolve(p, SqueezeThermal(), t, sample_times=[t])
    assert traj.survival[-1] < 1e-10


@pytest.mark.parametrize("M, beta, delta", [(1, 0.5, 1.0), (3, math.inf, 1.0), (4, 1.0, 2.5),
                                            (15, 0.5, 1.0)])
def test_matches_matrix_exponential(M, beta, delta):
    p = ModelParams(g=0.1, num_modes=M, delta=delta)
    s = SqueezeThermal(beta=beta)
    t = 7.0
    a = se_evolve(p, s, t, sample_times=[t])[-1]
    ref = _exact_amplitudes(p, s, t)
    assert abs(a.chi - ref[0]) < 1e-8
    assert np.max(np.abs(a.p - ref[1:M + 1])) < 1e-8
    assert np.max(np.abs(a.q - ref[M + 1:])) < 1e-8


@settings(max_examples=15, deadline=None)
@given(g=st.floats(0.005, 0.3), M=st.integers(1, 6), beta=st.one_of(st.just(math.inf),
                                                                     st.floats(0.2, 5)))
def test_norm_and_energy_conserved(g, M, beta):
    traj = se_evolve(ModelParams(g=g, num_modes=M), SqueezeThermal(beta=beta), 2.0 / g,
                     check_halving=False)
    assert traj.report["norm_error"] < 1e-10
    assert traj.report["energy_drift"] < 1e-8


def test_step_halving_report():
    traj = se_evolve(ModelParams(g=0.1, num_modes=5), SqueezeThermal(beta=0.5), 10.0)
    assert traj.report["halving_delta"] < 1e-9


def test_sample_times_hit_exactly():
    traj = se_evolve(ModelParams(g=0.1, num_modes=2), SqueezeThermal(), 1.0,
                     sample_times=[0.123, 0.5, 1.0])
    assert list(traj.times) == [0.0, 0.123, 0.5, 1.0]


def test_default_step_limits():
    p = ModelParams(g=0.1)
    dt = default_se_dt(p, SqueezeThermal(beta=1.0), 100.0)
    assert dt <= 1e-3 / 0.1
    assert dt * (15 + 1) <= 0.02 + 1e-15


def test_rejects_squeezing():
    with pytest.raises(ValueError):
        se_evolve(ModelParams(), SqueezeThermal(r=0.1), 1.0)


@pytest.mark.parametrize("kwargs", [{"t_final": 0.0}, {"t_final": 1.0, "dt": 0.2},
                                    {"t_final": 1.0, "dt": -1.0}])
def test_rejects_bad_steps(kwargs):
    with pytest.raises(ValueError):
        se_evolve(ModelParams(), SqueezeThermal(), **kwargs)


def test_rejects_samples_outside_range():
    with pytest.raises(ValueError):
        se_evolve(ModelParams(), SqueezeThermal(), 1.0, sample_times=[2.0])
