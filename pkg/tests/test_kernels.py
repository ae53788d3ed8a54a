import importlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabizeno import _kernels_py, kernels

compiled = pytest.importorskip("rabizeno._kernels")


@settings(max_examples=25, deadline=None)
@given(M=st.integers(1, 16), t0=st.floats(0, 50), dt=st.floats(1e-4, 0.05),
       nsteps=st.integers(0, 200), seed=st.integers(0, 2 ** 31))
def test_compiled_matches_fallback(M, t0, dt, nsteps, seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=2 * M) + 1j * rng.normal(size=2 * M)
    kappa = rng.uniform(0, 0.5, size=2 * M)
    nu = rng.uniform(-20, 20, size=2 * M)
    chi = complex(rng.normal(), rng.normal())
    c1, y1 = compiled.se_rk4(chi, y, kappa, nu, t0, dt, nsteps)
    c2, y2 = _kernels_py.se_rk4(chi, y, kappa, nu, t0, dt, nsteps)
    assert abs(c1 - c2) < 1e-12 * max(1, abs(c2))
    assert np.max(np.abs(np.asarray(y1) - y2)) < 1e-12 * max(1, np.max(np.abs(y2)))


def test_inputs_not_mutated():
    y = np.array([1 + 1j, 0.5])
    kappa, nu = np.array([0.1, 0.2]), np.array([0.0, 1.0])
    keep = y.copy()
    compiled.se_rk4(1.0, y, kappa, nu, 0.0, 0.01, 10)
    assert np.array_equal(y, keep)


def test_environment_forces_fallback(monkeypatch):
    monkeypatch.setenv("RABIZENO_PURE_PYTHON", "1")
    try:
        mod = importlib.reload(kernels)
        assert mod.BACKEND == "python"
        assert mod.se_rk4 is _kernels_py.se_rk4
    finally:
        monkeypatch.delenv("RABIZENO_PURE_PYTHON")
        mod = importlib.reload(kernels)
    assert mod.BACKEND == "cython"
