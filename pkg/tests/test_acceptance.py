"""Acceptance criteria, each at its stated tolerance.

Every test logs one pass/fail line through ``acceptance_log``; the lines are
printed in the terminal summary.  The tensor-network parts take about half an
hour on one core.
"""
import math
import warnings

import numpy as np
import pytest

from rabizeno import cli
from rabizeno.analytic import RateQuery, gamma_th
from rabizeno.model import ModelParams, SqueezeThermal, bose_occupation
from rabizeno.tensornet import ConvergenceWarning, NumericsConfig, build_mpo, dense_check
from rabizeno.tensornet import initial_mps, layout_for, measure
from rabizeno.tensornet.driver import simulate
from rabizeno.zeno import (classify_and_crossover, critical_angle_scan, decay_curve,
                           energy_flow_analysis)

pytestmark = [pytest.mark.slow,
              pytest.mark.filterwarnings("ignore::rabizeno.tensornet.ConvergenceWarning"),
              pytest.mark.filterwarnings("ignore:angle grid")]

T0 = SqueezeThermal()
FINE = np.round(np.arange(1, 101) * 0.01, 12)
COARSE = 32
# one integrator step per measurement interval at tau = 0.1; the cutoff is capped
# at 12 because the dt error (~1e-5 in P_sur) dominates the truncation error there
SCAN_CFG = NumericsConfig(dt=0.1, n_max=12)


@pytest.fixture(scope="module")
def tdvp_reports():
    """Reports of every tensor-network run of criteria 2 to 4, for criterion 6."""
    return {}


@pytest.fixture(scope="module")
def crossover():
    return {}


@pytest.fixture(scope="module")
def scans():
    cache = {}

    def get(r, g, beta=math.inf, grid=128, tau=0.1):
        key = (r, g, beta, grid, tau)
        if key not in cache:
            cache[key] = critical_angle_scan("tdvp", ModelParams(g=g),
                                             SqueezeThermal(r=r, beta=beta), tau, grid,
                                             cfg=SCAN_CFG)
        return cache[key]

    return get


def _wrap(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def test_c01_analytic_matches_single_excitation(acceptance_log):
    tau = np.round(np.arange(5, 101) * 0.01, 12)
    cases = [(0.01, math.inf), (0.1, 0.5), (0.1, 1.0)]
    devs = []
    for g, beta in cases:
        p, s = ModelParams(g=g), SqueezeThermal(beta=beta)
        se = decay_curve("se", p, s, tau)
        devs.append(float(np.max(np.abs(se.gamma / gamma_th(RateQuery(p, s, tau)) - 1))))
    ok = max(devs) < 0.05
    detail = ", ".join(f"g={g} beta={b}: {d:.2%}" for (g, b), d in zip(cases, devs))
    acceptance_log("1", ok, f"max relative deviation ({detail}); tol 5%")
    assert ok


def test_c02_tdvp_matches_dense(acceptance_log, tdvp_reports):
    st = SqueezeThermal(r=0.3, phi=math.pi / 2, beta=0.5)
    # 16 is the exact Schmidt rank of the central bond at n_max = 3
    rep = dense_check(ModelParams(g=0.1, num_modes=2), st, NumericsConfig(n_max=3, d_max=16))
    tdvp_reports["2"] = rep.tdvp.report
    ok = rep.max_survival_dev < 1e-6
    acceptance_log("2", ok, f"max |dP_sur| = {rep.max_survival_dev:.2e} up to gt = 1; tol 1e-6")
    assert ok


def test_c03_single_mode_pure_zeno(acceptance_log, tdvp_reports):
    notes, ok = [], True
    for g in (0.01, 0.2):
        p = ModelParams(g=g, num_modes=1)
        for engine in ("analytic", "se"):
            gam = decay_curve(engine, p, T0, FINE).gamma
            inc = bool(np.all(np.diff(gam) > 0))
            ok &= inc
            notes.append(f"{engine} g={g}: {'increasing' if inc else 'NOT increasing'}")
        spot = [0.2, 0.4, 0.6, 0.8, 1.0]
        curve = decay_curve("tdvp", p, T0, spot, cfg=NumericsConfig())
        tdvp_reports[f"3 g={g}"] = curve.report
        inc = bool(np.all(np.diff(curve.gamma) > 0))
        ok &= inc
        notes.append(f"tdvp g={g} at 5 tau: {'increasing' if inc else 'NOT increasing'}")
    acceptance_log("3", ok, "; ".join(notes))
    assert ok


@pytest.mark.parametrize("beta", [math.inf, 0.5])
def test_c04_multimode_crossover(acceptance_log, tdvp_reports, crossover, beta):
    p, s = ModelParams(g=0.1), SqueezeThermal(beta=beta)
    ana = classify_and_crossover(decay_curve("analytic", p, s, FINE))
    tau = np.round(np.arange(1, 26) * 0.02, 12)
    curve = decay_curve("tdvp", p, s, tau, cfg=NumericsConfig())
    tdvp_reports[f"4 beta={beta}"] = curve.report
    num = classify_and_crossover(curve)
    crossover[beta] = num.tau_c if num.tau_c is not None else ana.tau_c
    if math.isinf(beta):
        ok = all(r.kind == "crossover" and 0.15 <= r.tau_c <= 0.3 for r in (ana, num))
        need = "tau_c in [0.15, 0.3]"
    else:
        ok = ana.kind == "crossover" and num.kind == "crossover"
        need = "crossover present"
    fmt = lambda r: f"{r.kind} tau_c={r.tau_c:.3f}" if r.tau_c is not None else r.kind
    acceptance_log(f"4{'a' if math.isinf(beta) else 'b'}", ok,
                   f"beta={beta}: analytic {fmt(ana)}, tdvp {fmt(num)}; need {need}")
    assert ok


def test_c05_thermal_occupancy(acceptance_log):
    p, s = ModelParams(g=0.0), SqueezeThermal(beta=0.5)
    cfg = NumericsConfig(n_max=4)
    layout = layout_for(p, s, cfg)
    mpo = build_mpo(p, s, layout, cfg)
    psi = initial_mps(layout)
    dev = max(abs(measure(psi, f"number:{m}", mpo) - bose_occupation(0.5, w))
              for m, w in enumerate(p.omegas))
    ok = dev < 1e-8
    acceptance_log("5", ok, f"max |n_m - bose| over 15 modes = {dev:.1e}; tol 1e-8")
    assert ok


def test_c06_conservation(acceptance_log, tdvp_reports):
    if not tdvp_reports:
        pytest.skip("criteria 2 to 4 did not run")
    norm = max(r["max_norm_error"] for r in tdvp_reports.values())
    drift = max(r["energy_rel_drift"] for r in tdvp_reports.values())
    ok = norm < 1e-8 and drift < 1e-6
    acceptance_log("6", ok, f"{len(tdvp_reports)} runs: max |1 - norm| = {norm:.1e} (tol 1e-8), "
                            f"max energy drift = {drift:.1e} (tol 1e-6)")
    assert ok


def test_c07a_single_mode_angles(acceptance_log):
    scan = critical_angle_scan("analytic_squeezed", ModelParams(g=0.01, num_modes=1),
                               SqueezeThermal(r=0.3), 0.01)
    err = max(abs(_wrap(scan.phi_max)), abs(_wrap(scan.phi_min - math.pi)))
    ok = err <= math.pi / 64
    acceptance_log("7a", ok, f"phi_max = {scan.phi_max:.4f}, phi_min = {scan.phi_min:.4f}; "
                             f"max error {err:.1e} (tol pi/64)")
    assert ok


def test_c07b_multimode_angle_shift(acceptance_log, scans):
    base = scans(0.3, 0.01)
    shifted = base.phi_max > 0 and base.phi_min > math.pi
    sep_err = abs(base.separation - math.pi)
    ok = shifted and sep_err <= 2 * base.step
    notes = [f"phi_max = {base.phi_max:.4f}, phi_min = {base.phi_min:.4f}, "
             f"|sep - pi| = {sep_err:.1e}"]
    for r, g in ((0.1, 0.01), (0.3, 0.1)):
        other = scans(r, g)
        d = max(abs(_wrap(other.phi_max - base.phi_max)), abs(_wrap(other.phi_min - base.phi_min)))
        ok &= d <= base.step
        notes.append(f"r={r} g={g}: extrema moved {d:.1e}")
    acceptance_log("7b", ok, "; ".join(notes) + f"; step {base.step:.4f}")
    assert ok


def test_c07c_scaling_collapse(acceptance_log, scans):
    ref = scans(0.3, 0.01)
    weak = scans(0.3, 0.02, grid=COARSE)
    ref_sub = ref.gamma[:: 128 // COARSE] / 0.01 ** 2
    spread = float(np.max(np.abs(weak.gamma / 0.02 ** 2 / ref_sub - 1)))
    strong = scans(0.3, 0.1)
    soft = float(np.max(np.abs(strong.gamma / 0.1 ** 2 / (ref.gamma / 0.01 ** 2) - 1)))
    ok = spread < 0.01
    acceptance_log("7c", ok, f"gamma/g^2 spread g=0.01 vs 0.02: {spread:.2%} (tol 1%); "
                             f"soft g=0.1: {soft:.2%} (target 3%)")
    assert ok


def test_c08_energy_backflow(acceptance_log, crossover):
    p, s = ModelParams(g=0.1), SqueezeThermal(beta=0.5)
    tau_c = crossover.get(0.5)
    if tau_c is None:
        tau_c = classify_and_crossover(decay_curve("analytic", p, s, FINE)).tau_c
    t = np.round(np.arange(0, 1001) * 0.01, 12)
    traj = simulate(p, s, NumericsConfig(n_max=10), 10.0, t)
    flow = energy_flow_analysis(traj)
    lo, hi = tau_c - 0.1, tau_c + 0.1
    high = [m for m in range(8, 15) if any(a <= hi and b >= lo for a, b in flow.backflow[m])]
    low = {m: [iv for iv in flow.backflow[m] if p.g * iv[0] < 1] for m in range(3)}
    low_clean = not any(low.values())
    ok = bool(high) and low_clean and flow.qaze_enabling
    low_txt = ", ".join(f"m={m} from t={iv[0][0]:.2f}" for m, iv in low.items() if iv) or "none"
    acceptance_log("8", ok, f"high-m backflow near tau_c={tau_c:.3f}: modes {high}; "
                            f"low-m backflow for gt<1: {low_txt}; a2 = {flow.a2:.3f} (need < 0); "
                            f"identity error {flow.identity_error:.1e}")
    assert ok


def test_c09_temperature_trend(acceptance_log, scans):
    betas = [math.inf, 2.0, 1.0, 0.5]
    p = ModelParams(g=0.01)
    taus = [0.1, 0.3, 0.5, 1.0]
    gam = np.array([decay_curve("perturbative", p, SqueezeThermal(r=0.3, phi=math.pi / 2, beta=b),
                                taus).gamma for b in betas])
    rising = bool(np.all(np.diff(gam, axis=0) > 0))
    depth = [critical_angle_scan("perturbative", p, SqueezeThermal(r=0.3, beta=b), 0.1)
             .modulation_depth for b in betas]
    falling = bool(np.all(np.diff(depth) < 0))
    cold = scans(0.3, 0.01)
    hot = scans(0.3, 0.01, beta=0.5, grid=COARSE)
    k = COARSE // 4  # phi = pi/2
    cold_sub = cold.gamma[:: 128 // COARSE]
    t_rising = hot.gamma[k] > cold_sub[k]
    t_depth = (np.ptp(hot.gamma) / hot.gamma.mean(), np.ptp(cold_sub) / cold_sub.mean())
    t_falling = t_depth[0] < t_depth[1]
    ok = rising and falling and t_rising and t_falling
    acceptance_log("9", ok, "perturbative: gamma rising with T " + ("yes" if rising else "NO")
                   + ", depth " + " > ".join(f"{d:.4f}" for d in depth)
                   + f"; tdvp beta=0.5 vs inf: gamma(pi/2) {hot.gamma[k]:.5f} vs {cold_sub[k]:.5f}"
                   + f", depth {t_depth[0]:.4f} vs {t_depth[1]:.4f}")
    assert ok


def test_c10_validation_battery(acceptance_log):
    results = cli.run_validate()
    failed = [r["check"] for r in results if r["status"] == "FAIL"]
    ok = not failed
    acceptance_log("10", ok, f"{len(results)} checks, failed: {failed or 'none'}")
    assert ok
