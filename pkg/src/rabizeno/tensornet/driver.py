"""One-call TDVP runs with an optional adaptive Fock cutoff."""
from __future__ import annotations

import logging
import warnings

import numpy as np

from ..model import ModelParams, SqueezeThermal
from .layout import NumericsConfig, layout_for
from .mpo import build_mpo
from .mps import initial_mps
from .tdvp import ConvergenceWarning, Trajectory, tdvp_evolve

logger = logging.getLogger(__name__)

__all__ = ["simulate"]


def _run(params, st, cfg, t_final, sample_times, **kw) -> Trajectory:
    layout = layout_for(params, st, cfg)
    mpo = build_mpo(params, st, layout, cfg)
    return tdvp_evolve(initial_mps(layout, cfg.d_max), mpo, cfg, t_final,
                       sample_times=sample_times, **kw)


def simulate(params: ModelParams, st: SqueezeThermal, cfg: NumericsConfig | None = None,
             t_final: float = 1.0, sample_times=None, *, auto_n_max: bool = False,
             n_start: int = 4, n_step: int = 4, tail_target: float = 1e-10,
             survival_tol: float | None = 1e-6, **kw) -> Trajectory:
    """Build layout, MPO and vacuum state, then evolve.

    With ``auto_n_max`` the Fock cutoff starts at ``n_start`` and grows by
    ``n_step`` until the occupation of the top two levels stays below
    ``tail_target`` over the whole run, or until the survival curve moves by
    less than ``survival_tol`` between successive cutoffs, never exceeding
    ``cfg.n_max``.  The accepted run is returned, so the search costs only
    the cheaper undersized runs on top of the final one.
    """
    cfg = cfg or NumericsConfig()
    if not auto_n_max:
        return _run(params, st, cfg, t_final, sample_times, **kw)
    if params.g == 0 and st.r == 0:
        # nothing is ever excited in the evolution frame
        n_start = 1
    n = min(n_start, cfg.n_max)
    tried = []
    prev = None
    while True:
        trial = cfg.replace(n_max=n, tail_tol=max(cfg.tail_tol, tail_target))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            traj = _run(params, st, trial, t_final, sample_times, **kw)
        tail = traj.report["fock_tail"]
        tried.append((n, tail))
        settled = (survival_tol is not None and prev is not None
                   and float(np.max(np.abs(traj.survival - prev))) < survival_tol)
        if tail < tail_target or settled or n >= cfg.n_max:
            break
        prev = traj.survival
        n = min(n + n_step, cfg.n_max)
    traj.report["auto_n_max"] = tried
    if tail >= tail_target and not settled:
        warnings.warn(f"Fock tail {tail:.2e} still above {tail_target:.0e} at n_max={n}",
                      ConvergenceWarning, stacklevel=2)
    for key, msg in (("discarded_weight", "truncation budget"),):
        if traj.report[key] > cfg.truncation_budget:
            warnings.warn(f"{msg} exceeded: {traj.report[key]:.2e}", ConvergenceWarning,
                          stacklevel=2)
    logger.debug("auto n_max search: %s", tried)
    return traj
