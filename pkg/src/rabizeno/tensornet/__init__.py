"""Thermofield-doubled chain: layout, MPO, MPS and TDVP evolution."""
from .layout import ChainLayout, NumericsConfig, layout_for, estimate_memory_bytes
from .mpo import MPOCheckError, TfdMpo, build_mpo, mpo_to_dense
from .mps import TfdMps, initial_mps
from .observables import measure
from .tdvp import ConvergenceWarning, Trajectory, tdvp_evolve
from .dense import dense_check

__all__ = ["ChainLayout", "NumericsConfig", "layout_for", "estimate_memory_bytes", "MPOCheckError",
           "TfdMpo", "build_mpo", "mpo_to_dense", "TfdMps", "initial_mps", "measure",
           "ConvergenceWarning", "Trajectory", "tdvp_evolve", "dense_check"]
