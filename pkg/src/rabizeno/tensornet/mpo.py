"""Bond-dimension-3 MPO of the doubled Hamiltonian.

Each site carries a lower-triangular 3x3 operator matrix.  Reading the
chain left to right, index 2 carries the identity string, index 1 the
pending ``sx`` (or, left of the spin, the accumulated fictitious-mode
coupler) and index 0 the completed terms::

    W_b = [[I, 0, 0], [0, I, 0], [H_b, G_b, I]]
    W_s = [[I, 0, 0], [sx, 0, 0], [delta sz / 2, sx, I]]
    W_a = [[I, 0, 0], [G_a, I, 0], [H_a, 0, I]]

The left boundary keeps row 2 of the first site, the right boundary
column 0 of the last one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import (ModelParams, SqueezeThermal, boson_operator, build_mode_table,
                     hamiltonian_terms, spin_operator, squeeze_coeffs, thermal_angles)
from .layout import ChainLayout, NumericsConfig

__all__ = ["TfdMpo", "MPOCheckError", "build_mpo", "mpo_to_dense", "local_blocks"]


class MPOCheckError(RuntimeError):
    """The contracted MPO disagrees with the dense term assembly.

    ``checks`` holds the measured deviations.
    """

    def __init__(self, message: str, checks: dict | None = None):
        super().__init__(message)
        self.checks = dict(checks or {})


@dataclass
class TfdMpo:
    """Per-site tensors ``W[i]`` of shape ``(w_left, w_right, d, d)``."""

    tensors: list[np.ndarray]
    layout: ChainLayout
    params: ModelParams
    st: SqueezeThermal
    cfg: NumericsConfig
    checks: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.tensors)


def local_blocks(params: ModelParams, st: SqueezeThermal, n_max: int, *,
                 appendix_c_sign: bool = False, appendix_c_omega: bool = False) -> dict:
    """On-site Hamiltonians ``H_a, H_b`` and couplers ``G_a, G_b`` per mode."""
    A, B, K = squeeze_coeffs(st)
    th = thermal_angles(st, params)
    a, ad = boson_operator("a", n_max), boson_operator("adag", n_max)
    n = boson_operator("number", n_max)
    a2, ad2 = a @ a, ad @ ad
    blocks = {}
    for m, (w, gm) in enumerate(build_mode_table(params)):
        wq = 1.0 if appendix_c_omega else w
        H_a = A * w * n + B * wq * ad2 + np.conj(B) * wq * a2
        if appendix_c_sign:
            # literal MPO listing; not Hermitian when B != 0
            H_b = -A * w * n - B * wq * a2 + np.conj(B) * wq * ad2
        else:
            H_b = -A * w * n - B * wq * a2 - np.conj(B) * wq * ad2
        ca, sb = gm * math.cosh(th[m]), gm * math.sinh(th[m])
        G_a = ca * (K * ad + np.conj(K) * a)
        G_b = sb * (K * a + np.conj(K) * ad)
        blocks[m] = {"H_a": H_a, "H_b": H_b, "G_a": G_a, "G_b": G_b}
    return blocks


def build_mpo(params: ModelParams, st: SqueezeThermal, layout: ChainLayout,
              cfg: NumericsConfig | None = None, *, check: bool | None = None) -> TfdMpo:
    """Assemble the MPO.

    When ``M <= 2`` and ``n_max <= 4`` (or ``check=True``) the MPO is
    contracted and compared entrywise with the dense assembly of
    :func:`rabizeno.model.hamiltonian_terms`; a mismatch or a
    non-Hermitian result raises :class:`MPOCheckError`.
    """
    cfg = cfg or NumericsConfig(n_max=layout.n_max)
    if layout.num_modes != params.num_modes:
        raise ValueError("layout and params disagree on the number of modes")
    if not layout.fictitious and not st.zero_temperature:
        raise ValueError("fictitious sites can only be dropped at zero temperature")
    n_max = layout.n_max
    blocks = local_blocks(params, st, n_max, appendix_c_sign=cfg.appendix_c_sign_convention,
                          appendix_c_omega=cfg.appendix_c_omega_convention)
    Ib, Is = np.eye(n_max + 1, dtype=complex), np.eye(2, dtype=complex)
    tensors = []
    for kind, m in layout.sites:
        if kind == "s":
            W = np.zeros((3, 3, 2, 2), dtype=complex)
            W[0, 0] = W[2, 2] = Is
            W[1, 0] = W[2, 1] = spin_operator("sx")
            W[2, 0] = 0.5 * params.delta * spin_operator("sz")
        elif kind == "b":
            W = np.zeros((3, 3, n_max + 1, n_max + 1), dtype=complex)
            W[0, 0] = W[1, 1] = W[2, 2] = Ib
            W[2, 0] = blocks[m]["H_b"]
            W[2, 1] = blocks[m]["G_b"]
        else:
            W = np.zeros((3, 3, n_max + 1, n_max + 1), dtype=complex)
            W[0, 0] = W[1, 1] = W[2, 2] = Ib
            W[1, 0] = blocks[m]["G_a"]
            W[2, 0] = blocks[m]["H_a"]
        tensors.append(W)
    tensors[0] = tensors[0][2:3]
    tensors[-1] = tensors[-1][:, 0:1]
    mpo = TfdMpo(tensors, layout, params, st, cfg)

    if check is None:
        check = params.num_modes <= 2 and n_max <= 4
    if check:
        _cross_check(mpo)
    return mpo


def _cross_check(mpo: TfdMpo):
    from .dense import assemble_dense

    H = mpo_to_dense(mpo)
    herm = float(np.max(np.abs(H - H.conj().T)))
    terms = hamiltonian_terms(mpo.params, mpo.st,
                              quadratic_omega=not mpo.cfg.appendix_c_omega_convention)
    ref = assemble_dense(terms, mpo.layout).toarray()
    diff = float(np.max(np.abs(H - ref)))
    mpo.checks.update(hermiticity_error=herm, dense_difference=diff)
    tol = mpo.cfg.dense_check_tol
    if herm > tol:
        raise MPOCheckError(f"MPO is not Hermitian: max |H - H^dagger| = {herm:.3e}",
                            mpo.checks)
    if diff > tol:
        raise MPOCheckError(f"MPO differs from the dense assembly by {diff:.3e}", mpo.checks)


def mpo_to_dense(mpo: TfdMpo) -> np.ndarray:
    """Contract the MPO into a dense matrix (small chains only)."""
    acc = mpo.tensors[0][0]  # (w, d, d)
    for W in mpo.tensors[1:]:
        # acc[w, S, S'] x W[w, v, s, s'] -> [v, S s, S' s']
        t = np.tensordot(acc, W, axes=(0, 0))  # (S, S', v, s, s')
        S, Sp, v, s, sp = t.shape
        acc = t.transpose(2, 0, 3, 1, 4).reshape(v, S * s, Sp * sp)
    return acc[0]
