"""Brute-force dense oracle for small doubled chains."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from ..model import (ModelParams, SqueezeThermal, boson_operator, hamiltonian_terms,
                     spin_operator)
from .layout import ChainLayout, NumericsConfig, layout_for
from .observables import dressing_coefficients

__all__ = ["DIMENSION_GUARD", "DenseCheckReport", "assemble_dense", "embed", "dense_initial_state",
           "dense_propagate", "dense_observables", "dense_check", "drop_equivalence"]

DIMENSION_GUARD = 2 ** 16
_EIGH_LIMIT = 4096


def _local(label: str, kind: str, n_max: int) -> np.ndarray:
    return spin_operator(label) if kind == "s" else boson_operator(label, n_max)


def embed(ops: dict, layout: ChainLayout) -> sp.csr_matrix:
    """Sparse ``kron`` of ``{site_index: matrix}`` with identities elsewhere."""
    out = sp.identity(1, dtype=complex, format="csr")
    for i, d in enumerate(layout.dims):
        op = ops.get(i)
        op = sp.identity(d, dtype=complex, format="csr") if op is None else sp.csr_matrix(op)
        out = sp.kron(out, op, format="csr")
    return out


def assemble_dense(terms, layout: ChainLayout) -> sp.csr_matrix:
    """Sum the symbolic terms into a sparse matrix on ``layout``.

    Terms living only on dropped fictitious sites are skipped; a term
    coupling a dropped site to the rest must have zero coefficient.
    """
    if layout.hilbert_dim > DIMENSION_GUARD:
        raise ValueError(f"Hilbert dimension {layout.hilbert_dim} exceeds {DIMENSION_GUARD}")
    H = sp.csr_matrix((layout.hilbert_dim, layout.hilbert_dim), dtype=complex)
    for coeff, factors in terms:
        present = [layout.has(kind, m) for (kind, m), _ in factors]
        if not all(present):
            if any(present) and coeff != 0:
                raise ValueError("cannot drop fictitious sites that are coupled")
            continue
        ops = {}
        for (kind, m), label in factors:
            i = layout.index(kind, m)
            mat = _local(label, kind, layout.n_max)
            ops[i] = mat if i not in ops else ops[i] @ mat
        H = H + coeff * embed(ops, layout)
    return H


def dense_initial_state(layout: ChainLayout) -> np.ndarray:
    psi = np.zeros(layout.hilbert_dim, dtype=complex)
    psi[0] = 1.0  # up spin and every Fock index zero
    return psi


def dense_propagate(H, psi0: np.ndarray, times) -> np.ndarray:
    """Exact states ``exp(-i H t) psi0`` for every ``t`` in ``times``; shape ``(T, dim)``."""
    times = np.asarray(times, dtype=float)
    dim = psi0.shape[0]
    if dim <= _EIGH_LIMIT:
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        evals, evecs = sla.eigh(Hd)
        c = evecs.conj().T @ psi0
        return (evecs @ (np.exp(-1j * np.outer(evals, times)) * c[:, None])).T
    out = [psi0.copy()] if times[0] == 0 else []
    start = times[0] if times[0] != 0 else times[1]
    rest = times if times[0] != 0 else times[1:]
    if len(rest) == 1:
        out.append(expm_multiply(-1j * sp.csr_matrix(H) * rest[0], psi0))
    else:
        steps = expm_multiply(-1j * sp.csr_matrix(H), psi0, start=start, stop=rest[-1],
                              num=len(rest), endpoint=True)
        out.extend(steps)
    return np.array(out)


def _dressed_annihilator(params, st, layout, m) -> sp.csr_matrix:
    coeffs = dressing_coefficients(params, st, m)
    n_max = layout.n_max
    a, ad = boson_operator("a", n_max), boson_operator("adag", n_max)
    ia = layout.index("a", m)
    out = coeffs["a"] * embed({ia: a}, layout) + coeffs["adag"] * embed({ia: ad}, layout)
    if layout.fictitious:
        ib = layout.index("b", m)
        out = out + coeffs["b"] * embed({ib: a}, layout) + coeffs["bdag"] * embed({ib: ad}, layout)
    elif abs(coeffs["b"]) + abs(coeffs["bdag"]) > 0:
        raise ValueError("dressing needs fictitious sites at finite temperature")
    return out


def dense_observables(states: np.ndarray, params: ModelParams, st: SqueezeThermal,
                      layout: ChainLayout) -> dict:
    """Survival, ``<sz>`` and dressed per-mode numbers along dense states."""
    sz = embed({layout.spin_index: spin_operator("sz")}, layout)
    out = {"sigma_z": np.real(np.einsum("ti,ti->t", states.conj(), (sz @ states.T).T))}
    out["survival"] = 0.5 * (out["sigma_z"] + 1)
    numbers = []
    for m in range(params.num_modes):
        ap = _dressed_annihilator(params, st, layout, m)
        v = (ap @ states.T).T
        numbers.append(np.real(np.einsum("ti,ti->t", v.conj(), v)))
    out["numbers"] = np.array(numbers).T
    out["norm"] = np.real(np.einsum("ti,ti->t", states.conj(), states))
    return out


@dataclass
class DenseCheckReport:
    max_survival_dev: float
    max_sigma_z_dev: float
    max_number_dev: float
    times: np.ndarray = field(repr=False)
    tdvp: object = field(repr=False, default=None)
    dense: dict = field(repr=False, default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max(self.max_survival_dev, self.max_sigma_z_dev, self.max_number_dev)


def dense_check(params: ModelParams, st: SqueezeThermal, cfg: NumericsConfig, *,
                t_final: float | None = None, n_samples: int = 21) -> DenseCheckReport:
    """Compare TDVP against exact propagation of the dense Hamiltonian.

    ``t_final`` defaults to ``1/g`` (or 1 when ``g = 0``).
    """
    from .mpo import build_mpo
    from .mps import initial_mps
    from .tdvp import tdvp_evolve

    layout = layout_for(params, st, cfg)
    if 2 * (cfg.n_max + 1) ** (2 * params.num_modes) > DIMENSION_GUARD:
        raise ValueError("dense check dimension guard exceeded: need 2 (n_max+1)^(2M) <= 2^16")
    if t_final is None:
        t_final = 1.0 / params.g if params.g > 0 else 1.0
    times = np.linspace(0.0, t_final, n_samples)

    terms = hamiltonian_terms(params, st, quadratic_omega=not cfg.appendix_c_omega_convention)
    H = assemble_dense(terms, layout)
    states = dense_propagate(H, dense_initial_state(layout), times)
    ref = dense_observables(states, params, st, layout)

    mpo = build_mpo(params, st, layout, cfg, check=False)
    traj = tdvp_evolve(initial_mps(layout, cfg.d_max), mpo, cfg, t_final, sample_times=times)
    return DenseCheckReport(
        max_survival_dev=float(np.max(np.abs(traj.survival - ref["survival"]))),
        max_sigma_z_dev=float(np.max(np.abs(traj.sigma_z - ref["sigma_z"]))),
        max_number_dev=float(np.max(np.abs(traj.numbers - ref["numbers"]))),
        times=times, tdvp=traj, dense=ref)


def drop_equivalence(params: ModelParams, st: SqueezeThermal, n_max: int, times) -> float:
    """Largest survival difference between the full doubled chain and the dropped one (T=0)."""
    if not st.zero_temperature:
        raise ValueError("fictitious sites only decouple at zero temperature")
    terms = hamiltonian_terms(params, st)
    devs = []
    results = []
    for fict in (True, False):
        layout = ChainLayout(params.num_modes, n_max, fictitious=fict)
        H = assemble_dense(terms, layout)
        states = dense_propagate(H, dense_initial_state(layout), times)
        results.append(dense_observables(states, params, st, layout))
    for key in ("survival", "numbers"):
        devs.append(np.max(np.abs(results[0][key] - results[1][key])))
    return float(max(devs))
