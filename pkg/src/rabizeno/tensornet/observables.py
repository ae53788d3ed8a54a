"""Expectation values on the doubled chain, including physical-frame dressing.

The physical annihilator of mode ``m`` seen from the squeezed, thermally
rotated frame is::

    a_phys = cosh r (c a + s b†) + e^{i phi} sinh r (c a† + s b)

with ``c, s = cosh th_m, sinh th_m``.
"""
from __future__ import annotations

import math

import numpy as np

from ..model import ModelParams, SqueezeThermal, boson_operator, spin_operator, thermal_angles
from .mps import TfdMps, expect_mpo, expect_ops

__all__ = ["OBSERVABLES", "dressing_coefficients", "measure", "dressed_number", "raw_number"]

OBSERVABLES = ("sigma_z", "sigma_x", "survival", "norm", "energy", "number", "number_raw",
               "mode_energy", "mode_energy_raw")


def dressing_coefficients(params: ModelParams, st: SqueezeThermal, m: int) -> dict:
    th = thermal_angles(st, params)[m]
    c, s = math.cosh(th), math.sinh(th)
    ch, sh = math.cosh(st.r), math.sinh(st.r)
    ph = complex(math.cos(st.phi), math.sin(st.phi))
    return {"a": ch * c, "bdag": ch * s, "adag": ph * sh * c, "b": ph * sh * s}


def _mode_terms(psi: TfdMps, params, st, m):
    """``a_phys`` as a list of ``(coeff, site, matrix)``."""
    layout = psi.layout
    n_max = layout.n_max
    a, ad = boson_operator("a", n_max), boson_operator("adag", n_max)
    k = dressing_coefficients(params, st, m)
    ia = layout.index("a", m)
    terms = [(k["a"], ia, a), (k["adag"], ia, ad)]
    if layout.fictitious:
        ib = layout.index("b", m)
        terms += [(k["bdag"], ib, ad), (k["b"], ib, a)]
    elif abs(k["b"]) + abs(k["bdag"]) > 0:
        raise ValueError("dressing needs fictitious sites at finite temperature")
    return [t for t in terms if t[0] != 0]


def dressed_number(psi: TfdMps, params: ModelParams, st: SqueezeThermal, m: int) -> float:
    """Physical-frame occupation ``<a_phys† a_phys>`` of mode ``m``."""
    terms = _mode_terms(psi, params, st, m)
    total = 0j
    # collect same-site products into one matrix per site pattern
    single: dict[int, np.ndarray] = {}
    for ci, si, oi in terms:
        for cj, sj, oj in terms:
            coeff = np.conj(ci) * cj
            if si == sj:
                mat = coeff * (oi.conj().T @ oj)
                single[si] = single[si] + mat if si in single else mat
            else:
                total += coeff * expect_ops(psi, {si: oi.conj().T, sj: oj})
    for site, mat in single.items():
        total += expect_ops(psi, {site: mat})
    return float(np.real(total))


def raw_number(psi: TfdMps, m: int, kind: str = "a") -> float:
    i = psi.layout.index(kind, m)
    return float(np.real(expect_ops(psi, {i: boson_operator("number", psi.layout.n_max)})))


def _parse(tag):
    if isinstance(tag, tuple):
        return tag[0], int(tag[1])
    if ":" in tag:
        name, m = tag.split(":", 1)
        return name, int(m)
    return tag, None


def measure(state: TfdMps, observable, mpo=None):
    """Expectation value of a tagged observable.

    Tags: ``sigma_z``, ``sigma_x``, ``survival``, ``norm``, ``energy`` (needs
    ``mpo``), and per mode ``number:m`` (physical frame), ``number_raw:m``
    (bare ``a_m† a_m`` in the evolution frame), ``mode_energy:m`` and
    ``mode_energy_raw:m`` (the same times ``w_m``).  Tuples ``("number", m)``
    are accepted as well.
    """
    name, m = _parse(observable)
    if name not in OBSERVABLES:
        raise KeyError(f"unknown observable {observable!r}")
    layout = state.layout
    if name in ("sigma_z", "survival"):
        sz = float(np.real(expect_ops(state, {layout.spin_index: spin_operator("sz")})))
        return sz if name == "sigma_z" else 0.5 * (sz + 1)
    if name == "sigma_x":
        return float(np.real(expect_ops(state, {layout.spin_index: spin_operator("sx")})))
    if name == "norm":
        return float(np.real(expect_ops(state, {})))
    if mpo is None:
        raise ValueError(f"observable {name!r} needs the MPO for model context")
    if name == "energy":
        return float(np.real(expect_mpo(state, mpo)))
    if m is None or not 0 <= m < layout.num_modes:
        raise KeyError(f"observable {name!r} needs a valid mode index")
    w = mpo.params.omegas[m]
    if name == "number_raw":
        return raw_number(state, m)
    if name == "mode_energy_raw":
        return w * raw_number(state, m)
    n = dressed_number(state, mpo.params, mpo.st, m)
    return n if name == "number" else w * n
