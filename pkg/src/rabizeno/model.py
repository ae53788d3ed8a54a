"""Multimode quantum Rabi model in the squeezed, thermofield-doubled frame.

All quantities are in units of the base mode frequency ``omega0`` with
``k_B = 1``.  The doubled Hamiltonian acting on the qubit, the physical
modes ``a_m`` and the fictitious modes ``b_m`` is

    H = (delta/2) sz
      + sum_m w_m [A (a†a - b†b) + (B a†² - B b² + h.c.)]
      + sum_m g_m [K cosh(th_m) a† + K sinh(th_m) b_m] sx + h.c.

and it is evolved from ``|up> ⊗ |0...0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "INFINITE",
    "ModelParams",
    "SqueezeThermal",
    "LocalOperator",
    "Term",
    "build_mode_table",
    "squeeze_coeffs",
    "thermal_angles",
    "bose_occupation",
    "hamiltonian_terms",
    "boson_operator",
    "spin_operator",
    "local_operator",
]

#: Inverse temperature of the zero-temperature state.
INFINITE = math.inf


def is_zero_temperature(beta: float) -> bool:
    return math.isinf(beta)


@dataclass(frozen=True)
class ModelParams:
    """Qubit splitting, base frequency, base coupling and number of modes."""

    delta: float = 1.0
    omega0: float = 1.0
    g: float = 0.1
    num_modes: int = 15

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}")
        if int(self.num_modes) != self.num_modes or self.num_modes < 1:
            raise ValueError(f"num_modes must be a positive integer, got {self.num_modes}")
        object.__setattr__(self, "num_modes", int(self.num_modes))

    @property
    def omegas(self) -> np.ndarray:
        return self.omega0 * np.arange(1, self.num_modes + 1, dtype=float)

    @property
    def couplings(self) -> np.ndarray:
        return self.g * np.sqrt(np.arange(1, self.num_modes + 1, dtype=float))

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class SqueezeThermal:
    """Uniform squeezing ``xi = r exp(i phi)`` on top of a thermal state.

    ``beta`` may be :data:`INFINITE` for the zero-temperature state, in
    which case every thermal angle is exactly zero.
    """

    r: float = 0.0
    phi: float = 0.0
    beta: float = INFINITE

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"squeezing amplitude must be non-negative, got {self.r}")
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive or INFINITE, got {self.beta}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @property
    def zero_temperature(self) -> bool:
        return is_zero_temperature(self.beta)

    def replace(self, **changes) -> "SqueezeThermal":
        return SqueezeThermal(**{**self.__dict__, **changes})


def build_mode_table(p: ModelParams) -> list[tuple[float, float]]:
    """Return ``[(omega_m, g_m)]`` with ``omega_m = (m+1) omega0`` and ``g_m = sqrt(m+1) g``."""
    return [(float(w), float(c)) for w, c in zip(p.omegas, p.couplings)]


def squeeze_coeffs(st: SqueezeThermal) -> tuple[float, complex, complex]:
    """Coefficients ``(A, B, K)`` of the squeeze-transformed Hamiltonian."""
    ch, sh = math.cosh(st.r), math.sinh(st.r)
    phase = complex(math.cos(st.phi), math.sin(st.phi))
    if st.r == 0:
        return 1.0, 0j, 1 + 0j
    return ch * ch + sh * sh, phase * ch * sh, ch + phase * sh


def _omegas(modes) -> np.ndarray:
    if isinstance(modes, ModelParams):
        return modes.omegas
    arr = np.asarray(modes, dtype=float)
    return arr[:, 0] if arr.ndim == 2 else arr


def thermal_angles(st: SqueezeThermal, modes) -> np.ndarray:
    """Bogoliubov thermal angles ``arctanh(exp(-beta w_m / 2))``.

    ``modes`` is a mode table, an array of frequencies, or a
    :class:`ModelParams`.
    """
    w = _omegas(modes)
    if st.zero_temperature:
        return np.zeros_like(w)
    return np.arctanh(np.exp(-0.5 * st.beta * w))


def bose_occupation(beta: float, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if is_zero_temperature(beta):
        return np.zeros_like(omega)
    return 1.0 / np.expm1(beta * omega)


# ---------------------------------------------------------------------------
# local operators

_SPIN = {
    "identity": np.eye(2, dtype=complex),
    "sz": np.diag([1.0, -1.0]).astype(complex),
    "sx": np.array([[0, 1], [1, 0]], dtype=complex),
    "sy": np.array([[0, -1j], [1j, 0]], dtype=complex),
    # basis order (up, down)
    "sp": np.array([[0, 1], [0, 0]], dtype=complex),
    "sm": np.array([[0, 0], [1, 0]], dtype=complex),
}


def spin_operator(label: str) -> np.ndarray:
    try:
        return _SPIN[label].copy()
    except KeyError:
        raise KeyError(f"unknown spin operator {label!r}") from None


def boson_operator(label: str, n_max: int) -> np.ndarray:
    """Truncated boson operator on Fock states ``|0>..|n_max>``."""
    dim = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    ops = {
        "identity": lambda: np.eye(dim, dtype=complex),
        "a": lambda: a,
        "adag": lambda: a.conj().T.copy(),
        "number": lambda: np.diag(np.arange(dim, dtype=float)).astype(complex),
        # squares are taken inside the truncated space
        "a2": lambda: a @ a,
        "adag2": lambda: a.conj().T @ a.conj().T,
    }
    try:
        return ops[label]()
    except KeyError:
        raise KeyError(f"unknown boson operator {label!r}") from None


@dataclass(frozen=True)
class LocalOperator:
    site_kind: str  # "spin", "physical-boson" or "fictitious-boson"
    matrix: np.ndarray = field(repr=False)
    label: str


def local_operator(label: str, site_kind: str, n_max: int | None = None) -> LocalOperator:
    if site_kind == "spin":
        return LocalOperator(site_kind, spin_operator(label), label)
    if site_kind in ("physical-boson", "fictitious-boson"):
        if n_max is None:
            raise ValueError("boson operators need n_max")
        return LocalOperator(site_kind, boson_operator(label, n_max), label)
    raise ValueError(f"unknown site kind {site_kind!r}")


# ---------------------------------------------------------------------------
# symbolic Hamiltonian

class Term(NamedTuple):
    """``coeff * prod(op)`` with factors ``((kind, mode), label)``; kind in {"s", "a", "b"}."""

    coeff: complex
    factors: tuple


def hamiltonian_terms(p: ModelParams, st: SqueezeThermal, *,
                      quadratic_omega: bool = True) -> list[Term]:
    """Engine-agnostic term list of the doubled Hamiltonian.

    ``quadratic_omega=False`` drops the ``w_m`` factor on the pair-creation
    terms, the alternative convention some MPO listings use.
    """
    A, B, K = squeeze_coeffs(st)
    th = thermal_angles(st, p)
    terms = [Term(p.delta / 2, ((("s", None), "sz"),))]
    for m, (w, gm) in enumerate(build_mode_table(p)):
        wq = w if quadratic_omega else 1.0
        a, b = ("a", m), ("b", m)
        terms.append(Term(A * w, ((a, "number"),)))
        terms.append(Term(-A * w, ((b, "number"),)))
        if B != 0:
            terms += [
                Term(B * wq, ((a, "adag2"),)),
                Term(np.conj(B) * wq, ((a, "a2"),)),
                Term(-B * wq, ((b, "a2"),)),
                Term(-np.conj(B) * wq, ((b, "adag2"),)),
            ]
        ca, sb = gm * math.cosh(th[m]), gm * math.sinh(th[m])
        sx = (("s", None), "sx")
        terms += [
            Term(K * ca, (sx, (a, "adag"))),
            Term(np.conj(K) * ca, (sx, (a, "a"))),
        ]
        if sb != 0:
            terms += [
                Term(K * sb, (sx, (b, "a"))),
                Term(np.conj(K) * sb, (sx, (b, "adag"))),
            ]
    return terms
