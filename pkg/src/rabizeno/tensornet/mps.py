"""Matrix-product states on the doubled chain."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import ChainLayout

__all__ = ["TfdMps", "initial_mps", "expect_ops", "expect_mpo", "overlap", "site_populations"]


@dataclass
class TfdMps:
    """Site tensors ``A[i]`` of shape ``(D_left, d, D_right)``.

    ``center`` is the orthogonality centre: sites left of it are
    left-canonical, sites right of it right-canonical.  ``None`` means no
    canonical form is known.
    """

    tensors: list[np.ndarray]
    layout: ChainLayout
    d_max: int = 15
    center: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.tensors)

    def copy(self) -> "TfdMps":
        return TfdMps([A.copy() for A in self.tensors], self.layout, self.d_max, self.center,
                      dict(self.meta))

    @property
    def bond_dims(self) -> list[int]:
        return [A.shape[2] for A in self.tensors[:-1]]

    def norm(self) -> float:
        if self.center is not None:
            return float(np.linalg.norm(self.tensors[self.center]))
        return float(np.sqrt(abs(expect_ops(self, {}))))

    def canonicalize(self, center: int = 0) -> "TfdMps":
        """Bring the state into mixed-canonical form around ``center`` in place."""
        n = len(self)
        A = self.tensors
        for i in range(0, center):
            Dl, d, Dr = A[i].shape
            q, r = np.linalg.qr(A[i].reshape(Dl * d, Dr))
            A[i] = q.reshape(Dl, d, q.shape[1])
            A[i + 1] = np.tensordot(r, A[i + 1], axes=(1, 0))
        for i in range(n - 1, center, -1):
            Dl, d, Dr = A[i].shape
            q, r = np.linalg.qr(A[i].reshape(Dl, d * Dr).T)
            A[i] = q.T.reshape(q.shape[1], d, Dr)
            A[i - 1] = np.tensordot(A[i - 1], r.T, axes=(2, 0))
        self.center = center
        return self

    def to_dense(self) -> np.ndarray:
        psi = self.tensors[0]
        for A in self.tensors[1:]:
            psi = np.tensordot(psi, A, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)


def initial_mps(layout: ChainLayout, d_max: int = 15) -> TfdMps:
    """Product state ``|up> ⊗ |0>...|0>`` with unit bond dimensions."""
    tensors = []
    for d in layout.dims:
        A = np.zeros((1, d, 1), dtype=complex)
        A[0, 0, 0] = 1.0  # spin index 0 is up; boson index 0 is vacuum
        tensors.append(A)
    return TfdMps(tensors, layout, d_max, center=0)


def _transfer(E, A, op=None):
    """``E[a, a'] -> sum conj(A[a,s,b]) op[s,s'] A[a',s',b']``."""
    t = np.tensordot(E, A, axes=(1, 0))  # (a, s', b')
    if op is not None:
        t = np.tensordot(op, t, axes=(1, 1)).transpose(1, 0, 2)  # (a, s, b')
    return np.tensordot(A.conj(), t, axes=([0, 1], [0, 1]))  # (b, b')


def expect_ops(psi: TfdMps, ops: dict) -> complex:
    """``<psi| prod_i ops[i] |psi>`` for a product of single-site operators.

    Uses the canonical centre, when known, to skip sites that contract to
    the identity.
    """
    n = len(psi)
    sites = sorted(ops)
    if psi.center is not None:
        lo = min(sites[0], psi.center) if sites else psi.center
        hi = max(sites[-1], psi.center) if sites else psi.center
    else:
        lo, hi = 0, n - 1
    A = psi.tensors
    D = A[lo].shape[0]
    E = np.eye(D, dtype=complex)
    for i in range(lo, hi + 1):
        E = _transfer(E, A[i], ops.get(i))
    return complex(np.trace(E))


def overlap(bra: TfdMps, ket: TfdMps) -> complex:
    E = np.ones((1, 1), dtype=complex)
    for A, B in zip(bra.tensors, ket.tensors):
        t = np.tensordot(E, B, axes=(1, 0))
        E = np.tensordot(A.conj(), t, axes=([0, 1], [0, 1]))
    return complex(E[0, 0])


def expect_mpo(psi: TfdMps, mpo) -> complex:
    """``<psi|H|psi>`` for an MPO with tensors ``(wl, wr, d, d)``."""
    L = np.ones((1, 1, 1), dtype=complex)
    for A, W in zip(psi.tensors, mpo.tensors):
        t = np.tensordot(L, A, axes=(2, 0))  # (a, w, s', b')
        t = np.tensordot(t, W, axes=([1, 2], [0, 3]))  # (a, b', w', s)
        L = np.tensordot(A.conj(), t, axes=([0, 1], [0, 3])).transpose(0, 2, 1)
    return complex(L[0, 0, 0])


def site_populations(psi: TfdMps) -> list[np.ndarray]:
    """Diagonal of every single-site reduced density matrix."""
    if psi.center != 0:
        psi = psi.copy().canonicalize(0)
    out = []
    E = np.ones((1, 1), dtype=complex)
    for A in psi.tensors:
        t = np.tensordot(E, A, axes=(1, 0))  # (a, s, b)
        out.append(np.real(np.einsum("asb,asb->s", A.conj(), t)))
        E = np.tensordot(A.conj(), t, axes=([0, 1], [0, 1]))
    return out
