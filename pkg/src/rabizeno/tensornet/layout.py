"""Chain layout of the doubled system and the numerics configuration."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

from ..model import ModelParams, SqueezeThermal

__all__ = ["ChainLayout", "NumericsConfig", "layout_for", "estimate_memory_bytes"]


@dataclass(frozen=True)
class NumericsConfig:
    """Truncation and integrator controls of the tensor-network engine.

    ``dt=None`` resolves to ``1e-3 / g``.  ``tdvp_mode`` is one of
    ``"hybrid"`` (two-site sweeps until every bond is saturated, then
    single-site), ``"2site"`` or ``"1site"``.
    """

    n_max: int = 80
    d_max: int = 15
    dt: float | None = None
    krylov_dim: int = 10
    svd_cutoff: float = 1e-10
    krylov_tol: float = 1e-12
    drop_fictitious_at_t0: bool = True
    appendix_c_sign_convention: bool = False
    appendix_c_omega_convention: bool = False
    tdvp_mode: str = "hybrid"
    truncation_budget: float = 1e-6
    tail_tol: float = 1e-8
    dense_check_tol: float = 1e-12

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")
        if self.tdvp_mode not in ("hybrid", "2site", "1site"):
            raise ValueError(f"unknown tdvp_mode {self.tdvp_mode!r}")

    def resolve_dt(self, g: float) -> float:
        if self.dt is not None:
            return self.dt
        return 1e-3 / g if g > 0 else 0.01

    def replace(self, **changes) -> "NumericsConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class ChainLayout:
    """Site order ``b_{M-1} .. b_0, spin, a_0 .. a_{M-1}``.

    Low modes sit next to the spin.  Without fictitious sites the chain
    starts at the spin.
    """

    num_modes: int
    n_max: int
    fictitious: bool = True

    @property
    def sites(self) -> list[tuple[str, int | None]]:
        b = [("b", m) for m in reversed(range(self.num_modes))] if self.fictitious else []
        return b + [("s", None)] + [("a", m) for m in range(self.num_modes)]

    @property
    def dims(self) -> list[int]:
        return [2 if kind == "s" else self.n_max + 1 for kind, _ in self.sites]

    def __len__(self):
        return len(self.sites)

    @property
    def spin_index(self) -> int:
        return self.num_modes if self.fictitious else 0

    def index(self, kind: str, m: int | None = None) -> int:
        if kind == "s":
            return self.spin_index
        if kind == "a":
            return self.spin_index + 1 + m
        if kind == "b":
            if not self.fictitious:
                raise KeyError("fictitious sites were dropped from this layout")
            return self.num_modes - 1 - m
        raise KeyError(kind)

    def has(self, kind: str, m: int | None = None) -> bool:
        return kind != "b" or self.fictitious

    def site_kind(self, i: int) -> str:
        return {"s": "spin", "a": "physical-boson", "b": "fictitious-boson"}[self.sites[i][0]]

    def bond_caps(self, d_max: int) -> list[int]:
        dims = self.dims
        caps = []
        left = 1
        for k in range(len(dims) - 1):
            left *= dims[k]
            right = 1
            for d in dims[k + 1:]:
                right *= d
                if right >= d_max:
                    break
            caps.append(min(d_max, left, right))
        return caps

    @property
    def hilbert_dim(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out


def layout_for(params: ModelParams, st: SqueezeThermal, cfg: NumericsConfig) -> ChainLayout:
    drop = cfg.drop_fictitious_at_t0 and st.zero_temperature
    return ChainLayout(params.num_modes, cfg.n_max, fictitious=not drop)


def estimate_memory_bytes(layout: ChainLayout, cfg: NumericsConfig) -> int:
    """Rough peak memory of one evolution: two-site Krylov vectors dominate."""
    d = cfg.n_max + 1
    D = cfg.d_max
    state = len(layout) * D * D * d * 16
    krylov = (8 * cfg.krylov_dim + 2) * D * D * d * d * 16
    envs = 2 * len(layout) * D * D * 3 * 16
    return state + krylov + envs
