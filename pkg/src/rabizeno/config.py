"""Run configuration: blocks of typed keys, INI files, overrides and presets.

Grammar
-------
An INI file with the sections ``[model]``, ``[state]``, ``[numerics]``,
``[task]`` and ``[output]``.  Every key can also be set on the command line
as ``block.key=value``.  Values:

* booleans: ``true``/``false``/``yes``/``no``/``1``/``0``
* ``state.beta``: a positive number or ``inf``
* ``task.tau_grid``: ``start:stop:step`` (stop included) or a comma list
* ``task.tau``: a number or a comma list (one angle scan per value)
* ``task.phi_grid``: a point count over ``[0, 2 pi)``
* ``task.sweep``: ``block.key=v1,v2; block.key=v1,v2`` (cartesian product)
* ``task.points``: ``block.key=v, block.key=v | block.key=v ...`` (explicit list)
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import itertools
import json
import math
import os
from pathlib import Path

import numpy as np

from .model import INFINITE, ModelParams, SqueezeThermal
from .tensornet.layout import NumericsConfig

__all__ = ["OUTPUT_ENV", "PRESETS", "ConfigError", "RunConfig", "parse_tau_grid"]

OUTPUT_ENV = "RABIZENO_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _numerics_defaults():
    cfg = NumericsConfig()
    out = {name: getattr(cfg, name) for name in NumericsConfig.field_names()}
    out["auto_n_max"] = True
    return out


_DEFAULTS = {
    "model": {"delta": 1.0, "omega0": 1.0, "g": 0.1, "num_modes": 15},
    "state": {"r": 0.0, "phi": 0.0, "beta": INFINITE},
    "numerics": _numerics_defaults(),
    "task": {"command": "decay", "engine": "analytic", "tau_grid": "0.01:1:0.01",
             "tau": "0.1", "phi_grid": 128, "t_final": 0.0, "t_step": 0.01,
             "fit_window": 0.3, "sweep": "", "points": ""},
    "output": {"directory": "", "formats": "csv,json"},
}
# keys whose default is None but which hold floats
_OPTIONAL_FLOAT = {("numerics", "dt")}
_ALIASES = {("numerics", "drop_fictitious_at_T0"): "drop_fictitious_at_t0",
            ("numerics", "appendixC_sign_convention"): "appendix_c_sign_convention",
            ("numerics", "appendixC_omega_convention"): "appendix_c_omega_convention"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return INFINITE
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _coerce(block: str, key: str, value):
    default = _DEFAULTS[block][key]
    if not isinstance(value, str):
        return value
    if (block, key) in _OPTIONAL_FLOAT:
        return None if value.strip().lower() in ("", "none", "auto") else _parse_float(value)
    if isinstance(default, bool):
        return _parse_bool(value)
    if isinstance(default, int):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{block}.{key} expects an integer, got {value!r}") from None
    if isinstance(default, float):
        return _parse_float(value)
    return value.strip()


def _canonical_key(block: str, key: str) -> str:
    return _ALIASES.get((block, key), key)


def parse_tau_grid(text: str) -> np.ndarray:
    text = str(text).strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad range {text!r}; use start:stop:step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)
    return np.array([float(x) for x in text.split(",") if x.strip()])


def _parse_assignment(item: str):
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"expected block.key=value, got {item!r}")
    lhs, value = item.split("=", 1)
    block, key = lhs.strip().split(".", 1)
    return block, key, value.strip()


class RunConfig:
    """Resolved configuration; ``blocks[block][key]`` holds typed values."""

    def __init__(self, blocks: dict | None = None):
        self.blocks = copy.deepcopy(_DEFAULTS)
        self.blocks["output"]["directory"] = os.environ.get(OUTPUT_ENV, "rabizeno_out")
        for block, values in (blocks or {}).items():
            for key, value in values.items():
                self.set(block, key, value)

    # -- mutation
    def set(self, block: str, key: str, value) -> None:
        if block not in _DEFAULTS:
            raise ConfigError(f"unknown block {block!r}")
        key = _canonical_key(block, key)
        if key not in _DEFAULTS[block]:
            raise ConfigError(f"unknown key {block}.{key}")
        self.blocks[block][key] = _coerce(block, key, value)

    def apply_overrides(self, items) -> None:
        for item in items:
            self.set(*_parse_assignment(item))

    def load_file(self, path) -> None:
        path = Path(path)
        if path.suffix == ".json":
            data = json.loads(path.read_text())
            blocks = data.get("config", data)
            for block, values in blocks.items():
                for key, value in values.items():
                    if isinstance(value, str) and block == "state" and key == "beta":
                        value = _parse_float(value)
                    self.set(block, key, value)
            return
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for section in parser.sections():
            for key, value in parser.items(section):
                self.set(section, key, value)

    # -- views
    def copy(self) -> "RunConfig":
        return RunConfig(copy.deepcopy(self.blocks))

    def to_dict(self) -> dict:
        out = copy.deepcopy(self.blocks)
        if math.isinf(out["state"]["beta"]):
            out["state"]["beta"] = "inf"
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def params(self) -> ModelParams:
        m = self.blocks["model"]
        return ModelParams(delta=m["delta"], omega0=m["omega0"], g=m["g"],
                           num_modes=m["num_modes"])

    def state(self) -> SqueezeThermal:
        s = self.blocks["state"]
        return SqueezeThermal(r=s["r"], phi=s["phi"], beta=s["beta"])

    def numerics(self) -> NumericsConfig:
        n = dict(self.blocks["numerics"])
        n.pop("auto_n_max")
        return NumericsConfig(**n)

    @property
    def task(self) -> dict:
        return self.blocks["task"]

    def tau_grid(self) -> np.ndarray:
        return parse_tau_grid(self.task["tau_grid"])

    def tau_values(self) -> list[float]:
        return [float(x) for x in parse_tau_grid(self.task["tau"])]

    def t_final(self) -> float:
        t = self.task["t_final"]
        if t > 0:
            return t
        g = self.blocks["model"]["g"]
        return 1.0 / g if g > 0 else 1.0

    def points(self) -> list[dict]:
        """Override sets of the sweep, in a fixed order; ``[{}]`` without a sweep."""
        task = self.task
        if task["sweep"] and task["points"]:
            raise ConfigError("task.sweep and task.points are mutually exclusive")
        if task["points"]:
            out = []
            for chunk in task["points"].split("|"):
                point = {}
                for item in chunk.split(","):
                    if item.strip():
                        block, key, value = _parse_assignment(item)
                        point[f"{block}.{key}"] = value
                out.append(point)
            return out
        if task["sweep"]:
            axes = []
            for axis in task["sweep"].split(";"):
                if axis.strip():
                    block, key, values = _parse_assignment(axis)
                    axes.append((f"{block}.{key}", [v.strip() for v in values.split(",")]))
            names = [a[0] for a in axes]
            return [dict(zip(names, combo)) for combo in itertools.product(*[a[1] for a in axes])]
        return [{}]

    def at_point(self, point: dict) -> "RunConfig":
        cfg = self.copy()
        for name, value in point.items():
            block, key = name.split(".", 1)
            cfg.set(block, key, value)
        return cfg


_COARSE = 32  # pi/16 angle step
PRESETS: dict[str, dict] = {
    "fig1a": {"task": {"command": "decay", "engine": "analytic",
                       "points": "model.num_modes=1, model.g=0.01 | model.num_modes=1, model.g=0.2"
                                 " | model.num_modes=15, model.g=0.01"
                                 " | model.num_modes=15, model.g=0.1"},
              "state": {"beta": "inf"}},
    "fig1b": {"task": {"command": "decay", "engine": "analytic",
                       "sweep": "state.beta=inf,2,1,0.5"},
              "model": {"g": "0.1", "num_modes": "15"}},
    "fig2": {"task": {"command": "energy", "engine": "tdvp", "t_step": "0.01"},
             "model": {"g": "0.1", "num_modes": "15"}, "state": {"beta": "0.5"}},
    "fig3a": {"task": {"command": "angles", "engine": "tdvp", "tau": "0.1",
                       "phi_grid": str(_COARSE), "sweep": "model.num_modes=1,5,10,15"},
              "model": {"g": "0.01"}, "state": {"r": "0.3"}},
    "fig3b": {"task": {"command": "angles", "engine": "tdvp", "tau": "0.1",
                       "phi_grid": str(_COARSE), "sweep": "state.r=0.1,0.3; model.g=0.01,0.1"},
              "model": {"num_modes": "15"}},
    "fig3c": {"task": {"command": "angles", "engine": "tdvp", "tau": "0.05,0.1,0.2,0.3,0.5",
                       "phi_grid": str(_COARSE)},
              "model": {"g": "0.01", "num_modes": "15"}, "state": {"r": "0.3"}},
    "fig4a": {"task": {"command": "angles", "engine": "tdvp", "tau": "0.1",
                       "phi_grid": str(_COARSE), "sweep": "state.beta=inf,2,1,0.5"},
              "model": {"g": "0.01", "num_modes": "15"}, "state": {"r": "0.3"}},
    "fig4b": {"task": {"command": "decay", "engine": "tdvp", "tau_grid": "0.01:1:0.01",
                       "sweep": "state.beta=inf,2,1,0.5"},
              "model": {"g": "0.01", "num_modes": "15"},
              "state": {"r": "0.3", "phi": repr(math.pi / 2)}},
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return RunConfig(PRESETS[name])
