"""All bone-model parameters in one record, plus the ``key = value`` file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Mapping

from ..core import SpatialPError


class InvalidParams(SpatialPError):
    pass


@dataclass(frozen=True)
class BoneParams:
    # macro surface test: a cell is on the surface iff
    # mineral_threshold <= c < mineral_threshold + surface_band
    mineral_threshold: int = 5
    surface_band: int = 3
    c_max: int = 100
    damage_prob: float = 0.05
    activation_prob: float = 0.02
    pc_release: int = 8
    pb_release: int = 4
    oc_fusion: int = 8  # pre-osteoclasts fusing into one osteoclast
    oc_budget: int = 3  # cells an osteoclast destroys before dying
    max_sim: int = 10
    max_sim_bmu: int = 100
    macro_w: int = 25
    macro_h: int = 25
    micro_w: int = 25
    micro_h: int = 25
    oy_fraction: float = 0.5
    macro_phase_steps: int = 4
    rebuild_enabled: bool = False
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.mineral_threshold <= 0:
            problems.append("mineral_threshold must be > 0")
        if self.surface_band <= 0:
            problems.append("surface_band must be > 0")
        if self.mineral_threshold + self.surface_band > self.c_max:
            problems.append("mineral_threshold + surface_band must not exceed c_max")
        if self.oc_fusion < 4:
            problems.append("oc_fusion must be >= 4")
        if self.oc_budget < 1:
            problems.append("oc_budget must be >= 1")
        for name in ("damage_prob", "activation_prob", "oy_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        for name in ("pc_release", "pb_release", "max_sim", "max_sim_bmu", "macro_phase_steps"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if min(self.macro_w, self.macro_h) < 1:
            problems.append("macro grid must be non-empty")
        # the micro skin needs room for membrane 2, its clearance and a mineral zone
        if self.micro_w < 5 or self.micro_h < 3:
            problems.append("micro grid must be at least 5x3")
        if problems:
            raise InvalidParams("; ".join(problems))

    @property
    def surface_range(self) -> range:
        return range(self.mineral_threshold, self.mineral_threshold + self.surface_band)

    def replace(self, **changes) -> "BoneParams":
        return dataclasses.replace(self, **changes)


# short names accepted in params files
ALIASES = {
    "m": "mineral_threshold",
    "n": "surface_band",
    "C_MAX": "c_max",
    "p_g": "damage_prob",
    "p_h": "activation_prob",
    "k": "pc_release",
    "l": "pb_release",
    "ℓ": "pb_release",
    "N_OC": "oc_fusion",
    "N_DC": "oc_budget",
    "MAX_SIM": "max_sim",
    "MAX_SIM_BMU": "max_sim_bmu",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(name: str, raw: str, kind):
    try:
        if kind is bool or kind == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int or kind == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise InvalidParams(f"bad value {raw!r} for {name}") from None


def params_from_mapping(values: Mapping[str, object], base: BoneParams = BoneParams()) -> BoneParams:
    kinds = {f.name: f.type for f in fields(BoneParams)}
    changes = {}
    for key, raw in values.items():
        name = ALIASES.get(key, key)
        if name not in kinds:
            raise InvalidParams(f"unknown parameter {key!r}")
        changes[name] = _convert(name, str(raw), kinds[name]) if isinstance(raw, str) else raw
    return base.replace(**changes)


def parse_params(text: str) -> BoneParams:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise InvalidParams(f"line {lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return params_from_mapping(values)


def format_params(params: BoneParams) -> str:
    return "".join(f"{f.name} = {getattr(params, f.name)}\n" for f in fields(BoneParams))
