"""Scenario files: one YAML document describing device, GST and tune-up settings."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .device import DriftConfig, DriftingDeviceModel, NoiseConfig, SpamConfig
from .drb import DEFAULT_M_GRID, ObjectiveSpec
from .nelder_mead import NMConfig
from .params import MODE_SIZES, random_rotation_params


class ScenarioError(ValueError):
    """Invalid or unreadable scenario."""


DEFAULTS: dict = {
    "seed": 0,
    "output": "runs",
    "device": {
        "noise": {
            "coherent_pre": None,  # explicit angles, or drawn from coherent_range
            "coherent_range": [0.10, 0.20],
            "cross_resonance_angle": 0.02,
            "depolarizing_2q": 0.012,
            "depolarizing_1q": 0.0005,
            "single_qubit_overrotation": 0.003,
        },
        "drift": {"per_cycle_sigma": 0.022, "depolarizing_jitter": 0.1},
        "spam": {"prep_depolarizing": 0.005, "readout_p01": 0.01, "readout_p10": 0.02},
    },
    "gst": {"cycle": 0, "shots": 8190, "exact": False, "catalog": "default", "max_length": 8},
    "post": {
        "mode": "control-only",
        "cycles": list(range(1, 13)),
        "seed_restarts": 8,
        "m_grid": list(DEFAULT_M_GRID),
        "objective": {"m": 16, "num_circuits": 20, "shots": 8190, "cnot_fraction": 0.75, "exact_mode": False},
        "optimizer": {"init_step": 0.1, "no_improve_limit": 5, "max_iterations": 30, "shrink_enabled": False},
    },
}

CATALOGS = {"default": 8}  # catalog name -> supported max germ power


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ScenarioError(f"unknown key {path + k!r}")
        if isinstance(base[k], dict) and base[k] and isinstance(v, dict):
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class Scenario:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        if self.data["post"]["mode"] not in MODE_SIZES:
            raise ScenarioError(f"post.mode must be one of {sorted(MODE_SIZES)}")
        try:
            self.model()
            self.objective_spec()
            self.nm_config()
        except (TypeError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc
        post, gst = self.data["post"], self.data["gst"]
        cycles = list(post["cycles"])
        if any(int(c) != c or c < 0 for c in cycles):
            raise ScenarioError("post.cycles must be non-negative integers")
        if cycles != sorted(set(cycles)):
            raise ScenarioError("post.cycles must be strictly ascending")
        if gst["catalog"] not in CATALOGS:
            raise ScenarioError(f"unknown gst.catalog {gst['catalog']!r}")
        if gst["max_length"] != CATALOGS[gst["catalog"]]:
            raise ScenarioError(f"catalog {gst['catalog']!r} supports max_length {CATALOGS[gst['catalog']]}")
        if int(gst["shots"]) < 1:
            raise ScenarioError("gst.shots must be >= 1")
        if int(post["seed_restarts"]) < 1:
            raise ScenarioError("post.seed_restarts must be >= 1")
        if len(post["m_grid"]) < 3:
            raise ScenarioError("post.m_grid needs at least three lengths")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict | None) -> "Scenario":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a mapping")
        return cls(_merge(DEFAULTS, data))

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        if not path.is_file():
            raise ScenarioError(f"scenario file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ScenarioError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(data)

    def with_overrides(self, **dotted: Any) -> "Scenario":
        """``with_overrides(**{"post.objective.exact_mode": True})``."""
        data = copy.deepcopy(self.data)
        for key, val in dotted.items():
            node = data
            *head, last = key.split(".")
            for h in head:
                node = node[h]
            if last not in node:
                raise ScenarioError(f"unknown key {key!r}")
            node[last] = val
        return Scenario(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)

    # -- derived objects --------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def mode(self) -> str:
        return self.data["post"]["mode"]

    @property
    def cycles(self) -> list:
        return [int(c) for c in self.data["post"]["cycles"]]

    @property
    def gst_cycle(self) -> int:
        return int(self.data["gst"]["cycle"])

    @property
    def output(self) -> Path:
        return Path(self.data["output"])

    def coherent_angles(self) -> tuple:
        noise = self.data["device"]["noise"]
        n = MODE_SIZES[self.mode]
        if noise["coherent_pre"] is not None:
            return tuple(float(a) for a in noise["coherent_pre"])
        # each bookend error is a rotation by an angle in coherent_range about a random axis
        lo, hi = noise["coherent_range"]
        rng = np.random.default_rng([self.seed, 0xB0])
        return tuple(a for _ in range(n // 3) for a in random_rotation_params(rng, lo, hi))

    def model(self) -> DriftingDeviceModel:
        dev = self.data["device"]
        noise = {k: v for k, v in dev["noise"].items() if k not in ("coherent_pre", "coherent_range")}
        base = NoiseConfig(coherent_pre=self.coherent_angles(), **noise)
        drift = DriftConfig(rng_seed=self.seed, **dev["drift"])
        return DriftingDeviceModel(base, drift, SpamConfig(**dev["spam"]))

    def objective_spec(self) -> ObjectiveSpec:
        return ObjectiveSpec(**self.data["post"]["objective"])

    def nm_config(self) -> NMConfig:
        return NMConfig(**self.data["post"]["optimizer"])

    @property
    def m_grid(self) -> tuple:
        return tuple(int(m) for m in self.data["post"]["m_grid"])


def default_scenario(instance: int = 0, exact: bool = False) -> Scenario:
    """The drifted coherent-noise scenario; ``instance`` seeds the device."""
    return Scenario.from_dict({"seed": instance, "post": {"objective": {"exact_mode": exact}}})


def ensemble_cycle(instance: int, cycles: int = 12) -> int:
    """Tune-up cycle assigned to an ensemble member, sweeping the campaign horizon."""
    return 1 + instance % cycles


def default_ensemble(size: int = 20, exact: bool = True) -> list:
    return [default_scenario(k, exact) for k in range(size)]
