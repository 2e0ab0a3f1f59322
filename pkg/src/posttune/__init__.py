"""GST-seeded tune-up of a two-qubit CNOT on a drifting simulated device."""
from .device import DriftConfig, DriftingDeviceModel, NoiseConfig, SpamConfig
from .drb import DecayFit, ObjectiveSpec, fit_decay, improvement
from .drift import DiamondBounds, diamond_bounds, drift_report
from .gateset import GateSet
from .gst import lgst_estimate, run_gst
from .nelder_mead import NMConfig
from .params import CorrectionParams, unitary_from_params
from .post import PostRunReport, experiment_budget, run_post
from .scenario import Scenario, default_scenario
from .seed import SeedResult, corrected_ptm, find_seed

__version__ = "0.1.0"

__all__ = [
    "CorrectionParams",
    "DecayFit",
    "DiamondBounds",
    "DriftConfig",
    "DriftingDeviceModel",
    "GateSet",
    "NMConfig",
    "NoiseConfig",
    "ObjectiveSpec",
    "PostRunReport",
    "Scenario",
    "SeedResult",
    "SpamConfig",
    "corrected_ptm",
    "default_scenario",
    "diamond_bounds",
    "drift_report",
    "experiment_budget",
    "find_seed",
    "fit_decay",
    "improvement",
    "lgst_estimate",
    "run_gst",
    "run_post",
    "unitary_from_params",
]
