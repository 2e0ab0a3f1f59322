"""Synthetic two-qubit device whose noise drifts across calibration cycles.

The device is the only source of simulated measurement data. Its native CNOT
is an ideal CNOT dressed by local "bookend" unitaries (correctable by the
corrective gates), a ZX cross-resonance over-rotation and a two-qubit
depolarizing floor (neither of which local corrections can remove).
"""
from __future__ import annotations

import functools
import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import pauli
from .gateset import GATE_NAMES, OUTCOMES, GateSet, circuit_str
from .params import (
    CONTROL_ONLY,
    CorrectionParams,
    inverse_params,
    mode_for_size,
    unitary_from_params,
    wrap_angle,
)

_ID2 = np.eye(2, dtype=complex)


def rx(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * _ID2 - 1j * np.sin(angle / 2) * pauli.SIGMA[1]


def ry(angle: float) -> np.ndarray:
    return np.cos(angle / 2) * _ID2 - 1j * np.sin(angle / 2) * pauli.SIGMA[2]


def zx_unitary(angle: float) -> np.ndarray:
    """``exp(-i angle/2 Z (x) X)``."""
    zx = np.kron(pauli.SIGMA[3], pauli.SIGMA[1])
    return np.cos(angle / 2) * np.eye(4) - 1j * np.sin(angle / 2) * zx


def local_ptm(u_control: np.ndarray | None = None, u_target: np.ndarray | None = None) -> np.ndarray:
    """PTM of ``u_control (x) u_target`` (``None`` means identity)."""
    a = pauli.ptm_1q(u_control) if u_control is not None else np.eye(4)
    b = pauli.ptm_1q(u_target) if u_target is not None else np.eye(4)
    return np.kron(a, b)


@dataclass(frozen=True)
class NoiseConfig:
    """Noise parameters of the native gateset at one calibration cycle.

    ``coherent_pre`` holds 6 angles (post/pre unitaries on the control) or 12
    angles (post pair then pre pair), laid out like :class:`CorrectionParams`.
    """

    coherent_pre: tuple = (0.0,) * 6
    cross_resonance_angle: float = 0.0
    depolarizing_2q: float = 0.0
    depolarizing_1q: float = 0.0
    single_qubit_overrotation: float = 0.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.coherent_pre)
        mode_for_size(len(angles))
        object.__setattr__(self, "coherent_pre", angles)
        for name in ("depolarizing_2q", "depolarizing_1q"):
            q = getattr(self, name)
            if not 0.0 <= q <= 0.25:
                raise ValueError(f"{name}={q} outside [0, 0.25]")
        for a in angles + (self.cross_resonance_angle, self.single_qubit_overrotation):
            if not -np.pi < a <= np.pi:
                raise ValueError(f"angle {a} outside (-pi, pi]")

    @property
    def coherent_params(self) -> CorrectionParams:
        return CorrectionParams.from_vector(self.coherent_pre)

    def correcting_params(self) -> CorrectionParams:
        """Corrections that exactly undo the bookend unitaries."""
        inv = [inverse_params(*t) for t in self.coherent_params.triples()]
        return CorrectionParams.from_vector([a for t in inv for a in t])


@dataclass(frozen=True)
class DriftConfig:
    per_cycle_sigma: float = 0.0
    depolarizing_jitter: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.per_cycle_sigma < 0 or self.depolarizing_jitter < 0:
            raise ValueError("drift sigmas must be non-negative")


@dataclass(frozen=True)
class SpamConfig:
    """Depolarized preparation and asymmetric per-qubit readout flips."""

    prep_depolarizing: float = 0.0
    readout_p01: float = 0.0  # P(read 1 | prepared 0)
    readout_p10: float = 0.0  # P(read 0 | prepared 1)

    def __post_init__(self):
        for name in ("prep_depolarizing", "readout_p01", "readout_p10"):
            if not 0.0 <= getattr(self, name) <= 0.25:
                raise ValueError(f"{name} outside [0, 0.25]")


# ---------------------------------------------------------------------------
# gate constructions
# ---------------------------------------------------------------------------


def _bookend_ptms(angles: Sequence[float]) -> tuple:
    """(post, pre) local PTMs for a 6- or 12-angle layout."""
    us = CorrectionParams.from_vector(angles).unitaries()
    if len(us) == 2:
        return local_ptm(us[0]), local_ptm(us[1])
    return local_ptm(us[0], us[1]), local_ptm(us[2], us[3])


def noisy_cnot(config: NoiseConfig) -> np.ndarray:
    """Native CNOT PTM: depolarizing o post-bookend o ZX error o CNOT o pre-bookend."""
    post, pre = _bookend_ptms(config.coherent_pre)
    zx = pauli.ptm_from_unitary(zx_unitary(config.cross_resonance_angle))
    depol = pauli.depolarizing_ptm(config.depolarizing_2q, 2)
    return depol @ post @ zx @ pauli.CNOT_PTM @ pre


def noisy_local_gate(u: np.ndarray, qubit: int, config: NoiseConfig) -> np.ndarray:
    """A single-qubit gate on ``qubit`` followed by local depolarizing."""
    g = local_ptm(u, None) if qubit == 0 else local_ptm(None, u)
    return pauli.local_depolarizing_ptm(config.depolarizing_1q, qubit) @ g


def noisy_u3(theta: float, phi: float, lam: float, qubit: int, config: NoiseConfig) -> np.ndarray:
    """Implemented corrective unitary: fractional over-rotation of theta plus depolarizing."""
    scale = 1.0 + config.single_qubit_overrotation / (np.pi / 2)
    return noisy_local_gate(unitary_from_params(theta * scale, phi, lam), qubit, config)


def build_gates(config: NoiseConfig) -> dict:
    eps = config.single_qubit_overrotation
    q1 = config.depolarizing_1q
    gates = {
        "Gii": pauli.local_depolarizing_ptm(q1, 0) @ pauli.local_depolarizing_ptm(q1, 1),
        "Gxi": noisy_local_gate(rx(np.pi / 2 + eps), 0, config),
        "Gix": noisy_local_gate(rx(np.pi / 2 + eps), 1, config),
        "Gyi": noisy_local_gate(ry(np.pi / 2 + eps), 0, config),
        "Giy": noisy_local_gate(ry(np.pi / 2 + eps), 1, config),
        "Gcx": noisy_cnot(config),
    }
    for g in gates.values():
        g.setflags(write=False)
    return gates


def spam_vectors(spam: SpamConfig) -> tuple:
    """(rho, effects) Pauli vectors for the configured SPAM errors."""
    rho = (1 - spam.prep_depolarizing) * pauli.computational_state("00")
    rho = rho + spam.prep_depolarizing * pauli.state_vector(np.eye(4) / 4)
    p01, p10 = spam.readout_p01, spam.readout_p10
    e0 = np.diag([1 - p01, p10]).astype(complex)
    e1 = np.diag([p01, 1 - p10]).astype(complex)
    single = {"0": e0, "1": e1}
    effects = {o: pauli.effect_vector(np.kron(single[o[0]], single[o[1]])) for o in OUTCOMES}
    return rho, effects


def ideal_gateset() -> GateSet:
    rho, effects = spam_vectors(SpamConfig())
    return GateSet(rho=rho, effects=effects, gates=build_gates(NoiseConfig()), meta={"ideal": True})


# ---------------------------------------------------------------------------
# drifting model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftingDeviceModel:
    base: NoiseConfig = field(default_factory=NoiseConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    spam: SpamConfig = field(default_factory=SpamConfig)

    gateset_names = GATE_NAMES

    def config_at_cycle(self, cycle: int) -> NoiseConfig:
        return config_at_cycle(self, cycle)

    def gateset_at_cycle(self, cycle: int) -> GateSet:
        return gateset_at_cycle(self, cycle)

    def corrected_cnot(self, cycle: int, params: CorrectionParams | None) -> np.ndarray:
        return corrected_cnot(self, cycle, params)


def _walk(model: DriftingDeviceModel, cycle: int) -> np.ndarray:
    n = len(model.base.coherent_pre) + 1
    total = np.zeros(n)
    if model.drift.per_cycle_sigma == 0:
        return total
    for k in range(1, cycle + 1):
        rng = np.random.default_rng([model.drift.rng_seed, 0xD21F7, k])
        total += rng.normal(0.0, model.drift.per_cycle_sigma, size=n)
    return total


@functools.lru_cache(maxsize=512)
def config_at_cycle(model: DriftingDeviceModel, cycle: int) -> NoiseConfig:
    """Base config moved by a seeded Gaussian walk of ``cycle`` steps.

    Coherent angles (bookends and the ZX angle) accumulate the walk; the
    depolarizing strengths get independent multiplicative jitter per cycle.
    """
    if cycle < 0:
        raise ValueError("cycle must be >= 0")
    base = model.base
    if cycle == 0:
        return base
    offsets = _walk(model, cycle)
    angles = wrap_angle(np.array(base.coherent_pre) + offsets[:-1])
    zx = wrap_angle(base.cross_resonance_angle + offsets[-1])
    q2, q1 = base.depolarizing_2q, base.depolarizing_1q
    if model.drift.depolarizing_jitter > 0:
        rng = np.random.default_rng([model.drift.rng_seed, 0x717E, cycle])
        j = model.drift.depolarizing_jitter
        q2, q1 = np.clip(np.array([q2, q1]) * np.exp(j * rng.normal(size=2)), 0.0, 0.25)
    return replace(
        base,
        coherent_pre=tuple(angles),
        cross_resonance_angle=zx,
        depolarizing_2q=float(q2),
        depolarizing_1q=float(q1),
    )


@functools.lru_cache(maxsize=512)
def gateset_at_cycle(model: DriftingDeviceModel, cycle: int) -> GateSet:
    config = config_at_cycle(model, cycle)
    rho, effects = spam_vectors(model.spam)
    return GateSet(rho=rho, effects=effects, gates=build_gates(config), meta={"cycle": cycle})


@functools.lru_cache(maxsize=4096)
def corrected_cnot(model: DriftingDeviceModel, cycle: int, params: CorrectionParams | None) -> np.ndarray:
    """Native CNOT at ``cycle`` wrapped by implemented (imperfect) corrective gates."""
    native = gateset_at_cycle(model, cycle).gates["Gcx"]
    if params is None:
        return native
    config = config_at_cycle(model, cycle)
    t = params.triples()
    if params.mode == CONTROL_ONLY:
        post = noisy_u3(*t[0], 0, config)
        pre = noisy_u3(*t[1], 0, config)
    else:
        post = noisy_u3(*t[0], 0, config) @ noisy_u3(*t[1], 1, config)
        pre = noisy_u3(*t[2], 0, config) @ noisy_u3(*t[3], 1, config)
    out = post @ native @ pre
    out.setflags(write=False)
    return out


def _substream(model: DriftingDeviceModel, cycle: int, circuit: Sequence[str], stream: int):
    key = zlib.crc32(circuit_str(circuit).encode())
    return np.random.default_rng([model.drift.rng_seed, cycle, key, stream])


def exact_probabilities(model: DriftingDeviceModel, cycle: int, circuit: Sequence[str]) -> dict:
    gs = gateset_at_cycle(model, cycle)
    return dict(zip(gs.outcomes, gs.probabilities(circuit)))


def simulate_counts(
    model: DriftingDeviceModel,
    cycle: int,
    circuit: Sequence[str],
    shots: int,
    stream: int = 0,
) -> dict:
    """Multinomial outcome counts for ``circuit`` run ``shots`` times.

    The RNG substream depends only on (drift seed, cycle, circuit, stream), so
    calls are reproducible and independent of evaluation order.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    gs = gateset_at_cycle(model, cycle)
    probs = np.clip(gs.probabilities(circuit), 0.0, None)
    probs = probs / probs.sum()
    counts = _substream(model, cycle, circuit, stream).multinomial(shots, probs)
    return dict(zip(gs.outcomes, (int(c) for c in counts)))
