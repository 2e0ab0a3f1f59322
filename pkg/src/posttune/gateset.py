"""Gate set container shared by the device model and the GST engine."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pauli import num_qubits_of, ptm_from_dict, ptm_to_dict

Circuit = tuple  # tuple of gate names, in time order

OUTCOMES = ("00", "01", "10", "11")
GATE_NAMES = ("Gii", "Gxi", "Gix", "Gyi", "Giy", "Gcx")

EMPTY_CIRCUIT_STR = "{}"


def circuit_str(circuit: Sequence[str]) -> str:
    """``("Gxi", "Gcx") -> "Gxi.Gcx"``; the empty circuit is ``"{}"``."""
    return ".".join(circuit) if len(circuit) else EMPTY_CIRCUIT_STR


def parse_circuit(text: str) -> Circuit:
    text = text.strip()
    if text in (EMPTY_CIRCUIT_STR, ""):
        return ()
    return tuple(text.split("."))


@dataclass(frozen=True)
class GateSet:
    """Preparation vector, measurement effects and named gate PTMs.

    ``effects`` maps outcome labels to dual vectors; ``gates`` maps gate names
    to PTMs. All arrays are treated as read-only.
    """

    rho: np.ndarray
    effects: Mapping[str, np.ndarray]
    gates: Mapping[str, np.ndarray]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def num_qubits(self) -> int:
        return num_qubits_of(self.rho)

    @property
    def outcomes(self) -> tuple:
        return tuple(self.effects)

    def effect_matrix(self) -> np.ndarray:
        return np.array([self.effects[o] for o in self.effects])

    def circuit_ptm(self, circuit: Iterable[str]) -> np.ndarray:
        out = np.eye(len(self.rho))
        for name in circuit:
            try:
                out = self.gates[name] @ out
            except KeyError:
                raise KeyError(f"unknown gate {name!r}; gateset has {sorted(self.gates)}") from None
        return out

    def final_state(self, circuit: Iterable[str]) -> np.ndarray:
        v = np.asarray(self.rho, dtype=float)
        for name in circuit:
            try:
                v = self.gates[name] @ v
            except KeyError:
                raise KeyError(f"unknown gate {name!r}; gateset has {sorted(self.gates)}") from None
        return v

    def probabilities(self, circuit: Iterable[str]) -> np.ndarray:
        """Raw (unclamped) outcome probabilities in ``outcomes`` order."""
        return self.effect_matrix() @ self.final_state(circuit)

    def gauge_transform(self, M: np.ndarray) -> "GateSet":
        """``{M G M^-1, M rho, E M^-1}``; leaves every probability unchanged."""
        Minv = np.linalg.inv(M)
        return GateSet(
            rho=M @ self.rho,
            effects={o: e @ Minv for o, e in self.effects.items()},
            gates={g: M @ G @ Minv for g, G in self.gates.items()},
            meta=dict(self.meta),
        )

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "rho": np.asarray(self.rho, dtype=float).tolist(),
            "effects": {o: np.asarray(e, dtype=float).tolist() for o, e in self.effects.items()},
            "gates": {g: ptm_to_dict(G) for g, G in self.gates.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GateSet":
        return cls(
            rho=np.array(data["rho"], dtype=float),
            effects={o: np.array(e, dtype=float) for o, e in data["effects"].items()},
            gates={g: ptm_from_dict(G) for g, G in data["gates"].items()},
            meta=dict(data.get("meta", {})),
        )
