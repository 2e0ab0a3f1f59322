"""Bookend single-qubit unitary parametrization and the correction-parameter type."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CONTROL_ONLY = "control-only"
BOTH = "both"
MODE_SIZES = {CONTROL_ONLY: 6, BOTH: 12}


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y <= -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def unitary_from_params(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit unitary

    ``[[cos(t/2), -e^{i lam} sin(t/2)], [e^{i phi} sin(t/2), e^{i(lam+phi)} cos(t/2)]]``.
    """
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (lam + phi)) * c],
        ],
        dtype=complex,
    )


def ptm_from_params(theta: float, phi: float, lam: float) -> np.ndarray:
    """PTM of ``unitary_from_params`` built directly as the rotation Rz(phi) Ry(theta) Rz(lam)."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    cl, sl = math.cos(lam), math.sin(lam)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, cp * ct * cl - sp * sl, -cp * ct * sl - sp * cl, cp * st],
            [0.0, sp * ct * cl + cp * sl, cp * cl - sp * ct * sl, sp * st],
            [0.0, -st * cl, st * sl, ct],
        ]
    )


def params_from_unitary(U: np.ndarray) -> tuple:
    """Angles ``(theta, phi, lam)`` with ``unitary_from_params`` equal to ``U`` up to global phase."""
    U = np.asarray(U, dtype=complex)
    a, b = abs(U[0, 0]), abs(U[1, 0])
    theta = 2.0 * math.atan2(b, a)
    if a > 1e-12:
        V = U * (abs(U[0, 0]) / U[0, 0])
        phi = float(np.angle(V[1, 0])) if b > 1e-12 else 0.0
        lam = float(np.angle(V[1, 1])) - phi
    else:
        V = U * (abs(U[1, 0]) / U[1, 0])
        phi, lam = 0.0, float(np.angle(-V[0, 1]))
    return float(theta), float(wrap_angle(phi)), float(wrap_angle(lam))


def random_rotation_params(rng: np.random.Generator, lo: float, hi: float) -> tuple:
    """Angles of a rotation by a uniform angle in [lo, hi] about a uniformly random axis."""
    eps = rng.uniform(lo, hi)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    U = math.cos(eps / 2) * np.eye(2) - 1j * math.sin(eps / 2) * (
        n[0] * np.array([[0, 1], [1, 0]]) + n[1] * np.array([[0, -1j], [1j, 0]]) + n[2] * np.diag([1, -1])
    )
    return params_from_unitary(U)


def inverse_params(theta: float, phi: float, lam: float) -> tuple:
    """Angles of ``unitary_from_params(theta, phi, lam)^dagger``."""
    return (-theta, -lam, -phi)


def mode_for_size(n: int) -> str:
    for mode, size in MODE_SIZES.items():
        if size == n:
            return mode
    raise ValueError(f"expected 6 or 12 angles, got {n}")


@dataclass(frozen=True)
class CorrectionParams:
    """Angles ``(theta_i, phi_i, lambda_i)`` of the corrective unitaries.

    Control-only mode holds ``(U1, U2)`` where U1 acts after the CNOT and U2
    before it, both on the control qubit. Both-qubits mode holds
    ``(U1, U2, U3, U4)`` with ``U1 (x) U2`` after and ``U3 (x) U4`` before.
    """

    mode: str
    angles: tuple

    def __post_init__(self):
        if self.mode not in MODE_SIZES:
            raise ValueError(f"unknown mode {self.mode!r}; use one of {sorted(MODE_SIZES)}")
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != MODE_SIZES[self.mode]:
            raise ValueError(
                f"mode {self.mode!r} needs {MODE_SIZES[self.mode]} angles, got {len(angles)}"
            )
        object.__setattr__(self, "angles", angles)

    @classmethod
    def zeros(cls, mode: str = CONTROL_ONLY) -> "CorrectionParams":
        return cls(mode, (0.0,) * MODE_SIZES[mode])

    @classmethod
    def from_vector(cls, vec: Sequence[float], mode: str | None = None) -> "CorrectionParams":
        vec = tuple(float(v) for v in vec)
        return cls(mode or mode_for_size(len(vec)), vec)

    @property
    def size(self) -> int:
        return len(self.angles)

    def vector(self) -> np.ndarray:
        return np.array(self.angles)

    def canonical(self) -> "CorrectionParams":
        return CorrectionParams(self.mode, tuple(wrap_angle(np.array(self.angles))))

    def triples(self) -> list:
        a = self.angles
        return [a[i : i + 3] for i in range(0, len(a), 3)]

    def unitaries(self) -> list:
        return [unitary_from_params(*t) for t in self.triples()]

    def table_row(self, tag: str = "") -> str:
        """Markdown row at three-decimal precision."""
        cells = [tag] + [f"{a:.3f}" for a in self.canonical().angles]
        return "| " + " | ".join(cells) + " |"

    def to_dict(self) -> dict:
        return {"mode": self.mode, "angles": list(self.angles)}

    @classmethod
    def from_dict(cls, data: dict) -> "CorrectionParams":
        return cls(data["mode"], tuple(data["angles"]))


def table_header(mode: str) -> str:
    names = []
    for k in range(1, MODE_SIZES[mode] // 3 + 1):
        names += [f"theta_{k}", f"phi_{k}", f"lambda_{k}"]
    head = "| cycle | " + " | ".join(names) + " |"
    rule = "|" + "---|" * (len(names) + 1)
    return head + "\n" + rule
