"""Seed extraction: bookend angles that pull an estimated CNOT closest to ideal."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .nelder_mead import NMConfig, minimize
from .params import BOTH, CONTROL_ONLY, MODE_SIZES, CorrectionParams, ptm_from_params
from .pauli import CNOT_PTM, average_gate_infidelity, num_qubits_of

_I4 = np.eye(4)

# restarts stop early; the winner is polished at the tight tolerance
SEED_NM = NMConfig(
    init_step=0.5,
    no_improve_limit=200,
    max_iterations=4000,
    shrink_enabled=True,
    xatol=1e-5,
    fatol=1e-12,
)
POLISH_NM = NMConfig(
    init_step=0.01,
    no_improve_limit=200,
    max_iterations=4000,
    shrink_enabled=True,
    xatol=1e-10,
    fatol=1e-24,
)


def _local_pair(angles, with_target: bool) -> tuple:
    a = [float(v) for v in angles]
    if with_target:
        post = np.kron(ptm_from_params(*a[0:3]), ptm_from_params(*a[3:6]))
        pre = np.kron(ptm_from_params(*a[6:9]), ptm_from_params(*a[9:12]))
    else:
        post = np.kron(ptm_from_params(*a[0:3]), _I4)
        pre = np.kron(ptm_from_params(*a[3:6]), _I4)
    return post, pre


def corrected_ptm_from_vector(G_bar: np.ndarray, angles) -> np.ndarray:
    n = len(angles)
    if n not in (6, 12):
        raise ValueError(f"expected 6 or 12 angles, got {n}")
    post, pre = _local_pair(angles, n == 12)
    return post @ G_bar @ pre


def corrected_ptm(G_bar: np.ndarray, params: CorrectionParams) -> np.ndarray:
    """Wrap ``G_bar`` with the bookend unitaries in matrix order: the first
    pair multiplies on the left (acts last), the second pair on the right."""
    G_bar = np.asarray(G_bar, dtype=float)
    if num_qubits_of(G_bar) != 2:
        raise ValueError("corrected_ptm expects a two-qubit PTM")
    return corrected_ptm_from_vector(G_bar, params.angles)


def seed_objective(G_bar: np.ndarray, target: np.ndarray = CNOT_PTM):
    """Squared Frobenius distance as a function of the angle vector."""
    G_bar = np.asarray(G_bar, dtype=float)

    def f(x):
        D = corrected_ptm_from_vector(G_bar, x) - target
        return float(np.vdot(D, D))

    return f


@dataclass(frozen=True)
class SeedResult:
    params: CorrectionParams
    residual_distance: float
    baseline_distance: float
    theoretical_min_infidelity: float
    baseline_infidelity: float = float("nan")
    evaluations: int = 0

    def to_dict(self, tag: str = "seed") -> dict:
        return {
            "params": self.params.canonical().to_dict(),
            "residual_distance": self.residual_distance,
            "baseline_distance": self.baseline_distance,
            "theoretical_min_infidelity": self.theoretical_min_infidelity,
            "baseline_infidelity": self.baseline_infidelity,
            "evaluations": self.evaluations,
            "table_row": self.params.table_row(tag),
        }

    def to_json(self, tag: str = "seed") -> str:
        return json.dumps(self.to_dict(tag), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SeedResult":
        return cls(
            params=CorrectionParams.from_dict(data["params"]),
            residual_distance=float(data["residual_distance"]),
            baseline_distance=float(data["baseline_distance"]),
            theoretical_min_infidelity=float(data["theoretical_min_infidelity"]),
            baseline_infidelity=float(data.get("baseline_infidelity", "nan")),
            evaluations=int(data.get("evaluations", 0)),
        )


def find_seed(
    G_bar: np.ndarray,
    mode: str = CONTROL_ONLY,
    restarts: int = 8,
    rng_seed: int = 0,
    config: NMConfig = SEED_NM,
    polish: NMConfig = POLISH_NM,
) -> SeedResult:
    """Multi-start Nelder-Mead on the squared distance to the ideal CNOT.

    Start 0 is the zero vector, the rest are uniform draws on (-pi, pi].
    The overall winner gets one extra polish run from a fresh simplex.
    """
    if mode not in MODE_SIZES:
        raise ValueError(f"unknown mode {mode!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    G_bar = np.asarray(G_bar, dtype=float)
    if num_qubits_of(G_bar) != 2:
        raise ValueError("find_seed expects a two-qubit PTM")
    d = MODE_SIZES[mode]
    f = seed_objective(G_bar)
    rng = np.random.default_rng(rng_seed)
    starts = [np.zeros(d)] + [rng.uniform(-np.pi, np.pi, d) for _ in range(restarts - 1)]

    best_x, best_f, evals = np.zeros(d), f(np.zeros(d)), 1
    baseline = np.sqrt(best_f)
    for x0 in starts:
        res = minimize(f, x0, config)
        evals += res.evaluations
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    pol = minimize(f, best_x, polish)
    evals += pol.evaluations
    if pol.fun < best_f:
        best_x, best_f = pol.x, pol.fun

    params = CorrectionParams(mode, tuple(best_x)).canonical()
    best_ptm = corrected_ptm(G_bar, params)
    return SeedResult(
        params=params,
        residual_distance=float(np.sqrt(max(best_f, 0.0))),
        baseline_distance=float(baseline),
        theoretical_min_infidelity=average_gate_infidelity(best_ptm, CNOT_PTM),
        baseline_infidelity=average_gate_infidelity(G_bar, CNOT_PTM),
        evaluations=evals,
    )


__all__ = [
    "BOTH",
    "CONTROL_ONLY",
    "POLISH_NM",
    "SEED_NM",
    "SeedResult",
    "corrected_ptm",
    "corrected_ptm_from_vector",
    "find_seed",
    "seed_objective",
]
