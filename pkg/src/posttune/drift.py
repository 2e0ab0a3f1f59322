"""Diamond-distance bounds and drift tracking of corrective channels.

Distances use the halved convention, so two channels are at most 1 apart.
The lower bound is certified by an explicit input state; the upper bound by a
feasible point of the dual semidefinite program (no solver needed).
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .params import CorrectionParams
from .pauli import CNOT_PTM, choi_from_ptm, is_cptp, num_qubits_of
from .seed import corrected_ptm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiamondBounds:
    lower: float
    upper: float
    num_samples: int

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper + 1e-12:
            raise ValueError(f"inconsistent bounds {self.lower} > {self.upper}")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "num_samples": self.num_samples}


def _choi_unnormalized(R: np.ndarray) -> np.ndarray:
    """``sum_ab |a><b| (x) Phi(|a><b|)``, input copy first."""
    d = 2 ** num_qubits_of(R)
    return d * choi_from_ptm(R)


def _halved_trace_norms(K4: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``0.5 || (A (x) I) K (A (x) I)^dag ||_1`` for a stack of input amplitude matrices ``A``."""
    d = K4.shape[0]
    out = np.einsum("sca,aobp,sdb->scodp", A, K4, A.conj()).reshape(len(A), d * d, d * d)
    return 0.5 * np.abs(np.linalg.eigvalsh(out)).sum(axis=1)


def _random_inputs(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    A = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return A / np.linalg.norm(A, axis=(1, 2), keepdims=True)


def _see_saw(K4: np.ndarray, A: np.ndarray, steps: int = 200, tol: float = 1e-13) -> float:
    """Alternate the optimal measurement for a fixed input with the optimal
    input for a fixed measurement; the value never decreases."""
    d = K4.shape[0]
    best = 0.0
    for _ in range(steps):
        D = np.einsum("ca,aobp,db->codp", A, K4, A.conj()).reshape(d * d, d * d)
        w, V = np.linalg.eigh(D)
        val = 0.5 * np.abs(w).sum()
        if val < best + tol:
            best = max(best, val)
            break
        best = val
        O = (V * np.sign(w)) @ V.conj().T
        O4 = O.reshape(d, d, d, d)
        H = np.einsum("wxyz,azcx->wcya", O4, K4).reshape(d * d, d * d)
        H = 0.5 * (H + H.conj().T)
        _, U = np.linalg.eigh(H)
        A = U[:, -1].reshape(d, d)
    return best


def diamond_bounds(
    Phi1: np.ndarray,
    Phi2: np.ndarray,
    num_samples: int = 200,
    rng_seed: int = 0,
    check_cptp: bool = True,
) -> DiamondBounds:
    """Certified ``lower <= d_diamond <= upper`` for ``0.5 ||Phi1 - Phi2||_diamond``."""
    Phi1, Phi2 = np.asarray(Phi1, dtype=float), np.asarray(Phi2, dtype=float)
    if Phi1.shape != Phi2.shape:
        raise ValueError(f"dimension mismatch {Phi1.shape} vs {Phi2.shape}")
    if check_cptp and not (is_cptp(Phi1, 1e-8) and is_cptp(Phi2, 1e-8)):
        log.warning("diamond_bounds called on a non-CPTP map")
    d = 2 ** num_qubits_of(Phi1)
    K = _choi_unnormalized(Phi1) - _choi_unnormalized(Phi2)
    K = 0.5 * (K + K.conj().T)
    if np.max(np.abs(K)) < 1e-15:
        return DiamondBounds(0.0, 0.0, num_samples)
    K4 = K.reshape(d, d, d, d)

    # upper: Y0 = Y1 = |K| is feasible for the dual program
    w, V = np.linalg.eigh(K)
    absK = ((V * np.abs(w)) @ V.conj().T).reshape(d, d, d, d)
    tr_out = np.einsum("aobo->ab", absK)
    upper = 0.5 * float(np.linalg.eigvalsh(tr_out)[-1])
    upper = min(upper, 0.5 * np.abs(w).sum(), 1.0)

    # lower: maximally entangled input, random inputs, then see-saw from the best
    rng = np.random.default_rng(rng_seed)
    A = np.concatenate([np.eye(d)[None] / np.sqrt(d), _random_inputs(rng, num_samples, d)])
    vals = _halved_trace_norms(K4, A)
    order = np.argsort(vals)[::-1][:3]
    lower = float(vals[order[0]])
    for i in order:
        lower = max(lower, _see_saw(K4, A[i]))
    lower = min(lower, upper)
    return DiamondBounds(float(lower), float(upper), num_samples)


def corrective_channel(params: CorrectionParams) -> np.ndarray:
    """The corrected CNOT as if its three gates were perfect."""
    return corrected_ptm(CNOT_PTM, params)


@dataclass
class DriftReport:
    tags: list
    to_ideal: list  # DiamondBounds per entry
    to_seed: list
    to_previous: list  # None for the first entry
    summary: dict = field(default_factory=dict)

    def rows(self) -> list:
        out = []
        for i, tag in enumerate(self.tags):
            prev = self.to_previous[i]
            out.append(
                {
                    "tag": tag,
                    "ideal_lower": self.to_ideal[i].lower,
                    "ideal_upper": self.to_ideal[i].upper,
                    "seed_lower": self.to_seed[i].lower,
                    "seed_upper": self.to_seed[i].upper,
                    "prev_lower": None if prev is None else prev.lower,
                    "prev_upper": None if prev is None else prev.upper,
                }
            )
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else (f"{v:.8g}" if isinstance(v, float) else v)) for k, v in r.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": self.rows(), "summary": self.summary}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def drift_report(
    history: Sequence[tuple],
    gst_seed: CorrectionParams,
    num_samples: int = 200,
    rng_seed: int = 0,
) -> DriftReport:
    """``history`` is a chronological list of ``(tag, CorrectionParams)``.

    Summary statistics use the midpoint of each bracket.
    """
    if len(history) == 0:
        raise ValueError("empty history")
    if len(history) < 2:
        raise ValueError("drift report needs at least two entries")
    seed_ch = corrective_channel(gst_seed)
    chans = [corrective_channel(p) for _, p in history]
    to_ideal = [diamond_bounds(c, CNOT_PTM, num_samples, rng_seed) for c in chans]
    to_seed = [diamond_bounds(c, seed_ch, num_samples, rng_seed) for c in chans]
    to_prev = [None] + [diamond_bounds(chans[i], chans[i - 1], num_samples, rng_seed) for i in range(1, len(chans))]
    seed_mid = np.array([b.mid for b in to_seed])
    step_mid = np.array([b.mid for b in to_prev[1:]])
    summary = {
        "mean_to_seed": float(seed_mid.mean()),
        "var_to_seed": float(seed_mid.var()),
        "mean_step": float(step_mid.mean()),
        "mean_to_ideal": float(np.mean([b.mid for b in to_ideal])),
        "max_bracket_width": float(
            max(b.upper - b.lower for b in to_ideal + to_seed + to_prev[1:])
        ),
    }
    return DriftReport([t for t, _ in history], to_ideal, to_seed, to_prev, summary)
