"""Gate set tomography: experiment design, data collection, linear inversion.

The estimator is linear-inversion GST (LGST) with the gauge frame fixed by the
target gateset, followed by a projection of every gate onto the CPTP set.
Long-germ records are collected to mirror the full experiment design but are
only used by :func:`germ_decay`, a diagnostic.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import pauli
from .device import DriftingDeviceModel, exact_probabilities, ideal_gateset, simulate_counts
from .gateset import GATE_NAMES, OUTCOMES, Circuit, GateSet, circuit_str, parse_circuit

log = logging.getLogger(__name__)

GRAM_COND_LIMIT = 1e6


class InformationallyIncompleteError(ValueError):
    """Fiducials do not span the Hilbert-Schmidt space."""


@dataclass(frozen=True)
class FiducialSet:
    prep: tuple
    meas: tuple


@dataclass(frozen=True)
class GermSet:
    germs: tuple
    max_L: int = 8

    def __post_init__(self):
        if not self.germs:
            raise ValueError("germ set is empty")


def _single_qubit_fiducials(gx: str, gy: str) -> list:
    return [(), (gx,), (gy,), (gx, gx)]


def default_fiducials() -> FiducialSet:
    """16 preparation and 16 measurement fiducials: {{}, X, Y, XX} on each qubit."""
    q0 = _single_qubit_fiducials("Gxi", "Gyi")
    q1 = _single_qubit_fiducials("Gix", "Giy")
    fids = tuple(a + b for a, b in itertools.product(q0, q1))
    return FiducialSet(prep=fids, meas=fids)


def default_germs() -> GermSet:
    singles = tuple((g,) for g in GATE_NAMES)
    composites = (
        ("Gxi", "Gyi"),
        ("Gix", "Giy"),
        ("Gxi", "Gcx"),
        ("Giy", "Gcx"),
        ("Gxi", "Giy", "Gcx"),
    )
    return GermSet(germs=singles + composites, max_L=8)


DEFAULT_LS = (0, 1, 2, 4, 8)
# fiducial pairs kept for amplified records (germ powers other than a single gate)
DEFAULT_REDUCED_PAIRS = ((0, 0), (5, 5), (10, 10), (15, 15), (1, 4), (6, 9))


def sequence_index(
    fiducials: FiducialSet,
    germs: GermSet,
    Ls: Sequence[int],
    reduced_pairs: Sequence[tuple] | None = None,
) -> dict:
    """Map ``(i, j, k, L) -> circuit`` for prep fiducial i, germ j, meas fiducial k.

    ``L = 0`` gives the bare fiducial pair (germ index ``j`` is then ``-1``).
    When ``reduced_pairs`` is given, only those ``(i, k)`` pairs are used for
    amplified records, i.e. every record except ``L = 0`` and single-gate
    germs at ``L = 1``.
    """
    Ls = list(Ls)
    if not Ls or Ls != sorted(Ls) or len(set(Ls)) != len(Ls):
        raise ValueError("Ls must be non-empty, strictly ascending")
    if Ls[0] < 0:
        raise ValueError("germ powers must be >= 0")
    full = list(itertools.product(range(len(fiducials.prep)), range(len(fiducials.meas))))
    index = {}
    for L in Ls:
        germ_items = [(-1, ())] if L == 0 else list(enumerate(germs.germs))
        for j, germ in germ_items:
            core = L <= 1 and len(germ) <= 1
            pairs = full if (core or reduced_pairs is None) else reduced_pairs
            for i, k in pairs:
                index[(i, j, k, L)] = tuple(fiducials.prep[i]) + tuple(germ) * L + tuple(fiducials.meas[k])
    return index


def generate_sequences(
    fiducials: FiducialSet,
    germs: GermSet,
    Ls: Sequence[int],
    reduced_pairs: Sequence[tuple] | None = None,
) -> list:
    """Deduplicated circuit list, ordered by first appearance in (L, j, i, k) order."""
    index = sequence_index(fiducials, germs, Ls, reduced_pairs)
    return list(dict.fromkeys(index.values()))


def default_design() -> tuple:
    fids, germs = default_fiducials(), default_germs()
    index = sequence_index(fids, germs, DEFAULT_LS, DEFAULT_REDUCED_PAIRS)
    return fids, germs, index


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


@dataclass
class GSTDataset:
    """Outcome counts per circuit. Exact-mode datasets hold expected (float) counts."""

    outcomes: tuple = OUTCOMES
    counts: dict = field(default_factory=dict)
    shots: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.counts)

    def add(self, circuit: Circuit, counts: Sequence[float], shots: float) -> None:
        counts = np.asarray(counts, dtype=float)
        if counts.shape != (len(self.outcomes),):
            raise ValueError("one count per outcome expected")
        self.counts[tuple(circuit)] = counts
        self.shots[tuple(circuit)] = shots

    def frequencies(self, circuit: Circuit) -> np.ndarray:
        circuit = tuple(circuit)
        try:
            return self.counts[circuit] / self.shots[circuit]
        except KeyError:
            raise KeyError(f"circuit {circuit_str(circuit)} missing from dataset") from None

    def circuits(self) -> list:
        return list(self.counts)

    def to_text(self) -> str:
        lines = [
            "## posttune GST dataset",
            "## columns = circuit, " + ", ".join(self.outcomes) + ", shots",
        ]
        for c, n in self.counts.items():
            vals = " ".join(_fmt(x) for x in n)
            lines.append(f"{circuit_str(c)}  {vals}  {_fmt(self.shots[c])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GSTDataset":
        ds = cls()
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("## columns"):
                cols = [c.strip() for c in line.split("=", 1)[1].split(",")]
                ds.outcomes = tuple(cols[1:-1])
                continue
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            ds.add(parse_circuit(parts[0]), [float(x) for x in parts[1:-1]], float(parts[-1]))
        return ds

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "GSTDataset":
        return cls.from_text(Path(path).read_text())


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def collect(
    model: DriftingDeviceModel,
    cycle: int,
    circuits: Iterable[Circuit],
    shots: int,
    exact: bool = False,
    index: dict | None = None,
) -> GSTDataset:
    """Run every circuit on the device; ``exact`` stores expected counts instead of samples."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    ds = GSTDataset(index=dict(index or {}))
    for c in circuits:
        if exact:
            probs = exact_probabilities(model, cycle, c)
            ds.add(c, [probs[o] * shots for o in ds.outcomes], shots)
        else:
            counts = simulate_counts(model, cycle, c, shots)
            ds.add(c, [counts[o] for o in ds.outcomes], shots)
    return ds


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


def _project_unit_trace_psd(J: np.ndarray) -> np.ndarray:
    """Euclidean projection of a Hermitian matrix onto unit-trace PSD matrices.

    Eigenvalues are shifted down by a common offset and clipped at zero
    (projection of the spectrum onto the probability simplex).
    """
    J = (J + J.conj().T) / 2
    w, V = np.linalg.eigh(J)
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(u) + 1)
    r = np.nonzero(u - css / k > 0)[0][-1]
    w = np.clip(w - css[r] / (r + 1), 0.0, None)
    return (V * w) @ V.conj().T


def project_cptp(
    R: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200,
    return_info: bool = False,
):
    """Alternate between the CP set (unit-trace PSD Choi matrices) and the TP
    affine set (first PTM row reset) until the CP violation of the TP iterate
    is below ``tol``.

    The returned PTM always has an exact ``(1, 0, ..., 0)`` first row. On
    non-convergence the iterate with the smallest violation is returned and a
    warning is logged.
    """
    R = np.array(R, dtype=float)
    e0 = np.zeros(R.shape[1])
    e0[0] = 1.0
    best, best_violation = None, np.inf
    it = 0
    for it in range(1, max_iter + 1):
        R = pauli.ptm_from_choi(_project_unit_trace_psd(pauli.choi_from_ptm(R)))
        R[0] = e0
        violation = max(0.0, -pauli.choi_eigenvalues(R).min())
        if violation < best_violation:
            best, best_violation = R.copy(), violation
        if violation < tol:
            break
    converged = best_violation < tol
    if not converged:
        log.warning("CPTP projection did not converge: CP violation %.3e after %d iterations",
                    best_violation, it)
    if return_info:
        return best, {"iterations": it, "cp_violation": best_violation, "converged": converged}
    return best


def project_state(vec: np.ndarray) -> np.ndarray:
    """Nearest (eigenvalue-clipped, trace-normalized) density matrix, as a Pauli vector."""
    rho = pauli.density_matrix(vec)
    rho = (rho + rho.conj().T) / 2
    w, V = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return pauli.state_vector((V * w) @ V.conj().T)


def project_effects(effects: dict) -> dict:
    """Clip each effect's spectrum to [0, 1], then share the completeness deficit evenly."""
    d = 2 ** pauli.num_qubits_of(next(iter(effects.values())))
    mats = {}
    for o, e in effects.items():
        E = pauli.density_matrix(e)
        E = (E + E.conj().T) / 2
        w, V = np.linalg.eigh(E)
        mats[o] = (V * np.clip(w, 0.0, 1.0)) @ V.conj().T
    deficit = (np.eye(d) - sum(mats.values())) / len(mats)
    return {o: pauli.effect_vector(E + deficit) for o, E in mats.items()}


def linear_gauge_fix(estimate: GateSet, target: GateSet) -> np.ndarray:
    """Gauge matrix ``M`` bringing ``estimate`` closest to ``target``.

    Solves, in the least-squares sense and in closed form, the equations
    ``M G = T M`` for every gate, ``M rho = rho_t`` and ``e = e_t M`` (the
    transformed effect ``e M^-1`` should match the target's), which are all
    linear in ``M``.
    """
    n = len(estimate.rho)
    eye = np.eye(n)
    rows, rhs = [], []
    for g, G in estimate.gates.items():
        rows.append(np.kron(eye, G.T) - np.kron(target.gates[g], eye))
        rhs.append(np.zeros(n * n))
    rows.append(np.kron(eye, estimate.rho[None, :]))
    rhs.append(target.rho)
    for o, e in estimate.effects.items():
        rows.append(np.kron(target.effects[o][None, :], eye))
        rhs.append(e)
    sol = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)[0]
    return sol.reshape(n, n)


@dataclass
class LGSTResult:
    raw: GateSet
    projected: GateSet
    diagnostics: dict


def _data_matrices(dataset: GSTDataset, fiducials: FiducialSet, germ: tuple) -> np.ndarray:
    """Rows (meas fiducial k, outcome o), columns prep fiducial i."""
    n_out = len(dataset.outcomes)
    M = np.empty((len(fiducials.meas) * n_out, len(fiducials.prep)))
    for i, fi in enumerate(fiducials.prep):
        for k, fk in enumerate(fiducials.meas):
            M[k * n_out : (k + 1) * n_out, i] = dataset.frequencies(tuple(fi) + germ + tuple(fk))
    return M


def lgst_estimate(
    dataset: GSTDataset,
    target: GateSet,
    fiducials: FiducialSet | None = None,
    gate_names: Sequence[str] | None = None,
) -> LGSTResult:
    """Linear-inversion estimate of every gate, gauge-fixed to the target frame.

    With Gram matrix ``P0 = A B`` (A: measurement frame, B: preparation
    frame) and gate data ``P_G = A G B``, ``pinv(P0) P_G = B^-1 G B``; mapping
    through the target's preparation frame ``B_t`` gives ``M G M^-1`` with
    ``M = B_t B^-1``. State and effects are transformed with the same ``M``
    so every predicted probability is gauge-invariant.

    The CPTP projection is not gauge-covariant, so it is tried in two frames:
    the target frame and the frame of :func:`linear_gauge_fix`, which balances
    gate, state and effect errors. The frame whose projected gate set predicts
    the data better is kept. ``result.raw`` is the unconstrained estimate in
    that frame; ``result.projected`` has every gate projected onto CPTP maps
    and valid SPAM.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    fiducials = fiducials or default_fiducials()
    gate_names = list(gate_names or target.gates)
    n = len(target.rho)
    if len(fiducials.prep) != n:
        raise InformationallyIncompleteError(
            f"LGST needs exactly {n} preparation fiducials, got {len(fiducials.prep)}"
        )

    P0 = _data_matrices(dataset, fiducials, ())
    sv = np.linalg.svd(P0, compute_uv=False)
    rank = int(np.sum(sv > sv[0] * 1e-10))
    cond = sv[0] / sv[n - 1] if rank >= n else np.inf
    if rank < n or cond > GRAM_COND_LIMIT:
        raise InformationallyIncompleteError(
            f"Gram matrix rank {rank}/{n}, condition number {cond:.3e}: fiducials are not "
            "informationally complete"
        )
    P0_pinv = np.linalg.pinv(P0)

    B_t = np.column_stack([target.final_state(f) for f in fiducials.prep])
    B_t_inv = np.linalg.inv(B_t)

    gates = {}
    for g in gate_names:
        PG = _data_matrices(dataset, fiducials, (g,))
        gates[g] = B_t @ (P0_pinv @ PG) @ B_t_inv

    p_rho = np.concatenate([dataset.frequencies(tuple(fk)) for fk in fiducials.meas])
    rho = B_t @ (P0_pinv @ p_rho)
    effects = {}
    for idx, o in enumerate(dataset.outcomes):
        row = np.array([dataset.frequencies(tuple(fi))[idx] for fi in fiducials.prep])
        effects[o] = row @ B_t_inv

    lgst = GateSet(rho=rho, effects=effects, gates=gates, meta={"estimator": "lgst"})
    # two candidate frames: the target frame itself and the balanced linear fix;
    # the CPTP projection is done in each and the better predictor is kept
    M_fix = linear_gauge_fix(lgst, target)
    best = None
    for frame, M in (("target", np.eye(n)), ("balanced", M_fix)):
        cand = lgst.gauge_transform(M)
        proj_gates, proj_info = {}, {}
        for g, G in cand.gates.items():
            proj_gates[g], proj_info[g] = project_cptp(G, return_info=True)
        projected = GateSet(
            rho=project_state(cand.rho),
            effects=project_effects(dict(cand.effects)),
            gates=proj_gates,
            meta={"estimator": "lgst+cptp", "gauge_frame": frame},
        )
        score = prediction_residuals(dataset, projected)["rms"]
        if best is None or score < best[0]:
            best = (score, frame, M, cand, projected, proj_info)
    score, frame, M, raw, projected, proj_info = best
    raw = GateSet(raw.rho, dict(raw.effects), dict(raw.gates), meta={"estimator": "lgst", "gauge_frame": frame})
    diagnostics = {
        "gram_condition": float(cond),
        "gauge_frame": frame,
        "gauge_shift": float(np.linalg.norm(M - np.eye(n))),
        "projected_rms": float(score),
        "projection": proj_info,
    }
    return LGSTResult(raw=raw, projected=projected, diagnostics=diagnostics)


def prediction_residuals(dataset: GSTDataset, gateset: GateSet) -> dict:
    """Max and RMS of |predicted - observed| probabilities over all records."""
    diffs = np.array(
        [gateset.probabilities(c) - dataset.frequencies(c) for c in dataset.circuits()]
    )
    return {"max_abs": float(np.max(np.abs(diffs))), "rms": float(np.sqrt(np.mean(diffs**2)))}


def germ_decay(dataset: GSTDataset, germs: GermSet, reference: GateSet) -> dict:
    """Mean total-variation distance between observed and reference-predicted
    outcome distributions, per germ and germ power. Grows with L when the
    device departs from ``reference`` along a germ's amplified direction.
    """
    out = {}
    for (i, j, k, L), c in dataset.index.items():
        if L == 0:
            continue
        tvd = 0.5 * np.abs(dataset.frequencies(c) - reference.probabilities(c)).sum()
        out.setdefault(circuit_str(germs.germs[j]), {}).setdefault(L, []).append(tvd)
    return {g: {L: float(np.mean(v)) for L, v in sorted(byL.items())} for g, byL in out.items()}


def run_gst(
    model: DriftingDeviceModel,
    cycle: int,
    shots: int,
    exact: bool = False,
    target: GateSet | None = None,
) -> tuple:
    """Collect the default design at ``cycle`` and estimate. Returns (dataset, LGSTResult)."""
    fids, _, index = default_design()
    circuits = list(dict.fromkeys(index.values()))
    dataset = collect(model, cycle, circuits, shots, exact=exact, index=index)
    result = lgst_estimate(dataset, target or ideal_gateset(), fids)
    return dataset, result
