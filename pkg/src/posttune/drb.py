"""Direct randomized benchmarking on the simulated device.

Circuits are a product-stabilizer preparation followed by ``m`` random layers
(a CNOT with probability ``cnot_fraction``, otherwise one random native
single-qubit gate or idle per qubit). Success is the overlap of the noisy
output with the ideally propagated output state.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .device import DriftingDeviceModel, corrected_cnot, gateset_at_cycle, ideal_gateset
from .params import CorrectionParams

log = logging.getLogger(__name__)

DIM = 4  # two-qubit Hilbert dimension
RB_SCALE = (DIM * DIM - 1) / (DIM * DIM)  # 15/16
DEFAULT_M_GRID = (2, 4, 8, 16, 32, 64)

# per-qubit preparations reaching the six single-qubit stabilizer states from |0>
_PREP_SEQS = ((), ("x",), ("y",), ("x", "x"), ("x", "x", "x"), ("y", "y", "y"))
_NAMES = ({"x": "Gxi", "y": "Gyi"}, {"x": "Gix", "y": "Giy"})
_LOCAL_CHOICES = (None, "x", "y")


@dataclass(frozen=True)
class ObjectiveSpec:
    m: int = 16
    num_circuits: int = 20
    shots: int = 8190
    cnot_fraction: float = 0.75
    exact_mode: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.num_circuits < 1:
            raise ValueError("num_circuits must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0.0 <= self.cnot_fraction <= 1.0:
            raise ValueError("cnot_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class DRBCircuit:
    """``prep`` and every core layer are tuples of gate names applied in order."""

    prep: tuple
    layers: tuple
    ideal_output: np.ndarray = field(compare=False, repr=False)

    @property
    def m(self) -> int:
        return len(self.layers)

    @property
    def num_cnot_layers(self) -> int:
        return sum(1 for layer in self.layers if layer == ("Gcx",))

    @property
    def cnot_fraction(self) -> float:
        return self.num_cnot_layers / self.m

    def gate_sequence(self) -> tuple:
        return self.prep + tuple(g for layer in self.layers for g in layer)


def _ideal_output(gates: Sequence[str]) -> np.ndarray:
    ideal = ideal_gateset()
    v = np.asarray(ideal.rho, dtype=float)
    for g in gates:
        v = ideal.gates[g] @ v
    return v


def generate_drb_circuit(m: int, cnot_fraction: float, rng: np.random.Generator) -> DRBCircuit:
    if m < 1:
        raise ValueError("m must be >= 1")
    prep = []
    for q in (0, 1):
        seq = _PREP_SEQS[rng.integers(len(_PREP_SEQS))]
        prep += [_NAMES[q][s] for s in seq]
    layers = []
    for _ in range(m):
        if rng.random() < cnot_fraction:
            layers.append(("Gcx",))
            continue
        picks = [_LOCAL_CHOICES[rng.integers(3)] for _ in (0, 1)]
        layer = tuple(_NAMES[q][p] for q, p in enumerate(picks) if p is not None)
        layers.append(layer or ("Gii",))
    gates = tuple(prep) + tuple(g for layer in layers for g in layer)
    return DRBCircuit(prep=tuple(prep), layers=tuple(layers), ideal_output=_ideal_output(gates))


def generate_circuits(
    m: int, num_circuits: int, cnot_fraction: float = 0.75, seed: int | Sequence[int] = 0
) -> list:
    rng = np.random.default_rng(seed)
    return [generate_drb_circuit(m, cnot_fraction, rng) for _ in range(num_circuits)]


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


class CompiledCircuit:
    """A circuit split at its CNOT layers; the CNOT-free segments are
    multiplied out once per device cycle."""

    def __init__(self, circuit: DRBCircuit, gates: dict, rho: np.ndarray):
        segments, cur = [], np.asarray(rho, dtype=float)
        pending = list(circuit.prep)
        for layer in circuit.layers:
            if layer == ("Gcx",):
                segments.append(pending)
                pending = []
            else:
                pending.extend(layer)
        segments.append(pending)
        mats = []
        for seg in segments:
            M = np.eye(len(cur))
            for g in seg:
                M = gates[g] @ M
            mats.append(M)
        # fold the preparation into the first segment
        self.start = mats[0] @ cur
        self.rest = mats[1:]
        self.target = circuit.ideal_output

    def success(self, cnot: np.ndarray) -> float:
        v = self.start
        for M in self.rest:
            v = M @ (cnot @ v)
        return float(np.clip(self.target @ v, 0.0, 1.0))


def compile_circuits(model: DriftingDeviceModel, cycle: int, circuits: Sequence[DRBCircuit]) -> list:
    gs = gateset_at_cycle(model, cycle)
    return [CompiledCircuit(c, gs.gates, gs.rho) for c in circuits]


def success_probability(
    model: DriftingDeviceModel,
    cycle: int,
    circuit: DRBCircuit,
    correction: CorrectionParams | None = None,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Exact overlap when ``shots`` is None, else a binomial estimate."""
    p = CompiledCircuit(circuit, gateset_at_cycle(model, cycle).gates, gateset_at_cycle(model, cycle).rho)
    p = p.success(corrected_cnot(model, cycle, correction))
    if shots is None:
        return p
    rng = rng if rng is not None else np.random.default_rng()
    return rng.binomial(shots, p) / shots


class Objective:
    """Mean failure probability ``1 - P`` over a frozen circuit set.

    In shot mode evaluation ``k`` draws circuit ``j`` from substream
    ``(seed, cycle, k, j)``, so a run is reproducible call by call.
    """

    def __init__(
        self,
        model: DriftingDeviceModel,
        cycle: int,
        spec: ObjectiveSpec,
        circuits: Sequence[DRBCircuit] | None = None,
        seed: int = 0,
    ):
        self.model, self.cycle, self.spec, self.seed = model, cycle, spec, seed
        if circuits is None:
            circuits = generate_circuits(spec.m, spec.num_circuits, spec.cnot_fraction, [seed, 0xC1C])
        self.circuits = list(circuits)
        self.compiled = compile_circuits(model, cycle, self.circuits)
        self.calls = 0

    def success_probabilities(self, params: CorrectionParams | None) -> np.ndarray:
        cnot = corrected_cnot(self.model, self.cycle, params)
        return np.array([c.success(cnot) for c in self.compiled])

    def __call__(self, params: CorrectionParams | None) -> float:
        probs = self.success_probabilities(params)
        k = self.calls
        self.calls += 1
        if not self.spec.exact_mode:
            shots = self.spec.shots
            probs = np.array(
                [
                    np.random.default_rng([self.seed, self.cycle, k, j]).binomial(shots, p) / shots
                    for j, p in enumerate(probs)
                ]
            )
        return float(1.0 - probs.mean())


def objective(
    model: DriftingDeviceModel,
    cycle: int,
    params: CorrectionParams | None,
    spec: ObjectiveSpec,
    circuit_cache: Sequence[DRBCircuit],
    seed: int = 0,
) -> float:
    return Objective(model, cycle, spec, circuit_cache, seed)(params)


# ---------------------------------------------------------------------------
# decay fit
# ---------------------------------------------------------------------------


def rb_number(p: float, dim: int = DIM) -> float:
    return (dim * dim - 1) / (dim * dim) * (1.0 - p)


@dataclass(frozen=True)
class DecayFit:
    A: float
    B: float
    p: float
    r: float
    covariance: np.ndarray | None = field(default=None, compare=False, repr=False)
    converged: bool = True
    method: str = "lm"
    rms_residual: float = 0.0

    @property
    def p_stderr(self) -> float:
        if self.covariance is None:
            return float("nan")
        return float(math.sqrt(max(self.covariance[2, 2], 0.0)))

    def curve(self, m) -> np.ndarray:
        return self.A + self.B * np.power(self.p, np.asarray(m, dtype=float))

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "p": self.p,
            "r": self.r,
            "p_stderr": self.p_stderr,
            "converged": self.converged,
            "method": self.method,
            "rms_residual": self.rms_residual,
        }


def _grid_fit(m, y, w, fixed_A: float | None = None) -> tuple:
    """Variable projection over p on a 1e-4 grid in [0, 1].

    For each p the best (A, B) is found in closed form, either free or with A
    pinned (to ``fixed_A`` if given, else also to 0); solutions with A or B
    outside [0, 1] are skipped.
    """
    grid = np.linspace(0.0, 1.0, 10001)
    X = grid[:, None] ** m[None, :] * w  # weighted p^m per grid row
    one, yw = w, y * w
    s11, s1x, sxx = one @ one, X @ one, np.einsum("ij,ij->i", X, X)
    s1y, sxy = one @ yw, X @ yw
    options = []
    with np.errstate(divide="ignore", invalid="ignore"):
        if fixed_A is None:
            det = s11 * sxx - s1x**2
            options.append(((sxx * s1y - s1x * sxy) / det, (s11 * sxy - s1x * s1y) / det))
        A0 = 0.0 if fixed_A is None else fixed_A
        options.append((np.full_like(grid, A0), (sxy - A0 * s1x) / sxx))
    cands = []
    for A, B in options:
        with np.errstate(invalid="ignore", over="ignore"):
            cost = np.sum((A[:, None] * w + B[:, None] * X - yw) ** 2, axis=1)
        ok = np.isfinite(cost) & (A >= 0) & (A <= 1) & (B >= 0) & (B <= 1)
        cost = np.where(ok, cost, np.inf)
        i = int(np.argmin(cost))
        cands.append((cost[i], A[i], B[i], grid[i]))
    best = min(cands, key=lambda c: c[0])
    return float(best[1]), float(best[2]), float(best[3])


def _physical(x) -> bool:
    A, B, p = x
    return bool(np.all(np.isfinite(x)) and 0 <= A <= 1 and 0 <= B <= 1 + 1e-9 and 0 <= p <= 1)


def fit_decay(
    points: Sequence[tuple],
    asymptote: float = 1.0 / DIM,
    fix_asymptote: bool = False,
) -> DecayFit:
    """Fit ``P_m = A + B p^m`` to ``(m, mean, stderr)`` triples.

    A log-linear regression on ``P_m - asymptote`` seeds Levenberg-Marquardt.
    If the free fit leaves the physical box it is repeated with bounds, and if
    that fails too a grid search over p takes over. With ``fix_asymptote`` the
    constant A is held at ``asymptote`` and only (B, p) are fitted.
    """
    pts = sorted((float(a), float(b), float(c)) for a, b, c in points)
    m = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    se = np.array([q[2] for q in pts])
    if len(np.unique(m)) < 3:
        raise ValueError("need at least three distinct sequence lengths")
    pos = se[se > 0]
    w = 1.0 / np.where(se > 0, se, pos.min() if len(pos) else 1.0)
    w = w / w.max()

    if np.allclose(y, y[0], atol=1e-14):
        # flat data: no decay to resolve
        return DecayFit(A=float(y[0]), B=0.0, p=1.0, r=0.0, converged=True, method="flat")

    shifted = y - asymptote
    ok = shifted > 1e-12
    if ok.sum() >= 2:
        slope, icpt = np.polyfit(m[ok], np.log(shifted[ok]), 1)
        p0 = float(np.clip(np.exp(slope), 1e-3, 1.0 - 1e-9))
        b0 = float(np.exp(icpt))
    else:
        p0, b0 = 0.5, float(y[0] - asymptote)

    if fix_asymptote:
        def full(z):
            return np.array([asymptote, z[0], z[1]])

        z0, lo, hi = np.array([b0, p0]), [0.0, 0.0], [1.0, 1.0]
    else:
        def full(z):
            return np.asarray(z, dtype=float)

        z0, lo, hi = np.array([asymptote, b0, p0]), [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]

    def resid(z):
        A, B, p = full(z)
        return (A + B * p**m - y) * w

    def covariance(sol):
        k = len(sol.x)
        s2 = float(np.sum(sol.fun**2)) / max(len(m) - k, 1)
        try:
            c = np.linalg.inv(sol.jac.T @ sol.jac) * s2
        except np.linalg.LinAlgError:
            return None
        if k == 3:
            return c
        out = np.zeros((3, 3))
        out[1:, 1:] = c
        return out

    tight = dict(xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    method, converged, cov, sol = "lm", False, None, None
    try:
        sol = least_squares(resid, z0, method="lm", **tight)
        converged = bool(sol.success) and _physical(full(sol.x))
        if not converged:
            # free asymptote wandered off (slow decays); repeat inside the physical box
            sol = least_squares(resid, np.clip(z0, lo, hi), method="trf", bounds=(lo, hi), **tight)
            method = "bounded"
            converged = bool(sol.success) and _physical(full(sol.x))
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.warning("decay fit failed: %s", exc)
        converged = False

    if converged:
        A, B, p = full(sol.x)
        cov = covariance(sol)
    else:
        log.warning("decay fit did not converge; using grid search over p")
        A, B, p = _grid_fit(m, y, w, asymptote if fix_asymptote else None)
        method = "grid"
    p = float(np.clip(p, 0.0, 1.0))
    rms = float(np.sqrt(np.mean((A + B * p**m - y) ** 2)))
    return DecayFit(
        A=float(A), B=float(B), p=p, r=rb_number(p), covariance=cov,
        converged=converged, method=method, rms_residual=rms,
    )


# ---------------------------------------------------------------------------
# RB experiments
# ---------------------------------------------------------------------------


@dataclass
class RBCurve:
    label: str
    points: list  # (m, mean, stderr)
    fit: DecayFit

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "points": [list(p) for p in self.points],
            "fit": self.fit.to_dict(),
        }


def run_rb(
    model: DriftingDeviceModel,
    cycle: int,
    params: CorrectionParams | None,
    spec: ObjectiveSpec,
    m_grid: Sequence[int] = DEFAULT_M_GRID,
    seed: int = 0,
    label: str = "",
    fix_asymptote: bool = True,
) -> RBCurve:
    """Full decay curve; every length uses its own frozen circuit set, shared
    between calls with the same seed so native and corrected gates see the
    same circuits.

    The asymptote is held at 1/4 by default: all simulated gate errors are
    unital, so a fully scrambled output overlaps the ideal state by exactly
    1/4, and a free asymptote is poorly determined when m <= 64.
    """
    points = []
    for m in m_grid:
        circuits = generate_circuits(m, spec.num_circuits, spec.cnot_fraction, [seed, 0xDB, m])
        obj = Objective(model, cycle, spec, circuits, seed=seed * 1000 + m)
        probs = obj.success_probabilities(params)
        if not spec.exact_mode:
            probs = np.array(
                [
                    np.random.default_rng([seed, cycle, 0xDB, m, j]).binomial(spec.shots, p) / spec.shots
                    for j, p in enumerate(probs)
                ]
            )
        stderr = float(probs.std(ddof=1) / math.sqrt(len(probs))) if len(probs) > 1 else 0.0
        points.append((int(m), float(probs.mean()), stderr))
    return RBCurve(label=label, points=points, fit=fit_decay(points, fix_asymptote=fix_asymptote))


def improvement(r_u: float, r_c: float) -> float:
    """``r_u / r_c - 1``; ``inf`` (saturated) when ``r_c <= 0``."""
    if r_c <= 0:
        return math.inf
    return r_u / r_c - 1.0


def mixture_rb_number(r_cnot: float, r_single: float, cnot_fraction: float = 0.75) -> float:
    return cnot_fraction * r_cnot + (1.0 - cnot_fraction) * r_single


def curves_to_csv(curves: Sequence[RBCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "m", "mean", "stderr", "fit"])
    for c in curves:
        for m, mean, se in c.points:
            w.writerow([c.label, m, f"{mean:.10g}", f"{se:.6g}", f"{float(c.fit.curve(m)):.10g}"])
    return buf.getvalue()
