"""Batched adaptive Nelder-Mead.

Every iteration evaluates the whole candidate set (reflection, expansion,
outside and inside contraction) in one batch before any acceptance decision,
so that on hardware all circuits of an iteration can be submitted together.
Coefficients default to the dimension-adaptive choice
``alpha = 1, beta = 1 + 2/d, gamma = 0.75 - 1/(2d), delta = 1 - 1/d``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]

CANDIDATES = ("reflect", "expand", "contract_out", "contract_in")


def adaptive_coefficients(d: int) -> tuple:
    return 1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d


@dataclass(frozen=True)
class NMConfig:
    """Optimizer settings; ``None`` coefficients are filled in adaptively."""

    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    delta: float | None = None
    init_step: float = 0.1
    no_improve_limit: int = 5
    max_iterations: int = 30
    shrink_enabled: bool = False
    improve_tol: float = 0.0
    xatol: float | None = None
    fatol: float | None = None

    def __post_init__(self):
        if self.init_step <= 0:
            raise ValueError("init_step must be positive")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta is not None and self.beta <= 1:
            raise ValueError("beta must be > 1")
        for name in ("gamma", "delta"):
            v = getattr(self, name)
            if v is not None and not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    def coefficients(self, d: int) -> tuple:
        auto = adaptive_coefficients(d)
        given = (self.alpha, self.beta, self.gamma, self.delta)
        return tuple(a if g is None else g for g, a in zip(given, auto))


@dataclass(frozen=True)
class Simplex:
    """Vertices sorted by ascending objective value."""

    points: np.ndarray
    values: np.ndarray
    iteration: int = 0
    evaluations: int = 0
    stalls: int = 0
    last_step: str = "init"
    flags: tuple = ()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def best(self) -> np.ndarray:
        return self.points[0]

    @property
    def best_value(self) -> float:
        return float(self.values[0])

    def vertices(self) -> list:
        return [(p.copy(), float(v)) for p, v in zip(self.points, self.values)]

    def diameter(self) -> float:
        return float(np.max(np.abs(self.points[1:] - self.points[0])))

    def spread(self) -> float:
        return float(self.values[-1] - self.values[0])


def _safe_eval(objective: Objective, x: np.ndarray) -> tuple:
    try:
        v = float(objective(x))
    except Exception as exc:  # noqa: BLE001 - any objective failure discards the candidate
        log.warning("objective failed at %s: %s", np.round(x, 4), exc)
        return math.inf, True
    if not math.isfinite(v):
        return math.inf, True
    return v, False


def evaluate_batch(objective: Objective, points: Sequence[np.ndarray]) -> tuple:
    """Evaluate all points; failures come back as ``inf`` with a flag."""
    results = [_safe_eval(objective, np.asarray(p, dtype=float)) for p in points]
    return np.array([r[0] for r in results]), [r[1] for r in results]


def _sorted(points: np.ndarray, values: np.ndarray) -> tuple:
    order = np.argsort(values, kind="stable")
    return points[order], values[order]


def init_simplex(seed: Sequence[float], step: float, objective: Objective | None = None) -> Simplex:
    """Vertex 0 at ``seed`` and vertex i at ``seed + step * e_i``.

    Without an objective the values are left as NaN (unsorted).
    """
    if step <= 0:
        raise ValueError("simplex step must be positive")
    x0 = np.asarray(seed, dtype=float)
    pts = np.vstack([x0, x0 + step * np.eye(len(x0))])
    if objective is None:
        return Simplex(points=pts, values=np.full(len(pts), np.nan))
    vals, failed = evaluate_batch(objective, pts)
    pts, vals = _sorted(pts, vals)
    flags = ("init_failure",) if any(failed) else ()
    return Simplex(points=pts, values=vals, evaluations=len(pts), flags=flags)


def candidate_points(simplex: Simplex, config: NMConfig) -> dict:
    alpha, beta, gamma, _ = config.coefficients(simplex.dim)
    c = simplex.points[:-1].mean(axis=0)
    xw = simplex.points[-1]
    xr = c + alpha * (c - xw)
    return {
        "reflect": xr,
        "expand": c + beta * (xr - c),
        "contract_out": c + gamma * (xr - c),
        "contract_in": c + gamma * (xw - c),
    }


def iterate(simplex: Simplex, objective: Objective, config: NMConfig) -> Simplex:
    """One batched Nelder-Mead iteration.

    When the classic rules reject every candidate and shrinking is disabled,
    the best candidate still replaces the worst vertex if it beats it;
    otherwise the simplex is left unchanged and the stall is recorded.
    """
    pts, vals = simplex.points.copy(), simplex.values.copy()
    cands = candidate_points(simplex, config)
    cvals, failed = evaluate_batch(objective, list(cands.values()))
    fv = dict(zip(cands, cvals))
    flags = tuple(f"failed:{n}" for n, bad in zip(cands, failed) if bad)
    evaluations = simplex.evaluations + len(cands)

    f_best, f_second_worst, f_worst = vals[0], vals[-2], vals[-1]
    fr = fv["reflect"]
    step = None
    if fr < f_best:
        step = "expand" if fv["expand"] < fr else "reflect"
    elif fr < f_second_worst:
        step = "reflect"
    elif fr < f_worst:
        if fv["contract_out"] <= fr:
            step = "contract_out"
    elif fv["contract_in"] < f_worst:
        step = "contract_in"

    if step is None and config.shrink_enabled:
        _, _, _, delta = config.coefficients(simplex.dim)
        new_pts = pts[0] + delta * (pts[1:] - pts[0])
        new_vals, shrink_failed = evaluate_batch(objective, new_pts)
        evaluations += len(new_pts)
        pts[1:], vals[1:] = new_pts, new_vals
        if any(shrink_failed):
            flags += ("failed:shrink",)
        step = "shrink"
    elif step is None:
        name = min(cands, key=lambda n: (fv[n], CANDIDATES.index(n)))
        if fv[name] < f_worst:
            step = f"fallback_{name}"
            pts[-1], vals[-1] = cands[name], fv[name]
        else:
            step = "stall"
    else:
        pts[-1], vals[-1] = cands[step], fv[step]

    pts, vals = _sorted(pts, vals)
    improved = vals[0] < f_best - config.improve_tol
    return replace(
        simplex,
        points=pts,
        values=vals,
        iteration=simplex.iteration + 1,
        evaluations=evaluations,
        stalls=0 if improved else simplex.stalls + 1,
        last_step=step,
        flags=flags,
    )


@dataclass
class NMResult:
    x: np.ndarray
    fun: float
    simplex: Simplex
    history: list = field(default_factory=list)  # best value after each iteration (index 0 = init)
    evaluations: int = 0
    iterations: int = 0
    reason: str = ""


def converged(simplex: Simplex, config: NMConfig) -> bool:
    if config.xatol is None or config.fatol is None:
        return False
    return simplex.diameter() <= config.xatol and simplex.spread() <= config.fatol


def minimize(
    objective: Objective,
    x0: Sequence[float],
    config: NMConfig = NMConfig(),
    simplex: Simplex | None = None,
    callback: Callable[[Simplex], None] | None = None,
) -> NMResult:
    """Run :func:`iterate` until the stall limit, the iteration cap or
    (when ``xatol`` and ``fatol`` are set) simplex convergence."""
    if simplex is None:
        simplex = init_simplex(x0, config.init_step, objective)
    history = [simplex.best_value]
    reason = "max_iterations"
    while simplex.iteration < config.max_iterations:
        if simplex.stalls >= config.no_improve_limit:
            reason = "stalled"
            break
        if converged(simplex, config):
            reason = "converged"
            break
        prev_best = simplex.best_value
        simplex = iterate(simplex, objective, config)
        if simplex.best_value > prev_best:
            raise AssertionError("best objective value increased")
        history.append(simplex.best_value)
        if callback is not None:
            callback(simplex)
    else:
        if simplex.stalls >= config.no_improve_limit:
            reason = "stalled"
    return NMResult(
        x=simplex.best.copy(),
        fun=simplex.best_value,
        simplex=simplex,
        history=history,
        evaluations=simplex.evaluations,
        iterations=simplex.iteration,
        reason=reason,
    )
