"""Tune-up loop: batched Nelder-Mead over the corrective angles, scored by DRB."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .device import DriftingDeviceModel
from .drb import DEFAULT_M_GRID, Objective, ObjectiveSpec, RBCurve, curves_to_csv, improvement, run_rb
from .nelder_mead import NMConfig, init_simplex, minimize
from .params import CorrectionParams, table_header
from .seed import SeedResult

POST_NM = NMConfig()  # adaptive coefficients, step 0.1, 5-stall rule, no shrink


@dataclass
class PostRunReport:
    cycle: int
    seed: SeedResult
    native_objective: float
    seed_objective: float
    iterations: list  # (cumulative objective evaluations, best objective) per iteration, index 0 = initial simplex
    final_params: CorrectionParams
    final_objective: float
    last_improvement_iteration: int
    stop_reason: str
    r_u: float
    r_c: float
    improvement: float
    curves: list = field(default_factory=list)
    num_circuits: int = 0
    flags: list = field(default_factory=list)

    @property
    def best_history(self) -> list:
        return [b for _, b in self.iterations]

    @property
    def num_iterations(self) -> int:
        return len(self.iterations) - 1

    def iterations_to_threshold(self, threshold: float) -> int | None:
        """First iteration whose best objective is at or below ``threshold``."""
        for k, (_, best) in enumerate(self.iterations):
            if best <= threshold:
                return k
        return None

    def early_fraction(self, within: int = 3) -> float:
        """Share of the improvement over the seed objective reached after ``within`` iterations."""
        total = self.seed_objective - self.final_objective
        if total <= 0:
            return 1.0
        hist = self.best_history
        early = hist[min(within, len(hist) - 1)]
        return (self.seed_objective - early) / total

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "seed": self.seed.to_dict(tag="seed"),
            "native_objective": self.native_objective,
            "seed_objective": self.seed_objective,
            "iterations": [list(x) for x in self.iterations],
            "final_params": self.final_params.to_dict(),
            "final_objective": self.final_objective,
            "last_improvement_iteration": self.last_improvement_iteration,
            "stop_reason": self.stop_reason,
            "r_u": self.r_u,
            "r_c": self.r_c,
            "improvement": self.improvement,
            "experiment_budget": experiment_budget(self),
            "circuit_budget": experiment_budget(self) * self.num_circuits,
            "curves": [c.to_dict() for c in self.curves],
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def curves_csv(self) -> str:
        return curves_to_csv(self.curves)

    def markdown(self) -> str:
        lines = [
            table_header(self.final_params.mode),
            self.seed.params.table_row("seed"),
            self.final_params.table_row(str(self.cycle)),
            "",
            "| quantity | value |",
            "|---|---|",
            f"| native objective | {self.native_objective:.5f} |",
            f"| seed objective | {self.seed_objective:.5f} |",
            f"| final objective | {self.final_objective:.5f} |",
            f"| r_u | {self.r_u:.5f} |",
            f"| r_c | {self.r_c:.5f} |",
            f"| improvement | {self.improvement * 100:.1f}% |",
            f"| iterations | {self.num_iterations} |",
            f"| objective evaluations | {experiment_budget(self)} |",
        ]
        return "\n".join(lines) + "\n"


def experiment_budget(report: PostRunReport) -> int:
    """Objective evaluations consumed: the native baseline plus every simplex
    vertex and batched candidate."""
    return 1 + (report.iterations[-1][0] if report.iterations else 0)


def run_post(
    model: DriftingDeviceModel,
    cycle: int,
    seed: SeedResult,
    spec: ObjectiveSpec = ObjectiveSpec(),
    config: NMConfig = POST_NM,
    rng_seed: int = 0,
    m_grid: Sequence[int] = DEFAULT_M_GRID,
    run_benchmark: bool = True,
) -> PostRunReport:
    mode = seed.params.mode
    obj = Objective(model, cycle, spec, seed=rng_seed)
    native = obj(None)

    def f(x):
        return obj(CorrectionParams(mode, tuple(x)))

    x0 = seed.params.vector()
    simplex = init_simplex(x0, config.init_step, f)
    # vertex 0 is always the seed itself
    seed_value = float(simplex.values[np.flatnonzero((simplex.points == x0).all(axis=1))[0]])
    iterations = [(simplex.evaluations, simplex.best_value)]
    flags = list(simplex.flags)

    def record(s):
        iterations.append((s.evaluations, s.best_value))
        flags.extend(f"iter{s.iteration}:{fl}" for fl in s.flags)

    res = minimize(f, x0, config, simplex=simplex, callback=record)
    best_vals = [b for _, b in iterations]
    last_imp = max((k for k in range(1, len(best_vals)) if best_vals[k] < best_vals[k - 1]), default=0)
    final = CorrectionParams(mode, tuple(res.x)).canonical()

    curves, r_u, r_c, imp = [], math.nan, math.nan, math.nan
    if run_benchmark:
        cu = run_rb(model, cycle, None, spec, m_grid, seed=rng_seed, label="native")
        cc = run_rb(model, cycle, final, spec, m_grid, seed=rng_seed, label="corrected")
        curves, r_u, r_c = [cu, cc], cu.fit.r, cc.fit.r
        imp = improvement(r_u, r_c)

    return PostRunReport(
        cycle=cycle,
        seed=seed,
        native_objective=native,
        seed_objective=seed_value,
        iterations=iterations,
        final_params=final,
        final_objective=res.fun,
        last_improvement_iteration=last_imp,
        stop_reason=res.reason,
        r_u=r_u,
        r_c=r_c,
        improvement=imp,
        curves=curves,
        num_circuits=spec.num_circuits,
        flags=flags,
    )


def zero_seed(mode: str) -> SeedResult:
    """A placeholder seed with all angles at zero (the unseeded baseline)."""
    return SeedResult(
        params=CorrectionParams.zeros(mode),
        residual_distance=math.nan,
        baseline_distance=math.nan,
        theoretical_min_infidelity=math.nan,
    )


def summarize(reports: Sequence[PostRunReport]) -> dict:
    imps = np.array([r.improvement for r in reports], dtype=float)
    return {
        "cycles": [r.cycle for r in reports],
        "improvements": imps.tolist(),
        "mean_improvement": float(np.mean(imps)) if len(imps) else math.nan,
        "median_improvement": float(np.median(imps)) if len(imps) else math.nan,
        "budgets": [experiment_budget(r) for r in reports],
    }


__all__ = [
    "POST_NM",
    "PostRunReport",
    "RBCurve",
    "experiment_budget",
    "run_post",
    "summarize",
    "zero_seed",
]
