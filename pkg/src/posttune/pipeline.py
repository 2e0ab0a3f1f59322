"""End-to-end stages shared by the command line and the acceptance suite."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .drift import DriftReport, drift_report
from .gst import GSTDataset, LGSTResult, prediction_residuals, run_gst
from .post import PostRunReport, run_post, summarize, zero_seed
from .scenario import Scenario, ensemble_cycle
from .seed import SeedResult, find_seed

log = logging.getLogger(__name__)


class _Counter:
    def __init__(self):
        self.value = 0

    def bump(self) -> None:
        self.value += 1


GST_EXECUTIONS = _Counter()


def gst_stage(scenario: Scenario) -> tuple:
    """Run tomography once at the scenario's GST cycle: (dataset, result)."""
    GST_EXECUTIONS.bump()
    g = scenario.data["gst"]
    return run_gst(scenario.model(), scenario.gst_cycle, int(g["shots"]), exact=bool(g["exact"]))


def seed_stage(result: LGSTResult, scenario: Scenario) -> SeedResult:
    restarts = int(scenario.data["post"]["seed_restarts"])
    return find_seed(result.projected.gates["Gcx"], scenario.mode, restarts, rng_seed=scenario.seed)


def post_rng_seed(scenario: Scenario, cycle: int) -> int:
    return scenario.seed * 10007 + cycle


def post_stage(scenario: Scenario, seed: SeedResult, cycle: int, run_benchmark: bool = True) -> PostRunReport:
    if seed.params.mode != scenario.mode:
        raise ValueError(f"seed mode {seed.params.mode!r} does not match scenario mode {scenario.mode!r}")
    return run_post(
        scenario.model(),
        cycle,
        seed,
        scenario.objective_spec(),
        scenario.nm_config(),
        rng_seed=post_rng_seed(scenario, cycle),
        m_grid=scenario.m_grid,
        run_benchmark=run_benchmark,
    )


@dataclass
class CampaignReport:
    seed: SeedResult
    gst_residuals: dict
    reports: list
    drift: DriftReport | None
    failures: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = summarize(self.reports)
        out["failures"] = {str(k): v for k, v in self.failures.items()}
        if self.drift is not None:
            out["drift"] = self.drift.summary
        return out

    def to_dict(self) -> dict:
        return {
            "seed": self.seed.to_dict(),
            "gst_residuals": self.gst_residuals,
            "summary": self.summary(),
            "cycles": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def markdown(self) -> str:
        from .params import table_header

        lines = [table_header(self.seed.params.mode), self.seed.params.table_row("seed")]
        lines += [r.final_params.table_row(str(r.cycle)) for r in self.reports]
        s = self.summary()
        lines += [
            "",
            "| cycle | r_u | r_c | improvement | evaluations |",
            "|---|---|---|---|---|",
        ]
        lines += [
            f"| {r.cycle} | {r.r_u:.5f} | {r.r_c:.5f} | {r.improvement * 100:.1f}% | {b} |"
            for r, b in zip(self.reports, s["budgets"])
        ]
        lines += [
            "",
            f"mean improvement {s['mean_improvement'] * 100:.1f}%, median {s['median_improvement'] * 100:.1f}%",
        ]
        return "\n".join(lines) + "\n"


def write_gst_outputs(out: Path, dataset: GSTDataset, result: LGSTResult) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    dataset.save(out / "dataset.txt")
    (out / "estimate_raw.json").write_text(json.dumps(result.raw.to_dict(), indent=2))
    (out / "estimate.json").write_text(json.dumps(result.projected.to_dict(), indent=2))
    diag = {
        "raw": prediction_residuals(dataset, result.raw),
        "projected": prediction_residuals(dataset, result.projected),
        "diagnostics": result.diagnostics,
    }
    (out / "residuals.json").write_text(json.dumps(diag, indent=2, default=float))
    return diag


def write_post_outputs(out: Path, report: PostRunReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "rb_curves.csv").write_text(report.curves_csv())
    (out / "summary.md").write_text(report.markdown())


def run_campaign(scenario: Scenario, out: Path | None = None) -> CampaignReport:
    """Tomography once, then a seeded tune-up at every listed cycle.

    A failing cycle is logged and skipped; the campaign continues.
    """
    if len(scenario.cycles) < 2:
        raise ValueError("a campaign needs at least two cycles")
    dataset, result = gst_stage(scenario)
    residuals = prediction_residuals(dataset, result.projected)
    if out is not None:
        write_gst_outputs(out / "gst", dataset, result)
    seed = seed_stage(result, scenario)
    reports, failures = [], {}
    for cycle in scenario.cycles:
        try:
            rep = post_stage(scenario, seed, cycle)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.error("cycle %d failed: %s", cycle, exc)
            failures[cycle] = str(exc)
            continue
        reports.append(rep)
        if out is not None:
            write_post_outputs(out / f"cycle_{cycle:02d}", rep)
    drift = None
    if len(reports) >= 2:
        drift = drift_report([(str(r.cycle), r.final_params) for r in reports], seed.params)
    camp = CampaignReport(seed, residuals, reports, drift, failures)
    if out is not None:
        (out / "campaign.json").write_text(camp.to_json())
        (out / "campaign.md").write_text(camp.markdown())
        (out / "seed.json").write_text(seed.to_json())
        if drift is not None:
            (out / "drift.csv").write_text(drift.to_csv())
            (out / "drift.json").write_text(drift.to_json())
    return camp


@dataclass
class EnsembleMember:
    instance: int
    cycle: int
    seeded: PostRunReport
    unseeded: PostRunReport

    def threshold(self, fraction: float = 0.5) -> float:
        """Objective level ``fraction`` of the way from native to the best either run found."""
        best = min(self.seeded.final_objective, self.unseeded.final_objective)
        return self.seeded.native_objective - fraction * (self.seeded.native_objective - best)

    def iterations_to_threshold(self) -> tuple:
        t = self.threshold()
        return self.seeded.iterations_to_threshold(t), self.unseeded.iterations_to_threshold(t)


def ensemble_member(scenario: Scenario, instance: int, cycle: int | None = None) -> EnsembleMember:
    cycle = ensemble_cycle(instance) if cycle is None else cycle
    _, result = gst_stage(scenario)
    seed = seed_stage(result, scenario)
    seeded = post_stage(scenario, seed, cycle)
    unseeded = post_stage(scenario, zero_seed(scenario.mode), cycle, run_benchmark=False)
    return EnsembleMember(instance, cycle, seeded, unseeded)
