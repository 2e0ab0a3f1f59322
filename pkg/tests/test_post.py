import json
import math

import pytest

from posttune.device import DriftConfig, DriftingDeviceModel, NoiseConfig
from posttune.drb import ObjectiveSpec
from posttune.nelder_mead import NMConfig
from posttune.params import CorrectionParams
from posttune.post import PostRunReport, experiment_budget, run_post, summarize, zero_seed
from posttune.seed import SeedResult

CFG = NoiseConfig(coherent_pre=(0.15, 0.3, -0.2, 0.1, -0.4, 0.2), cross_resonance_angle=0.02, depolarizing_2q=0.01)
MODEL = DriftingDeviceModel(CFG, DriftConfig(per_cycle_sigma=0.02, rng_seed=1))
SPEC = ObjectiveSpec(m=8, num_circuits=10, exact_mode=True)


def seed_at(params):
    return SeedResult(params, 0.0, 1.0, 0.0)


@pytest.fixture(scope="module")
def report():
    return run_post(MODEL, 2, seed_at(CFG.correcting_params()), SPEC, rng_seed=5, m_grid=(2, 4, 8, 16))


def test_report_structure(report):
    evals = [e for e, _ in report.iterations]
    assert evals[0] == 7 and all(b - a == 4 for a, b in zip(evals, evals[1:]))
    best = report.best_history
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert report.final_objective == best[-1] <= report.seed_objective
    assert report.stop_reason in ("stalled", "max_iterations")
    assert experiment_budget(report) == 1 + evals[-1] <= 1 + 7 + 4 * 30
    assert report.final_params.mode == "control-only"


def test_benchmark_fields(report):
    assert report.r_c < report.r_u
    assert report.improvement == pytest.approx(report.r_u / report.r_c - 1)
    assert [c.label for c in report.curves] == ["native", "corrected"]


def test_serialization(report):
    d = json.loads(report.to_json())
    assert d["cycle"] == 2 and d["final_objective"] == report.final_objective
    assert "r_u" in report.markdown()
    assert report.curves_csv().startswith("label,m,mean")


def test_deterministic(report):
    again = run_post(MODEL, 2, seed_at(CFG.correcting_params()), SPEC, rng_seed=5, m_grid=(2, 4, 8, 16))
    assert again.to_json() == report.to_json()


def test_shot_mode_deterministic():
    spec = ObjectiveSpec(m=8, num_circuits=5, shots=500)
    cfg = NMConfig(max_iterations=4)
    a = run_post(MODEL, 1, zero_seed("control-only"), spec, cfg, rng_seed=3, run_benchmark=False)
    b = run_post(MODEL, 1, zero_seed("control-only"), spec, cfg, rng_seed=3, run_benchmark=False)
    assert a.to_dict() == {**b.to_dict()}
    assert math.isnan(a.r_u) and a.curves == []


def test_zero_seed_starts_at_origin():
    z = zero_seed("both")
    assert z.params == CorrectionParams.zeros("both")


def _fake(history, seed_obj):
    return PostRunReport(
        cycle=1,
        seed=zero_seed("control-only"),
        native_objective=1.0,
        seed_objective=seed_obj,
        iterations=[(7 + 4 * k, v) for k, v in enumerate(history)],
        final_params=CorrectionParams.zeros(),
        final_objective=history[-1],
        last_improvement_iteration=0,
        stop_reason="stalled",
        r_u=0.02,
        r_c=0.01,
        improvement=1.0,
        curves=[],
        num_circuits=20,
    )


def test_early_fraction_and_threshold():
    rep = _fake([0.5, 0.4, 0.3, 0.22, 0.21, 0.2], seed_obj=0.6)
    # seed 0.6 -> final 0.2; after 3 iterations 0.22
    assert rep.early_fraction() == pytest.approx(0.38 / 0.4)
    assert rep.early_fraction(within=0) == pytest.approx(0.1 / 0.4)
    assert rep.iterations_to_threshold(0.3) == 2
    assert rep.iterations_to_threshold(0.1) is None
    assert _fake([0.5, 0.5], seed_obj=0.5).early_fraction() == 1.0
    assert experiment_budget(rep) == 1 + 7 + 4 * 5


def test_summarize():
    reps = [_fake([0.5, 0.4], 0.5), _fake([0.5, 0.3], 0.5)]
    s = summarize(reps)
    assert s["median_improvement"] == 1.0 and s["budgets"] == [12, 12]
