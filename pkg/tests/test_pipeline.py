import json

import pytest

from posttune.pipeline import GST_EXECUTIONS, ensemble_member, run_campaign
from posttune.scenario import Scenario


def small(**over):
    base = {
        "seed": 2,
        "post": {"cycles": [1, 2], "m_grid": [2, 4, 8], "objective": {"num_circuits": 5, "m": 8}},
    }
    sc = Scenario.from_dict(base)
    return sc.with_overrides(**over) if over else sc


def test_campaign_outputs(tmp_path):
    before = GST_EXECUTIONS.value
    camp = run_campaign(small(), tmp_path)
    assert GST_EXECUTIONS.value == before + 1
    assert [r.cycle for r in camp.reports] == [1, 2] and not camp.failures
    for name in ("campaign.json", "campaign.md", "seed.json", "drift.csv", "drift.json",
                 "gst/dataset.txt", "gst/estimate.json", "cycle_01/report.json", "cycle_02/rb_curves.csv"):
        assert (tmp_path / name).is_file(), name
    data = json.loads((tmp_path / "campaign.json").read_text())
    assert len(data["cycles"]) == 2 and "drift" in data["summary"]
    assert "| seed |" in (tmp_path / "campaign.md").read_text()


def test_campaign_needs_two_cycles():
    with pytest.raises(ValueError):
        run_campaign(small(**{"post.cycles": [1]}))


def test_ensemble_member_threshold():
    m = ensemble_member(small(**{"post.objective.exact_mode": True}), 2, cycle=1)
    t = m.threshold()
    assert m.seeded.native_objective >= t >= min(m.seeded.final_objective, m.unseeded.final_objective)
    a, b = m.iterations_to_threshold()
    assert a is None or a >= 0
    assert m.unseeded.seed.params.vector().tolist() == [0.0] * 6
