import numpy as np
import pytest

from posttune.params import unitary_from_params
from posttune.scenario import (
    DEFAULTS,
    Scenario,
    ScenarioError,
    default_ensemble,
    default_scenario,
    ensemble_cycle,
)


def test_defaults_build():
    sc = Scenario.from_dict({})
    assert sc.mode == "control-only"
    assert sc.cycles == list(range(1, 13))
    assert sc.objective_spec().shots == 8190
    assert sc.nm_config().max_iterations == 30
    assert sc.model().drift.rng_seed == 0


def test_coherent_angles_are_seeded_rotations():
    lo, hi = DEFAULTS["device"]["noise"]["coherent_range"]
    a = default_scenario(3).coherent_angles()
    assert a == default_scenario(3).coherent_angles()
    assert a != default_scenario(4).coherent_angles()
    for i in (0, 3):
        U = unitary_from_params(*a[i : i + 3])
        eps = 2 * np.arccos(min(abs(np.trace(U)) / 2, 1.0))
        assert lo - 1e-9 <= eps <= hi + 1e-9
    assert len(Scenario.from_dict({"post": {"mode": "both"}}).coherent_angles()) == 12


def test_explicit_coherent_angles():
    sc = Scenario.from_dict({"device": {"noise": {"coherent_pre": [0.1] * 6}}})
    assert sc.model().base.coherent_pre == (0.1,) * 6


def test_unknown_keys_rejected():
    with pytest.raises(ScenarioError, match="device.nois"):
        Scenario.from_dict({"device": {"nois": {}}})
    with pytest.raises(ScenarioError):
        Scenario.from_dict({}).with_overrides(**{"post.bogus": 1})


@pytest.mark.parametrize(
    "bad",
    [
        {"post": {"mode": "target"}},
        {"post": {"cycles": [3, 1]}},
        {"post": {"cycles": [-1, 2]}},
        {"post": {"m_grid": [2, 4]}},
        {"post": {"objective": {"shots": 0}}},
        {"gst": {"catalog": "big"}},
        {"gst": {"max_length": 16}},
        {"device": {"noise": {"depolarizing_2q": 0.9}}},
        {"post": {"optimizer": {"init_step": -1}}},
    ],
)
def test_invalid_values(bad):
    with pytest.raises(ScenarioError):
        Scenario.from_dict(bad)


def test_yaml_round_trip(tmp_path):
    sc = default_scenario(7, exact=True)
    path = tmp_path / "s.yaml"
    path.write_text(sc.to_yaml())
    assert Scenario.load(path).data == sc.data


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        Scenario.load(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("post: [unclosed\n")
    with pytest.raises(ScenarioError, match="cannot parse"):
        Scenario.load(bad)
    lst = tmp_path / "list.yaml"
    lst.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="mapping"):
        Scenario.load(lst)


def test_overrides_do_not_mutate():
    sc = Scenario.from_dict({})
    sc2 = sc.with_overrides(**{"seed": 9, "post.objective.exact_mode": True})
    assert sc.seed == 0 and sc2.seed == 9
    assert sc2.objective_spec().exact_mode and not sc.objective_spec().exact_mode


def test_ensemble():
    ens = default_ensemble(5)
    assert [s.seed for s in ens] == list(range(5))
    assert all(s.objective_spec().exact_mode for s in ens)
    assert [ensemble_cycle(k) for k in (0, 11, 12)] == [1, 12, 1]
