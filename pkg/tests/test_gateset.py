import numpy as np
import pytest

from posttune.device import DriftingDeviceModel, NoiseConfig
from posttune.gateset import GateSet, circuit_str, parse_circuit


@pytest.fixture
def noisy():
    return DriftingDeviceModel(NoiseConfig((0.1, 0.2, -0.1, 0.05, 0.0, 0.3), 0.02, 0.01, 0.002)).gateset_at_cycle(0)


def test_circuit_strings():
    assert circuit_str(()) == "{}"
    assert circuit_str(("Gxi", "Gcx")) == "Gxi.Gcx"
    assert parse_circuit("Gxi.Gcx") == ("Gxi", "Gcx")
    assert parse_circuit("{}") == ()


def test_circuit_ptm_order(noisy):
    c = ("Gxi", "Gcx", "Giy")
    expected = noisy.gates["Giy"] @ noisy.gates["Gcx"] @ noisy.gates["Gxi"]
    np.testing.assert_allclose(noisy.circuit_ptm(c), expected)
    np.testing.assert_allclose(noisy.final_state(c), expected @ noisy.rho)


def test_gauge_transform_preserves_probabilities(noisy, rng):
    M = np.eye(16) + 0.05 * rng.normal(size=(16, 16))
    moved = noisy.gauge_transform(M)
    for c in [(), ("Gcx",), ("Gxi", "Gcx", "Gyi", "Gcx")]:
        np.testing.assert_allclose(moved.probabilities(c), noisy.probabilities(c), atol=1e-12)


def test_unknown_gate(noisy):
    with pytest.raises(KeyError, match="unknown gate"):
        noisy.probabilities(("Gzz",))


def test_dict_round_trip(noisy):
    back = GateSet.from_dict(noisy.to_dict())
    for g in noisy.gates:
        np.testing.assert_array_equal(back.gates[g], noisy.gates[g])
    np.testing.assert_array_equal(back.rho, noisy.rho)
    assert back.outcomes == noisy.outcomes
