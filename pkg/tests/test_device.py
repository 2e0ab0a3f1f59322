import numpy as np
import pytest

import oracles
from posttune import pauli
from posttune.device import (
    DriftConfig,
    DriftingDeviceModel,
    NoiseConfig,
    SpamConfig,
    build_gates,
    corrected_cnot,
    exact_probabilities,
    ideal_gateset,
    noisy_cnot,
    simulate_counts,
)
from posttune.params import CorrectionParams

ANGLES = (0.12, -0.4, 0.3, 0.08, 0.2, -0.1)


def test_noiseless_gates_are_ideal():
    g = build_gates(NoiseConfig())
    np.testing.assert_allclose(g["Gcx"], pauli.CNOT_PTM, atol=1e-14)
    np.testing.assert_allclose(g["Gii"], np.eye(16))
    sx = (np.eye(2) - 1j * oracles.X) / np.sqrt(2)
    np.testing.assert_allclose(g["Gxi"], oracles.brute_force_ptm([np.kron(sx, np.eye(2))]), atol=1e-12)


def test_native_cnot_matches_unitary_construction():
    cfg = NoiseConfig(coherent_pre=ANGLES, cross_resonance_angle=0.05)
    u = CorrectionParams.from_vector(ANGLES).unitaries()
    zx = np.cos(0.025) * np.eye(4) - 1j * np.sin(0.025) * np.kron(oracles.Z, oracles.X)
    full = np.kron(u[0], np.eye(2)) @ zx @ oracles.CNOT @ np.kron(u[1], np.eye(2))
    np.testing.assert_allclose(noisy_cnot(cfg), oracles.brute_force_ptm([full]), atol=1e-12)


def test_all_gates_cptp_with_noise():
    cfg = NoiseConfig(ANGLES, 0.03, 0.02, 0.001, 0.01)
    for name, G in build_gates(cfg).items():
        assert pauli.is_cptp(G, 1e-10), name


def test_correcting_params_undo_bookends():
    model = DriftingDeviceModel(NoiseConfig(coherent_pre=ANGLES))
    fixed = corrected_cnot(model, 0, model.base.correcting_params())
    np.testing.assert_allclose(fixed, pauli.CNOT_PTM, atol=1e-12)
    assert corrected_cnot(model, 0, None) is model.gateset_at_cycle(0).gates["Gcx"]


def test_both_mode_bookends():
    angles = ANGLES + (0.05, 0.1, -0.2, -0.07, 0.0, 0.3)
    model = DriftingDeviceModel(NoiseConfig(coherent_pre=angles))
    np.testing.assert_allclose(corrected_cnot(model, 0, model.base.correcting_params()), pauli.CNOT_PTM, atol=1e-12)


def test_drift_walk_is_seeded_and_accumulates():
    drift = DriftConfig(per_cycle_sigma=0.02, depolarizing_jitter=0.1, rng_seed=5)
    base = NoiseConfig(ANGLES, 0.02, 0.01, 0.001)
    m1, m2 = DriftingDeviceModel(base, drift), DriftingDeviceModel(base, drift)
    assert m1.config_at_cycle(0) == base
    assert m1.config_at_cycle(7) == m2.config_at_cycle(7)
    other = DriftingDeviceModel(base, DriftConfig(0.02, 0.1, rng_seed=6))
    assert other.config_at_cycle(3) != m1.config_at_cycle(3)
    # each cycle adds an independent step: cycle k+1 = cycle k + step
    a3 = np.array(m1.config_at_cycle(3).coherent_pre)
    a4 = np.array(m1.config_at_cycle(4).coherent_pre)
    assert 0 < np.abs(a4 - a3).max() < 0.2
    with pytest.raises(ValueError):
        m1.config_at_cycle(-1)


def test_drift_step_variance():
    base = NoiseConfig()
    steps = []
    for s in range(40):
        m = DriftingDeviceModel(base, DriftConfig(per_cycle_sigma=0.02, rng_seed=s))
        steps.append(np.array(m.config_at_cycle(1).coherent_pre))
    assert np.std(np.concatenate(steps)) == pytest.approx(0.02, rel=0.15)


def test_spam_readout_and_prep():
    spam = SpamConfig(prep_depolarizing=0.0, readout_p01=0.01, readout_p10=0.02)
    model = DriftingDeviceModel(spam=spam)
    p = exact_probabilities(model, 0, ())
    assert p["00"] == pytest.approx(0.99**2)
    assert p["11"] == pytest.approx(0.01**2)
    p = exact_probabilities(model, 0, ("Gxi", "Gxi"))
    assert p["10"] == pytest.approx(0.98 * 0.99)
    assert sum(p.values()) == pytest.approx(1.0)


def test_simulate_counts_reproducible():
    model = DriftingDeviceModel(NoiseConfig(ANGLES, depolarizing_2q=0.01), DriftConfig(rng_seed=3))
    c1 = simulate_counts(model, 2, ("Gxi", "Gcx"), 1000)
    c2 = simulate_counts(model, 2, ("Gxi", "Gcx"), 1000)
    assert c1 == c2 and sum(c1.values()) == 1000
    assert simulate_counts(model, 2, ("Gxi", "Gcx"), 1000, stream=1) != c1
    with pytest.raises(ValueError):
        simulate_counts(model, 0, (), 0)


def test_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(depolarizing_2q=0.5)
    with pytest.raises(ValueError):
        NoiseConfig(coherent_pre=(0.0,) * 5)
    with pytest.raises(ValueError):
        DriftConfig(per_cycle_sigma=-1)
    with pytest.raises(ValueError):
        SpamConfig(readout_p01=0.3)


def test_ideal_gateset():
    gs = ideal_gateset()
    assert gs.probabilities(("Gxi", "Gxi", "Gcx")) == pytest.approx([0, 0, 0, 1])
