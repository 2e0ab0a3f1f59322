import numpy as np
import pytest

import oracles
from posttune import pauli
from posttune.device import DriftingDeviceModel, NoiseConfig, SpamConfig, ideal_gateset
from posttune.gst import (
    FiducialSet,
    GSTDataset,
    InformationallyIncompleteError,
    collect,
    default_design,
    default_fiducials,
    germ_decay,
    lgst_estimate,
    linear_gauge_fix,
    prediction_residuals,
    project_cptp,
    project_effects,
    project_state,
    run_gst,
)


@pytest.fixture(scope="module")
def device():
    return DriftingDeviceModel(
        NoiseConfig((0.08, 0.3, -0.2, 0.05, -0.1, 0.4), 0.03, 0.015, 0.001, 0.004),
        spam=SpamConfig(0.01, 0.01, 0.02),
    )


@pytest.fixture(scope="module")
def exact_run(device):
    return run_gst(device, 0, 8190, exact=True)


def test_design_counts():
    fids, germs, index = default_design()
    assert len(fids.prep) == 16 and len(germs.germs) == 11
    assert len(set(index.values())) == 1523
    # two-gate fiducials per qubit on each side of the longest germ power
    assert max(len(c) for c in index.values()) == 4 + 3 * 8 + 4


def test_exact_lgst_reproduces_every_circuit(exact_run):
    ds, res = exact_run
    assert prediction_residuals(ds, res.raw)["max_abs"] < 1e-10


def test_exact_estimate_is_gauge_equivalent_to_truth(device, exact_run):
    _, res = exact_run
    truth = device.gateset_at_cycle(0)
    # traces of gate powers are gauge invariant
    for g in truth.gates:
        for k in (1, 2, 3, 5):
            est = np.trace(np.linalg.matrix_power(res.raw.gates[g], k))
            assert est == pytest.approx(np.trace(np.linalg.matrix_power(truth.gates[g], k)), abs=1e-9)


def test_projected_estimate_is_physical(exact_run):
    _, res = exact_run
    for g, G in res.projected.gates.items():
        assert pauli.is_cptp(G, 1e-7), g
    rho = pauli.density_matrix(res.projected.rho)
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    total = sum(pauli.density_matrix(e) for e in res.projected.effects.values())
    np.testing.assert_allclose(total, np.eye(4), atol=1e-10)
    assert res.diagnostics["gauge_frame"] in ("target", "balanced")


def test_shot_estimate_close_to_truth(device):
    ds, res = run_gst(device, 0, 8190)
    truth = device.gateset_at_cycle(0).gates["Gcx"]
    # 256 entries with ~1/sqrt(shots) noise each
    assert pauli.frobenius_distance(res.projected.gates["Gcx"], truth) < 0.2
    assert prediction_residuals(ds, res.projected)["rms"] < 0.05


def test_gauge_fix_recovers_gauge(device, rng):
    truth = device.gateset_at_cycle(0)
    M = np.eye(16) + 0.02 * rng.normal(size=(16, 16))
    moved = truth.gauge_transform(M)
    back = moved.gauge_transform(linear_gauge_fix(moved, truth))
    for g in truth.gates:
        np.testing.assert_allclose(back.gates[g], truth.gates[g], atol=1e-8)


def test_project_cptp_fixes_physical_maps(rng):
    R = pauli.ptm_from_kraus(oracles.random_kraus(4, 3, rng))
    np.testing.assert_allclose(project_cptp(R), R, atol=1e-8)


def test_project_cptp_on_unphysical_map(rng):
    R = pauli.CNOT_PTM + 0.05 * rng.normal(size=(16, 16))
    P, info = project_cptp(R, return_info=True)
    assert info["converged"]
    assert pauli.is_cptp(P, 1e-7)
    np.testing.assert_array_equal(P[0], np.eye(16)[0])


def test_state_and_effect_projection():
    bad = pauli.state_vector(np.diag([1.1, -0.1, 0, 0]))
    rho = pauli.density_matrix(project_state(bad))
    assert np.linalg.eigvalsh(rho).min() >= -1e-12
    assert np.trace(rho).real == pytest.approx(1.0)
    effects = project_effects({o: e * 1.05 for o, e in ideal_gateset().effects.items()})
    total = sum(pauli.density_matrix(e) for e in effects.values())
    np.testing.assert_allclose(total, np.eye(4), atol=1e-12)


def test_incomplete_fiducials_rejected(device):
    fids = default_fiducials()
    bad = FiducialSet(prep=fids.prep[:4] * 4, meas=fids.meas)
    circuits = {tuple(a) + tuple(b) for a in fids.prep for b in fids.meas}
    ds = collect(device, 0, sorted(circuits), 100, exact=True)
    with pytest.raises(InformationallyIncompleteError):
        lgst_estimate(ds, ideal_gateset(), bad)
    with pytest.raises(InformationallyIncompleteError):
        lgst_estimate(ds, ideal_gateset(), FiducialSet(prep=fids.prep[:8], meas=fids.meas))
    with pytest.raises(ValueError):
        lgst_estimate(GSTDataset(), ideal_gateset())


def test_dataset_text_round_trip(exact_run, tmp_path):
    ds, _ = exact_run
    ds.save(tmp_path / "d.txt")
    back = GSTDataset.load(tmp_path / "d.txt")
    assert back.circuits() == ds.circuits()
    for c in ds.circuits()[:50]:
        np.testing.assert_array_equal(back.frequencies(c), ds.frequencies(c))
    with pytest.raises(KeyError):
        ds.frequencies(("Gzz",))


def test_germ_decay_flat_for_exact_reference(device, exact_run):
    ds, _ = exact_run
    _, germs, _ = default_design()
    dec = germ_decay(ds, germs, device.gateset_at_cycle(0))
    assert max(v for byL in dec.values() for v in byL.values()) < 1e-12
    dec_ideal = germ_decay(ds, germs, ideal_gateset())
    assert dec_ideal["Gcx"][8] > dec_ideal["Gcx"][1]
