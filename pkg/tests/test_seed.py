import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from posttune import pauli
from posttune.params import BOTH, CONTROL_ONLY, CorrectionParams, inverse_params, params_from_unitary
from posttune.seed import SeedResult, corrected_ptm, find_seed, seed_objective

angle = st.floats(-np.pi, np.pi, allow_nan=False)


def bookended(V1, V2, V3=None, V4=None):
    V3 = np.eye(2) if V3 is None else V3
    V4 = np.eye(2) if V4 is None else V4
    U = np.kron(V1, V3) @ oracles.CNOT @ np.kron(V2, V4)
    return oracles.brute_force_ptm([U])


def test_corrected_ptm_matrix_order(rng):
    V1, V2 = oracles.random_unitary(2, rng), oracles.random_unitary(2, rng)
    G = oracles.brute_force_ptm([oracles.CNOT])
    p = CorrectionParams(CONTROL_ONLY, params_from_unitary(V1) + params_from_unitary(V2))
    np.testing.assert_allclose(corrected_ptm(G, p), bookended(V1, V2), atol=1e-12)


def test_corrected_ptm_both_mode(rng):
    Vs = [oracles.random_unitary(2, rng) for _ in range(4)]
    G = pauli.CNOT_PTM
    p = CorrectionParams(BOTH, sum((params_from_unitary(V) for V in Vs), ()))
    np.testing.assert_allclose(corrected_ptm(G, p), bookended(Vs[0], Vs[2], Vs[1], Vs[3]), atol=1e-12)


def test_corrected_ptm_rejects_one_qubit():
    with pytest.raises(ValueError):
        corrected_ptm(np.eye(4), CorrectionParams.zeros())


@settings(max_examples=40, deadline=None)
@given(angle, angle, angle, angle, angle)
def test_theta_zero_depends_only_on_phase_sum(p1, l1, shift, t2, p2):
    # with theta = 0 the unitary is diag(1, e^{i(phi+lam)}); moving weight between phi and lam changes nothing
    G = pauli.CNOT_PTM
    a = CorrectionParams(CONTROL_ONLY, (0.0, p1, l1, t2, p2, 0.3))
    b = CorrectionParams(CONTROL_ONLY, (0.0, p1 + shift, l1 - shift, t2, p2, 0.3))
    np.testing.assert_allclose(corrected_ptm(G, a), corrected_ptm(G, b), atol=1e-12)


def test_exact_recovery(rng):
    V1, V2 = oracles.random_unitary(2, rng), oracles.random_unitary(2, rng)
    res = find_seed(bookended(V1, V2), CONTROL_ONLY, restarts=4, rng_seed=1)
    assert res.residual_distance < 1e-6
    assert res.baseline_distance > 0.1
    assert res.theoretical_min_infidelity == pytest.approx(0.0, abs=1e-10)


def test_known_inverse_is_a_minimum():
    angles = (0.1, 0.2, -0.3, 0.05, 0.4, 0.0)
    us = CorrectionParams.from_vector(angles).unitaries()
    G = bookended(*us)
    inv = CorrectionParams.from_vector(inverse_params(*angles[:3]) + inverse_params(*angles[3:]))
    assert seed_objective(G)(inv.vector()) == pytest.approx(0.0, abs=1e-24)


def test_depolarizing_floor():
    q = 0.02
    V1 = oracles.random_unitary(2, np.random.default_rng(7))
    G = pauli.depolarizing_ptm(q, 2) @ bookended(V1, np.eye(2))
    res = find_seed(G, restarts=4)
    # corrected gate is (1 - q) on the 15 non-identity Paulis
    assert res.residual_distance == pytest.approx(q * np.sqrt(15), rel=1e-3)


def test_seed_result_round_trip():
    res = find_seed(pauli.CNOT_PTM, restarts=1)
    assert res.residual_distance < 1e-6
    back = SeedResult.from_dict(res.to_dict())
    assert back.params == res.params
    assert back.residual_distance == res.residual_distance
    assert res.to_dict()["table_row"].startswith("| seed |")


def test_find_seed_argument_errors():
    with pytest.raises(ValueError):
        find_seed(pauli.CNOT_PTM, "nope")
    with pytest.raises(ValueError):
        find_seed(pauli.CNOT_PTM, restarts=0)
    with pytest.raises(ValueError):
        find_seed(np.eye(4))
