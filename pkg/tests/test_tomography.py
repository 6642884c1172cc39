import numpy as np
import pytest
from scipy.optimize import check_grad

from crotsim.gates import ideal_unitary
from crotsim.linalg import to_density
from crotsim.readout import ReadoutModel, SpamConfig, calibrate_C, initial_state
from crotsim.tomography import (SETTINGS, TomoRecord, _cost_and_grad, _PSI, exact_record,
                                mc_state_uncertainty, mle_reconstruct, params_from_rho,
                                projectors, rho_from_params, simulate_record, tomo_probabilities)

DD = np.eye(4)[3].astype(complex)
BELL = ideal_unitary("CNOT2") @ ideal_unitary("Y1/2") @ DD


def test_settings_and_projectors():
    assert len(SETTINGS) == 16
    psi = projectors()
    assert psi.shape == (64, 4)
    # outcomes of one setting form an orthonormal basis
    blk = psi[:4]
    np.testing.assert_allclose(blk.conj() @ blk.T, np.eye(4), atol=1e-14)


def test_probabilities_sum_to_one():
    p = tomo_probabilities(to_density(BELL))
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    # Z-Z setting of |dd> is deterministic
    assert tomo_probabilities(to_density(DD))[0, 3] == pytest.approx(1.0)


def test_cholesky_roundtrip():
    rho = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    rho[0, 1] = rho[1, 0] = 0.05
    np.testing.assert_allclose(rho_from_params(params_from_rho(rho, floor=0)), rho, atol=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    pm = tomo_probabilities(to_density(BELL)).reshape(-1) + rng.normal(0, 0.01, 64)
    x0 = rng.normal(size=16)
    err = check_grad(lambda x: _cost_and_grad(x, _PSI, pm)[0],
                     lambda x: _cost_and_grad(x, _PSI, pm)[1], x0)
    assert err < 1e-4


@pytest.mark.parametrize("state", [DD, BELL, np.ones(4) / 2])
def test_exact_reconstruction(state):
    res = mle_reconstruct(exact_record(to_density(state)), target=state)
    assert res.fidelity > 0.9999
    assert res.converged


def test_sampled_spam_record_dd(params):
    spam = SpamConfig.symmetric(0.01, init_error=0.02)
    truth = ReadoutModel.from_spam(spam, params, 10000)
    c = calibrate_C(spam, 10000, seed=1, p=params)
    rec = simulate_record(initial_state(spam), truth, 10000, seed=2)
    res = mle_reconstruct(rec, c, DD)
    assert res.fidelity == pytest.approx(0.98, abs=0.01)


def test_record_validation_and_json():
    with pytest.raises(ValueError):
        TomoRecord(np.ones((16, 4)), 5)
    rec = simulate_record(to_density(DD), ReadoutModel(), 100, seed=0)
    back = TomoRecord.from_json(rec.to_json())
    np.testing.assert_array_equal(back.counts, rec.counts)
    assert back.shots == 100


def test_record_deterministic_per_key():
    ro = ReadoutModel()
    a = simulate_record(to_density(BELL), ro, 500, seed=4, key=("a",))
    b = simulate_record(to_density(BELL), ro, 500, seed=4, key=("a",))
    c = simulate_record(to_density(BELL), ro, 500, seed=4, key=("b",))
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_mc_uncertainty():
    rec = simulate_record(to_density(BELL), ReadoutModel(), 2000, seed=1)
    std = mc_state_uncertainty(rec, None, BELL, 12, seed=0)
    assert 0 < std < 0.01
    assert mc_state_uncertainty(exact_record(to_density(BELL)), None, BELL) == 0.0
