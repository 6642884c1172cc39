import numpy as np
import pytest

from crotsim.readout import (ReadoutModel, SpamConfig, calibrate_C, condition_number,
                             confusion_matrix, correct_readout, initial_state)


def test_confusion_matrix_product_form():
    c = confusion_matrix(SpamConfig((0.0), (0.01, 0.02), (0.03, 0.04)))
    q1 = np.array([[0.99, 0.03], [0.01, 0.97]])
    q2 = np.array([[0.98, 0.04], [0.02, 0.96]])
    np.testing.assert_allclose(c, np.kron(q1, q2))
    np.testing.assert_allclose(c.sum(axis=0), 1.0)


def test_spam_validation():
    with pytest.raises(ValueError):
        SpamConfig(init_error=1.0)
    with pytest.raises(ValueError):
        ReadoutModel(C=np.ones((4, 4)))


def test_initial_state():
    rho = initial_state(SpamConfig(init_error=0.02))
    np.testing.assert_allclose(np.diag(rho).real, [0.02 / 3] * 3 + [0.98])


def test_correction_inverts_C():
    c = confusion_matrix(SpamConfig.symmetric(0.05))
    p = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(correct_readout(c @ p, c), p, atol=1e-14)
    with pytest.raises(ValueError):
        correct_readout(p, np.zeros((4, 4)))


def test_probabilities_and_sampling():
    m = ReadoutModel.from_spam(SpamConfig.symmetric(0.01), None, 1000)
    rho = np.zeros((4, 4), dtype=complex)
    rho[3, 3] = 1
    pr = m.probabilities(rho)
    assert pr[3] == pytest.approx(0.99 ** 2)
    counts = m.sample(rho, 1000, np.random.default_rng(0))
    assert counts.sum() == 1000


def test_product_basis_frame_mixes_middle_states(params):
    m = ReadoutModel.from_spam(SpamConfig(), params)
    psi = np.zeros(4)
    psi[1] = 1                                       # |up~ down>
    pr = m.probabilities(psi)
    assert pr[1] == pytest.approx(0.99950783 ** 2, abs=1e-8)
    assert pr[2] == pytest.approx(0.03137027 ** 2, abs=1e-8)


def test_calibrated_C_close_to_truth(params):
    spam = SpamConfig.symmetric(0.01)
    est = calibrate_C(spam, 200_000, seed=3, p=params)
    truth = confusion_matrix(spam)
    assert np.max(np.abs(est.C - truth)) < 3e-3
    np.testing.assert_array_equal(est.frame, np.eye(4))
    assert condition_number(est) < 1.1
