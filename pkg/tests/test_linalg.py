import numpy as np
import pytest
from scipy.linalg import expm

from crotsim.linalg import (DensityError, average_gate_fidelity, canonical_key, dagger,
                            expm_hermitian, kron, phase_align, process_fidelity, rotation,
                            state_fidelity, to_density, validate_density)


def _random_hermitian(rng, d=4):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + dagger(a)) / 2


def test_expm_hermitian_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = _random_hermitian(rng)
        np.testing.assert_allclose(expm_hermitian(h, -2 * np.pi * 0.01), expm(-2j * np.pi * 0.01 * h),
                                   atol=1e-12)


def test_expm_hermitian_batched():
    rng = np.random.default_rng(1)
    hs = np.array([_random_hermitian(rng) for _ in range(5)])
    out = expm_hermitian(hs, -1.0)
    for h, u in zip(hs, out):
        np.testing.assert_allclose(u, expm(-1j * h), atol=1e-12)


def test_expm_rejects_non_hermitian():
    with pytest.raises(ValueError):
        expm_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_kron_order():
    a = np.array([[1, 2], [3, 4]])
    b = np.eye(2)
    np.testing.assert_array_equal(kron(a, b), np.kron(a, b))


def test_rotation_pi_about_x():
    # a pi rotation about x is -i sigma_x
    np.testing.assert_allclose(rotation(0.0, np.pi), [[0, -1j], [-1j, 0]], atol=1e-15)


def test_fidelities_of_identical_objects():
    u = rotation(0.3, 1.1)
    assert process_fidelity(u, u) == pytest.approx(1.0)
    assert average_gate_fidelity(u, np.exp(0.7j) * u) == pytest.approx(1.0)
    psi = np.array([1, 1j]) / np.sqrt(2)
    assert state_fidelity(to_density(psi), psi) == pytest.approx(1.0)


def test_average_fidelity_relation():
    # F_avg = (d F_pro + 1) / (d + 1)
    u, v = rotation(0.0, 0.2), np.eye(2)
    fp = process_fidelity(u, v)
    assert average_gate_fidelity(u, v) == pytest.approx((2 * fp + 1) / 3)
    assert fp == pytest.approx(np.cos(0.1) ** 2)


def test_state_fidelity_mixed():
    rho = np.diag([0.98, 0.01, 0.005, 0.005]).astype(complex)
    assert state_fidelity(rho, np.eye(4)[0]) == pytest.approx(0.98)


def test_validate_density_rejects():
    with pytest.raises(DensityError):
        validate_density(np.diag([1.2, -0.2]))
    with pytest.raises(DensityError):
        validate_density(np.diag([0.6, 0.6]))


def test_phase_align_and_key():
    u = rotation(0.4, 0.9)
    assert canonical_key(phase_align(u)) == canonical_key(phase_align(np.exp(1.3j) * u))
    assert canonical_key(u) == canonical_key(np.exp(-2.1j) * u)
