import math

import numpy as np
import pytest

from crotsim.evolution import halfpi_time, sync_rabi
from crotsim.gates import (PRIMITIVE_LABELS, GateSet, calibrate_unitary, controlled, ideal_unitary,
                           is_virtual, pulse_plan, virtual_z)
from crotsim.linalg import I2, X, dagger, process_fidelity

# Frozen noiseless process fidelities of the calibrated primitives (k = 1, N = 1000).
FROZEN = {"X1/2": 0.9991357, "-Y2/2": 0.9991351, "X1": 0.9999246, "Y2": 0.9999262,
          "ZX1/2": 0.9998622, "ZX2/2": 0.9998720, "CNOT1": 0.9993127, "ZCNOT1": 0.9991965,
          "CNOT2": 0.9991965, "ZCNOT2": 0.9993127}


def test_ideal_cnot_flips_on_control_down():
    u = ideal_unitary("CNOT2")
    # control qubit 1 down (indices 2, 3): target flips
    np.testing.assert_allclose(u, np.diag([1, 1, 0, 0]) + np.kron(np.diag([0, 1]), X))
    np.testing.assert_allclose(ideal_unitary("ZCNOT1"), controlled(I2, X, 1))


def test_ideal_halfpi_is_product():
    u = ideal_unitary("X1/2")
    np.testing.assert_allclose(u, np.kron(np.array([[1, -1j], [-1j, 1]]) / math.sqrt(2), I2),
                               atol=1e-15)


def test_all_ideals_unitary():
    for lab in PRIMITIVE_LABELS + ("S1", "Z2(0.3)"):
        u = ideal_unitary(lab)
        np.testing.assert_allclose(u @ dagger(u), np.eye(4), atol=1e-14)


def test_virtual_labels():
    assert is_virtual("S1") and is_virtual(virtual_z(2, 0.4))
    assert not is_virtual("X1/2")
    with pytest.raises(ValueError):
        pulse_plan("Q1")


def test_pulse_plan_structure():
    m, plan = pulse_plan("ZX2/2")
    assert m == 2 and [p[0] for p in plan] == ["down", "up"]
    assert pulse_plan("ZCNOT1")[1][0][0] == "up"


@pytest.mark.parametrize("label,expected", sorted(FROZEN.items()))
def test_calibrated_fidelity_frozen(gateset, label, expected):
    f = process_fidelity(gateset.unitary(label), ideal_unitary(label))
    assert f == pytest.approx(expected, abs=2e-6)


def test_cnot_duration(gateset):
    g = gateset.primitive("CNOT1")
    assert g.duration == pytest.approx(2 * halfpi_time(sync_rabi(18.85)))
    assert g.duration * 1e3 == pytest.approx(102.73, abs=0.01)


def test_calibration_recovers_known_phases():
    target = ideal_unitary("CNOT1")
    pre = np.exp(1j * np.array([0, 0.3, -1.2, 2.0]))
    post = np.exp(1j * np.array([0, -0.7, 0.4, 1.1]))
    u = np.conj(post)[:, None] * target * np.conj(pre)[None, :]
    cal = calibrate_unitary(u, target)
    assert cal.residual < 1e-12 and cal.calibrated
    with pytest.raises(ValueError):
        calibrate_unitary(u, target, mode="global")


def test_qubit_mode_calibration_single_qubit_phases():
    target = ideal_unitary("X1/2")
    z = np.kron(np.exp(np.array([-0.5j, 0.5j]) * 0.4), np.exp(np.array([-0.5j, 0.5j]) * -0.9))
    cal = calibrate_unitary(z[:, None] * target, target, mode="qubit")
    assert cal.residual < 1e-12


def test_noise_stack_shape(gateset):
    rows = np.zeros((3, 3))
    assert gateset.unitary("CNOT2", rows).shape == (3, 4, 4)
    assert gateset.unitary("S1", rows).shape == (3, 4, 4)


def test_idle_extra_lengthens(params):
    g = GateSet(params, idle_extra=0.01)
    assert g.primitive("X1/2").duration == pytest.approx(2 / (4 * sync_rabi(18.85)) + 0.01)


def test_fidelity_report_keys(gateset):
    rep = gateset.fidelity_report(["CNOT1", "X2/2"])
    assert set(rep) == {"CNOT1", "X2/2"}
