import math
import warnings

import numpy as np
import pytest

from crotsim.device import (DeviceParams, RegimeWarning, bare_hamiltonian, effective_dez,
                            eigenbasis_in_product, energies, parse_transition, resonances)

# Frozen at E_Z = 15700, dE_Z = 300, J = 18.85 MHz (closed-form values).
RES_DEFAULT = {
    (1, "down"): 15540.279189595984,
    (1, "up"): 15559.129189595984,
    (2, "down"): 15840.870810404016,
    (2, "up"): 15859.720810404016,
}


def test_default_resonances_frozen(params):
    r = resonances(params)
    for k, v in RES_DEFAULT.items():
        assert r.f[k] == pytest.approx(v, rel=1e-12)
    assert r.dEz_tilde == pytest.approx(300.59162080803253, rel=1e-12)
    assert r["1d"] == r.f[(1, "down")]


def test_resonance_splittings_equal_J(params):
    r = resonances(params)
    assert r.f[(1, "up")] - r.f[(1, "down")] == pytest.approx(params.J)
    assert r.f[(2, "up")] - r.f[(2, "down")] == pytest.approx(params.J)


def test_resonances_match_eigenvalue_differences():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = DeviceParams(E_Z=rng.uniform(1e3, 3e4), dE_Z=rng.uniform(50, 500), J=rng.uniform(0, 40))
        e = energies(p)
        r = resonances(p)
        # lab frame Hamiltonian is -diag(E): a transition i<->j absorbs E_i - E_j
        assert r.f[(1, "down")] == pytest.approx(e[1] - e[3], rel=1e-12)
        assert r.f[(2, "up")] == pytest.approx(e[0] - e[1], rel=1e-12)


def test_energies_trace_and_order(params):
    e = energies(params)
    assert e.sum() == pytest.approx(-params.J)
    assert e[0] > e[2] > e[1] > e[3]


def test_hybridisation_coefficients(params):
    v = eigenbasis_in_product(params)
    assert v[1, 1] == pytest.approx(0.99950783, abs=1e-8)
    assert v[2, 1] == pytest.approx(-0.03137027, abs=1e-8)
    np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-14)


def test_eigenbasis_diagonalises_heisenberg_block(params):
    hb = np.array([[-params.dE_Z / 2 - params.J / 2, params.J / 2],
                   [params.J / 2, params.dE_Z / 2 - params.J / 2]])
    v = eigenbasis_in_product(params)[1:3, 1:3]
    d = v.T @ hb @ v
    assert abs(d[0, 1]) < 1e-12
    assert d[0, 0] == pytest.approx(-(effective_dez(params.dE_Z, params.J) + params.J) / 2)


def test_bare_hamiltonian_hermitian_with_drive(params):
    class Tone:
        f_R, f_MW, phi = 4.8, 15540.0, 0.3

    h = bare_hamiltonian(params, Tone(), t=0.01)
    np.testing.assert_allclose(h, h.conj().T)
    assert abs(h[1, 3]) == pytest.approx(2.4)


@pytest.mark.parametrize("label,expected", [
    ("1d", (1, "down")), ("2u", (2, "up")), ((1, "↓"), (1, "down")), ("2,down", (2, "down")),
])
def test_parse_transition(label, expected):
    assert parse_transition(label) == expected


@pytest.mark.parametrize("bad", ["3d", "1x", "", (1,), 5])
def test_parse_transition_rejects(bad):
    with pytest.raises(ValueError):
        parse_transition(bad)


def test_params_validation():
    with pytest.raises(ValueError):
        DeviceParams(dE_Z=-1)
    with pytest.raises(ValueError):
        DeviceParams(T2star=0)
    with pytest.raises(ValueError):
        DeviceParams(T2star={"1d": 3.0})
    with pytest.warns(RegimeWarning):
        DeviceParams(J=400)


def test_per_transition_mapping():
    p = DeviceParams(T2star={"1d": 3.0, "1u": 2.0, "2d": 4.0, "2u": 5.0})
    assert p.T2star[(1, "up")] == 2.0
    assert p.T1[(2, "up")] == math.inf
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert p.replace(J=10.0).J == 10.0
