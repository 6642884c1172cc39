"""Static parameters and spectrum of the exchange-coupled two-spin system.

Basis ordering used throughout the package::

    index 0: |up up>        energy  E_Z
    index 1: |up~ down>     energy -(dEz~ + J)/2
    index 2: |down~ up>     energy  (dEz~ - J)/2
    index 3: |down down>    energy -E_Z

"up" is the computational ``|0>`` and "down" is ``|1>``, so the index equals
``2*q1 + q2``.  All energies are frequencies in MHz and times are in µs.

The four EDSR transitions are labelled ``(m, sigma)``: ``m`` is the target
qubit and ``sigma`` the state of the other (control) qubit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "TRANSITIONS", "TRANSITION_PAIRS", "DeviceParams", "ResonanceTable",
    "parse_transition", "effective_dez", "energies", "resonances",
    "bare_hamiltonian", "eigenbasis_in_product", "RegimeWarning",
]

UP, DOWN = "up", "down"
TRANSITIONS: tuple[tuple[int, str], ...] = ((1, DOWN), (1, UP), (2, DOWN), (2, UP))

# (row, col) of the coupling each transition drives resonantly.
TRANSITION_PAIRS: dict[tuple[int, str], tuple[int, int]] = {
    (2, UP): (0, 1),
    (1, UP): (0, 2),
    (1, DOWN): (1, 3),
    (2, DOWN): (2, 3),
}

_ALIASES = {"u": UP, "up": UP, "↑": UP, "0": UP, "d": DOWN, "down": DOWN, "↓": DOWN, "1": DOWN}


class RegimeWarning(UserWarning):
    """Parameters leave the regime where CROT transitions are addressable."""


def parse_transition(label) -> tuple[int, str]:
    """Normalise a transition label.

    Accepts ``(1, "down")``, ``(1, "↓")``, ``"1d"``, ``"1,down"``, ``"2u"`` ...

    Raises
    ------
    ValueError
        For unknown labels.
    """
    if isinstance(label, str):
        s = label.replace(" ", "").replace(",", "")
        if len(s) < 2 or s[0] not in "12":
            raise ValueError(f"unknown transition label {label!r}")
        m, sig = int(s[0]), s[1:]
    else:
        try:
            m, sig = label
        except (TypeError, ValueError):
            raise ValueError(f"unknown transition label {label!r}") from None
    sig = _ALIASES.get(str(sig).lower())
    if m not in (1, 2) or sig is None:
        raise ValueError(f"unknown transition label {label!r}")
    return (int(m), sig)


def _per_transition(value, name: str) -> dict[tuple[int, str], float]:
    if isinstance(value, Mapping):
        out = {parse_transition(k): float(v) for k, v in value.items()}
        missing = set(TRANSITIONS) - set(out)
        if missing:
            raise ValueError(f"{name}: missing transitions {sorted(missing)}")
        return out
    return {t: float(value) for t in TRANSITIONS}


@dataclass(frozen=True)
class DeviceParams:
    """Spin-system parameters.

    Parameters
    ----------
    E_Z : float
        Average Zeeman frequency, MHz.
    dE_Z : float
        Bare Zeeman difference, MHz (qubit 2 is the higher-frequency qubit).
    J : float
        Exchange coupling, MHz.
    T1, T2star, T2rabi : float or mapping
        Per-transition relaxation, dephasing and Rabi-decay times in µs.  A
        scalar applies to every transition.  ``T1`` may be ``inf``.
    echo_exponent : float or mapping
        Stretch exponent of the Hahn-echo decay per transition.
    """

    E_Z: float = 15700.0
    dE_Z: float = 300.0
    J: float = 18.85
    T1: float | Mapping = math.inf
    T2star: float | Mapping = 3.0
    T2rabi: float | Mapping = 50.0
    echo_exponent: float | Mapping = 1.5
    defaults_used: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.E_Z > 0:
            raise ValueError("E_Z must be > 0")
        if not self.dE_Z > 0:
            raise ValueError("dE_Z must be > 0")
        if not self.J >= 0:
            raise ValueError("J must be >= 0")
        for name in ("T1", "T2star", "T2rabi", "echo_exponent"):
            table = _per_transition(getattr(self, name), name)
            if any(not v > 0 for v in table.values()):
                raise ValueError(f"{name}: all values must be > 0")
            object.__setattr__(self, name, table)
        if self.J >= self.dE_Z:
            warnings.warn(
                f"J = {self.J} MHz is not below dE_Z = {self.dE_Z} MHz; "
                "CROT transitions are no longer well separated",
                RegimeWarning, stacklevel=2)

    def replace(self, **changes) -> "DeviceParams":
        kw = dict(E_Z=self.E_Z, dE_Z=self.dE_Z, J=self.J, T1=self.T1,
                  T2star=self.T2star, T2rabi=self.T2rabi,
                  echo_exponent=self.echo_exponent, defaults_used=self.defaults_used)
        kw.update(changes)
        return DeviceParams(**kw)


@dataclass(frozen=True)
class ResonanceTable:
    """Derived spectrum: effective Zeeman difference, transition frequencies, mixing angle."""

    dEz_tilde: float
    f: dict
    mixing_angle: float

    def __getitem__(self, label) -> float:
        return self.f[parse_transition(label)]


def effective_dez(dE_Z: float, J: float) -> float:
    return math.hypot(dE_Z, J)


def energies(p: DeviceParams) -> np.ndarray:
    """Diagonal energies (MHz) in the basis ordering of this module."""
    dt = effective_dez(p.dE_Z, p.J)
    return np.array([p.E_Z, -(dt + p.J) / 2, (dt - p.J) / 2, -p.E_Z])


def resonances(p: DeviceParams) -> ResonanceTable:
    """Four EDSR resonance frequencies.

    ``f(1,down) = E_Z - (dEz~ + J)/2``, ``f(1,up) = E_Z - (dEz~ - J)/2``,
    ``f(2,down) = E_Z + (dEz~ - J)/2``, ``f(2,up) = E_Z + (dEz~ + J)/2``.
    """
    dt = effective_dez(p.dE_Z, p.J)
    f = {
        (1, DOWN): p.E_Z - (dt + p.J) / 2,
        (1, UP): p.E_Z - (dt - p.J) / 2,
        (2, DOWN): p.E_Z + (dt - p.J) / 2,
        (2, UP): p.E_Z + (dt + p.J) / 2,
    }
    return ResonanceTable(dEz_tilde=dt, f=f, mixing_angle=math.atan2(p.J, p.dE_Z))


def bare_hamiltonian(p: DeviceParams, drive=None, t: float = 0.0) -> np.ndarray:
    """Hamiltonian ``H(t)/h`` in MHz in the hybridised eigenbasis.

    The diagonal holds :func:`energies`; a drive (anything with ``f_R``,
    ``f_MW`` and ``phi`` attributes) adds ``Omega/2`` on the four coupled
    pairs above the diagonal and ``Omega*/2`` below, with
    ``Omega = f_R exp(i (2 pi f_MW t + phi))``.
    """
    h = np.diag(energies(p)).astype(complex)
    if drive is not None:
        om = 0.5 * drive.f_R * np.exp(1j * (2 * np.pi * drive.f_MW * t + drive.phi))
        for i, j in TRANSITION_PAIRS.values():
            h[i, j] = om
            h[j, i] = np.conj(om)
    return h


def eigenbasis_in_product(p: DeviceParams) -> np.ndarray:
    """Columns are the eigenstates expressed in the product basis.

    Product-basis ordering is ``(|uu>, |ud>, |du>, |dd>)``.  With the
    Heisenberg middle block ``[[-dE_Z/2 - J/2, J/2], [J/2, dE_Z/2 - J/2]]``
    the hybridised states are::

        |up~ down> = cos(theta/2)|ud> - sin(theta/2)|du>
        |down~ up> = cos(theta/2)|du> + sin(theta/2)|ud>

    with ``tan(theta) = J/dE_Z``.
    """
    th = math.atan2(p.J, p.dE_Z)
    c, s = math.cos(th / 2), math.sin(th / 2)
    v = np.eye(4)
    v[1:3, 1:3] = [[c, s], [-s, c]]
    return v
