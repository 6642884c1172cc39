"""State preparation and measurement (SPAM) model.

Measurement is a projective readout of each spin followed by independent
classical bit flips, i.e. a column-stochastic confusion matrix ``C``::

    P_measured = C @ P_true,   C[i, j] = Prob(read i | true basis state j)

Simulated states live in the hybridised eigenbasis while single-shot spin
readout resolves product states.  With ``basis="product"`` (default) the
state is rotated into the product basis before the confusion matrix is
applied; ``basis="eigen"`` measures the eigenbasis directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, eigenbasis_in_product
from .linalg import validate_density

__all__ = [
    "SpamConfig", "ReadoutModel", "confusion_matrix", "initial_state",
    "sample_outcomes", "calibrate_C", "correct_readout", "measurement_frame",
]


@dataclass(frozen=True)
class SpamConfig:
    """Initialisation and per-qubit readout error probabilities.

    Parameters
    ----------
    init_error : float
        Probability mass spread uniformly over the three states other than
        ``|down down>`` at initialisation.
    up_to_down, down_to_up : tuple of float
        Per-qubit bit-flip probabilities ``(qubit1, qubit2)``.
    full_C : ndarray, optional
        Explicit 4x4 confusion matrix overriding the per-qubit product form.
    """

    init_error: float = 0.0
    up_to_down: tuple = (0.0, 0.0)
    down_to_up: tuple = (0.0, 0.0)
    full_C: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = [self.init_error, *self.up_to_down, *self.down_to_up]
        if any(not (0.0 <= v < 1.0) for v in vals):
            raise ValueError("SPAM probabilities must lie in [0, 1)")

    @classmethod
    def symmetric(cls, flip: float, init_error: float = 0.0) -> "SpamConfig":
        return cls(init_error, (flip, flip), (flip, flip))


def confusion_matrix(spam: SpamConfig) -> np.ndarray:
    """Column-stochastic 4x4 confusion matrix of a SPAM configuration."""
    if spam.full_C is not None:
        return _check_C(np.asarray(spam.full_C, dtype=float))
    mats = []
    for m in range(2):
        a, b = spam.up_to_down[m], spam.down_to_up[m]
        mats.append(np.array([[1 - a, b], [a, 1 - b]]))
    return np.kron(mats[0], mats[1])


def _check_C(c: np.ndarray) -> np.ndarray:
    if c.shape != (4, 4):
        raise ValueError("confusion matrix must be 4x4")
    if np.any(c < -1e-12) or np.any(c > 1 + 1e-12):
        raise ValueError("confusion matrix entries must lie in [0, 1]")
    if np.max(np.abs(c.sum(axis=0) - 1)) > 1e-9:
        raise ValueError("confusion matrix columns must sum to 1")
    return c


def measurement_frame(p: DeviceParams | None, basis: str = "product") -> np.ndarray:
    """Real orthogonal matrix taking eigenbasis amplitudes to readout-basis amplitudes."""
    if basis == "eigen" or p is None:
        return np.eye(4)
    if basis == "product":
        return eigenbasis_in_product(p)
    raise ValueError("basis must be 'product' or 'eigen'")


@dataclass
class ReadoutModel:
    """Confusion matrix plus the frame in which spins are read out.

    Parameters
    ----------
    C : ndarray (4, 4)
        Column-stochastic confusion matrix.
    shots : int
        Default number of single-shot repetitions.
    frame : ndarray (4, 4), optional
        Eigenbasis-to-readout-basis rotation (identity: ideal eigenbasis readout).
    """

    C: np.ndarray = field(default_factory=lambda: np.eye(4))
    shots: int = 400
    frame: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        self.C = _check_C(np.asarray(self.C, dtype=float))
        if self.shots < 1:
            raise ValueError("shots must be >= 1")

    @classmethod
    def from_spam(cls, spam: SpamConfig, p: DeviceParams | None = None,
                  shots: int = 400, basis: str = "product") -> "ReadoutModel":
        return cls(confusion_matrix(spam), shots, measurement_frame(p, basis))

    def populations(self, state: np.ndarray) -> np.ndarray:
        """Readout-basis populations of state vectors ``(..., 4)`` or density matrices."""
        state = np.asarray(state)
        if state.shape[-2:] == (4, 4):
            rot = self.frame @ state @ self.frame.T
            return np.real(np.diagonal(rot, axis1=-2, axis2=-1))
        amp = state @ self.frame.T
        return np.abs(amp) ** 2

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        """Measured outcome probabilities (order ``uu, ud, du, dd``)."""
        pops = self.populations(state)
        out = pops @ self.C.T
        return np.clip(out, 0.0, 1.0)

    def sample(self, state: np.ndarray, shots: int | None, rng: np.random.Generator) -> np.ndarray:
        """Multinomial outcome counts for one state."""
        pr = self.probabilities(state)
        pr = pr / pr.sum()
        return rng.multinomial(shots or self.shots, pr)


def initial_state(spam: SpamConfig | None = None) -> np.ndarray:
    """Density matrix after initialisation: ``|down down>`` with ``init_error`` mixed in."""
    eps = 0.0 if spam is None else spam.init_error
    rho = np.diag([eps / 3, eps / 3, eps / 3, 1 - eps]).astype(complex)
    return rho


def sample_outcomes(rho: np.ndarray, spam: SpamConfig | ReadoutModel, shots: int,
                    seed: int | np.random.Generator = 0, p: DeviceParams | None = None,
                    basis: str = "eigen") -> np.ndarray:
    """Draw 4-outcome counts for a density matrix through the readout model."""
    rho = validate_density(rho)
    model = spam if isinstance(spam, ReadoutModel) else ReadoutModel.from_spam(spam, p, shots, basis)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return model.sample(rho, shots, rng)


def calibrate_C(spam: SpamConfig, shots: int, seed: int | np.random.Generator = 0,
                p: DeviceParams | None = None, basis: str = "product") -> ReadoutModel:
    """Estimate ``C`` column by column from simulated basis-state preparations.

    Each of the four eigenstates ``|uu>, |u~d>, |d~u>, |dd>`` is prepared
    (ideally) and measured ``shots`` times through the true readout; the
    column is the observed outcome frequency.  The hybridisation of the
    middle states therefore ends up inside the estimated ``C``.

    Raises
    ------
    ValueError
        If the estimate is singular (hint: increase ``shots``).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    truth = ReadoutModel.from_spam(spam, p, shots, basis)
    cols = []
    for j in range(4):
        rho = np.zeros((4, 4), dtype=complex)
        rho[j, j] = 1.0
        cols.append(truth.sample(rho, shots, rng) / shots)
    c = np.array(cols).T
    if abs(np.linalg.det(c)) < 1e-10:
        raise ValueError("estimated confusion matrix is singular; increase shots")
    # The estimated C maps eigenbasis populations straight to measured
    # outcomes, so the returned model carries an identity frame.
    return ReadoutModel(c, shots)


def correct_readout(pm: np.ndarray, C: np.ndarray | ReadoutModel) -> np.ndarray:
    """Readout-corrected probabilities ``C^-1 P_M`` (negatives are kept).

    Raises
    ------
    ValueError
        If ``C`` is singular.
    """
    c = C.C if isinstance(C, ReadoutModel) else np.asarray(C, dtype=float)
    cond = np.linalg.cond(c)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"confusion matrix is singular (condition number {cond:.3g})")
    return np.linalg.solve(c, np.asarray(pm, dtype=float).T).T


def condition_number(C) -> float:
    c = C.C if isinstance(C, ReadoutModel) else np.asarray(C, dtype=float)
    return float(np.linalg.cond(c))

