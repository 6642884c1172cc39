"""Two-qubit state tomography with maximum-likelihood reconstruction.

Sixteen measurement settings are formed by the pre-rotations
``(I, X/2, Y/2, X)`` on each qubit.  After readout correction every
(setting, outcome) pair gives one projector ``|psi_v><psi_v|`` and a
probability ``P_v``.  The density matrix is parameterised through a lower
triangular ``T`` with real diagonal,

    rho(t) = T T^dag / Tr(T^dag T),

which is positive and normalised by construction, and the weighted cost

    C(t) = sum_v (<psi_v|rho|psi_v> - P_v)^2 / (2 <psi_v|rho|psi_v> + eps)

is minimised with BFGS (analytic gradient) from four fixed starting points.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .gates import ideal_unitary
from .linalg import dagger, state_fidelity, to_density, validate_density
from .noise import stream_rng
from .readout import ReadoutModel, correct_readout

__all__ = [
    "PRE_ROTATIONS", "SETTINGS", "TomoRecord", "MLEResult", "setting_unitary",
    "projectors", "tomo_probabilities", "simulate_record", "exact_record",
    "measured_probabilities", "mle_reconstruct", "mc_state_uncertainty",
    "rho_from_params", "params_from_rho",
]

PRE_ROTATIONS = ("I", "X/2", "Y/2", "X")
SETTINGS = tuple((a, b) for a in PRE_ROTATIONS for b in PRE_ROTATIONS)
EPS = 1e-9


def _qubit_label(pre: str, m: int) -> str:
    return "I" if pre == "I" else pre.replace("/2", f"{m}/2") if "/2" in pre else f"{pre}{m}"


def setting_unitary(setting) -> np.ndarray:
    """Ideal pre-rotation ``R_1 (x) R_2`` of one setting ``(pre1, pre2)``."""
    a, b = setting
    return ideal_unitary(_qubit_label(b, 2)) @ ideal_unitary(_qubit_label(a, 1))


def projectors(settings=SETTINGS) -> np.ndarray:
    """Projection vectors ``psi_v = R^dag |o>``, shape ``(len(settings) * 4, 4)``."""
    vecs = [dagger(setting_unitary(s))[:, o] for s in settings for o in range(4)]
    return np.array(vecs)


_PSI = projectors()


@dataclass
class TomoRecord:
    """Outcome counts for each pre-rotation setting.

    ``counts[s, o]`` is the number of outcome ``o`` (order ``uu, ud, du, dd``)
    for setting ``s``.  An *exact* record stores probabilities instead
    (``shots = 0``), emulating infinitely many shots.
    """

    counts: np.ndarray
    shots: int
    settings: tuple = SETTINGS

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        self.settings = tuple(tuple(s) for s in self.settings)
        if self.counts.shape != (len(self.settings), 4):
            raise ValueError("counts must have shape (n_settings, 4)")
        total = self.counts.sum(axis=1)
        want = 1.0 if self.exact else self.shots
        if np.max(np.abs(total - want)) > 1e-9 * max(1, want):
            raise ValueError("per-setting counts must sum to shots")

    @property
    def exact(self) -> bool:
        return self.shots == 0

    def frequencies(self) -> np.ndarray:
        return self.counts if self.exact else self.counts / self.shots

    def to_json(self) -> str:
        return json.dumps({"settings": [list(s) for s in self.settings],
                           "shots": self.shots, "counts": self.counts.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "TomoRecord":
        d = json.loads(text)
        return cls(np.array(d["counts"]), int(d["shots"]), tuple(tuple(s) for s in d["settings"]))


@dataclass
class MLEResult:
    """Reconstructed state.  ``t`` holds the 16 real parameters of ``T``."""

    t: np.ndarray
    rho: np.ndarray
    cost: float
    fidelity: float | None = None
    converged: bool = True
    mc_std: float | None = None
    notes: list = field(default_factory=list)


def tomo_probabilities(rho: np.ndarray, settings=SETTINGS) -> np.ndarray:
    """Exact outcome probabilities, shape ``(n_settings, 4)``."""
    rho = validate_density(to_density(rho))
    psi = _PSI if settings == SETTINGS else projectors(settings)
    p = np.real(np.einsum("vi,ij,vj->v", np.conj(psi), rho, psi))
    return p.reshape(-1, 4)


def exact_record(rho: np.ndarray, readout: ReadoutModel | None = None) -> TomoRecord:
    """Noise-free record (``shots = 0``) optionally pushed through a readout model."""
    p = tomo_probabilities(rho)
    if readout is not None:
        p = p @ readout.C.T
    return TomoRecord(p, 0)


def simulate_record(rho: np.ndarray, readout: ReadoutModel, shots: int = 10000,
                    seed: int = 0, prerotations=None, key: tuple = ()) -> TomoRecord:
    """Sample a record through ``readout`` (deterministic per seed).

    ``prerotations`` optionally maps a setting to a (noisy) 4x4 unitary or
    channel function used instead of the ideal analysis-frame rotation.
    ``key`` separates the random streams of records sharing one seed.
    """
    rho = validate_density(to_density(rho))
    counts = []
    for k, s in enumerate(SETTINGS):
        rng = stream_rng(seed, "tomo", *key, k)
        if prerotations is None:
            r = setting_unitary(s)
            out = r @ rho @ dagger(r)
        else:
            op = prerotations(s)
            out = op(rho) if callable(op) else op @ rho @ dagger(op)
        counts.append(readout.sample(out, shots, rng))
    return TomoRecord(np.array(counts), shots)


def measured_probabilities(rec: TomoRecord, C=None) -> np.ndarray:
    """Readout-corrected probabilities ``P_v`` (small negatives kept), shape ``(n, 4)``."""
    f = rec.frequencies()
    return f if C is None else correct_readout(f, C)


def _unpack(x: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = x[:4]
    il = np.tril_indices(4, -1)
    t[il] = x[4:10] + 1j * x[10:16]
    return t


def _pack_grad(g: np.ndarray) -> np.ndarray:
    il = np.tril_indices(4, -1)
    return np.concatenate([np.real(np.diag(g)), np.real(g[il]), np.imag(g[il])])


def rho_from_params(x: np.ndarray) -> np.ndarray:
    t = _unpack(np.asarray(x, dtype=float))
    m = t @ dagger(t)
    return m / np.real(np.trace(m))


def params_from_rho(rho: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Cholesky parameters of a (regularised) density matrix."""
    r = np.asarray(rho, dtype=complex) + floor * np.eye(4)
    t = np.linalg.cholesky((r + dagger(r)) / 2)
    il = np.tril_indices(4, -1)
    return np.concatenate([np.real(np.diag(t)), np.real(t[il]), np.imag(t[il])])


def _cost_and_grad(x: np.ndarray, psi: np.ndarray, pm: np.ndarray):
    t = _unpack(x)
    m = t @ dagger(t)
    n = np.real(np.trace(m))
    rho = m / n
    p = np.real(np.einsum("vi,ij,vj->v", np.conj(psi), rho, psi))
    den = 2 * p + EPS
    cost = float(np.sum((p - pm) ** 2 / den))
    w = 2 * (p - pm) * (p + pm + EPS) / den ** 2
    a = (psi.T * w) @ np.conj(psi)                  # sum_v w_v |psi_v><psi_v|
    f = np.real(np.trace(a @ rho))
    g = 2 * (a @ t - f * t) / n
    return cost, _pack_grad(g)


def _starts(pm: np.ndarray) -> list:
    diag_z = np.clip(pm[0], 0, None) + 0.05
    weights = [np.full(4, 0.25), diag_z / diag_z.sum(),
               np.array([0.05, 0.05, 0.05, 0.85]), np.array([0.85, 0.05, 0.05, 0.05])]
    return [np.concatenate([np.sqrt(w), np.zeros(12)]) for w in weights]


def mle_reconstruct(rec: TomoRecord | np.ndarray, C=None, target=None) -> MLEResult:
    """Maximum-likelihood density matrix from a record (or a probability table).

    Parameters
    ----------
    rec : TomoRecord or ndarray (16, 4)
        Counts or probabilities per setting.
    C : ndarray or ReadoutModel, optional
        Confusion matrix used for readout correction.
    target : ndarray, optional
        State vector or density matrix; fills ``fidelity``.

    Notes
    -----
    All 64 (setting, outcome) projectors enter the cost.  If the best cost is
    not below that of the maximally mixed starting point the result is
    flagged ``converged=False``.
    """
    if not isinstance(rec, TomoRecord):
        rec = TomoRecord(np.asarray(rec, dtype=float), 0)
    pm = measured_probabilities(rec, C)
    psi = _PSI if rec.settings == SETTINGS else projectors(rec.settings)
    flat = pm.reshape(-1)
    best = None
    init_costs = []
    for x0 in _starts(pm):
        init_costs.append(_cost_and_grad(x0, psi, flat)[0])
        r = minimize(_cost_and_grad, x0, args=(psi, flat), jac=True, method="BFGS",
                     options={"gtol": 1e-10, "maxiter": 5000})
        if best is None or r.fun < best.fun:
            best = r
    rho = rho_from_params(best.x)
    rho = (rho + dagger(rho)) / 2
    res = MLEResult(best.x, rho, float(best.fun))
    if not best.fun < min(init_costs) and min(init_costs) > 1e-14:
        res.converged = False
        res.notes.append("cost not reduced below the initial diagonal guess")
    if target is not None:
        res.fidelity = state_fidelity(rho, target)
    return res


def _resample_fidelity(rec: TomoRecord, C, target, seed: int, k: int) -> float:
    rng = stream_rng(seed, "tomo-mc", k)
    p = rec.counts / rec.shots
    counts = np.array([rng.multinomial(rec.shots, row / row.sum()) for row in p])
    return mle_reconstruct(TomoRecord(counts, rec.shots, rec.settings), C, target).fidelity


def mc_state_uncertainty(rec: TomoRecord, C, target, resamples: int = 100, *,
                         seed: int = 0, threads: int = 1) -> float:
    """Monte Carlo standard deviation of the reconstructed state fidelity.

    Each setting's counts are resampled multinomially, the state is
    reconstructed again, and a Gaussian is fitted to the fidelities.  Exact
    records return 0.  Results do not depend on ``threads``.
    """
    if rec.exact:
        return 0.0
    ks = range(resamples)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            fids = list(ex.map(lambda k: _resample_fidelity(rec, C, target, seed, k), ks))
    else:
        fids = [_resample_fidelity(rec, C, target, seed, k) for k in ks]
    _, std = norm.fit(np.array(fids))
    return float(std)
