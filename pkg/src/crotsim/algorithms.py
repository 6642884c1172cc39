"""Two-qubit Deutsch-Jozsa and Grover circuits built from the primitive set.

Conventions
-----------
* Bit value 1 is spin down, 0 is spin up; a two-bit string ``ij`` refers to
  (qubit 1, qubit 2).  The register starts in ``|down down>``.
* Gate lists are in time order (first element applied first).  Oracle
  compositions are read the same way, e.g. ``O_11 = (Y2/2)(CNOT2)(-Y2/2)``
  plays ``Y2/2`` first.
* Deutsch-Jozsa: prepare with ``Y/2`` on both qubits, call the oracle on
  qubit 2, undo with ``-Y/2`` on both.  Qubit 1 ends down for a constant
  function and up for a balanced one.
* Grover: prepare with ``-Y/2`` on both qubits, call the oracle, then the
  diffusion ``(Y/2, Y/2) O_11 (-Y/2, -Y/2)``; the register ends in the marked
  string.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams
from .gates import GateSet, ideal_unitary, is_virtual
from .linalg import dagger, state_fidelity, validate_density
from .noise import NoiseModel, draw_samples
from .readout import ReadoutModel, SpamConfig, calibrate_C, initial_state
from .tomography import mc_state_uncertainty, mle_reconstruct, simulate_record

__all__ = [
    "OracleSpec", "StageReport", "AlgorithmResult", "TomoOptions", "ORACLES", "STAGES",
    "oracle", "dj_circuit", "grover_circuit", "run_dj", "run_grover", "paper_spam",
    "sequence_unitary",
]

STAGES = ("init", "input-prepared", "post-oracle", "output")

_DJ = {0: ("I2", []), 1: ("X2", ["X2"]), 2: ("ZCNOT2", ["ZCNOT2"]), 3: ("CNOT2", ["CNOT2"])}
_GROVER = {
    "11": ["Y2/2", "CNOT2", "-Y2/2"],
    "10": ["Y1/2", "ZCNOT1", "-Y1/2"],
    "01": ["-Y1/2", "CNOT1", "Y1/2"],
    "00": ["-Y2/2", "ZCNOT2", "Y2/2"],
}


@dataclass(frozen=True)
class OracleSpec:
    algorithm: str
    index: str
    gates: tuple


ORACLES = {
    **{("deutsch-jozsa", f"f{k}"): OracleSpec("deutsch-jozsa", f"f{k}", tuple(g))
       for k, (_, g) in _DJ.items()},
    **{("grover", f"f{k}"): OracleSpec("grover", f"f{k}", tuple(g)) for k, g in _GROVER.items()},
}


@dataclass
class StageReport:
    stage: str
    rho: np.ndarray
    ideal: np.ndarray
    fidelity: float
    max_imag: float
    mc_std: float | None = None


@dataclass
class AlgorithmResult:
    algorithm: str
    index: str
    stages: list
    outcome: str                 # verdict ("constant"/"balanced") or found string
    probability: float           # probability of that outcome in the output state
    meta: dict = field(default_factory=dict)

    def stage(self, name: str) -> StageReport:
        return next(s for s in self.stages if s.stage == name)


@dataclass(frozen=True)
class TomoOptions:
    """Reconstruct every stage from sampled tomography data."""

    shots: int = 10000
    calibration_shots: int = 10000
    mc_resamples: int = 0


def paper_spam() -> SpamConfig:
    """2% initialisation error and 1% symmetric readout flips per qubit."""
    return SpamConfig.symmetric(0.01, init_error=0.02)


def _norm_index(algorithm: str, index) -> str:
    s = str(index)
    s = s if s.startswith("f") else f"f{s}"
    if (algorithm, s) not in ORACLES:
        raise ValueError(f"unknown {algorithm} oracle {index!r}")
    return s


def oracle(algorithm: str, index) -> OracleSpec:
    """Oracle specification, e.g. ``oracle("grover", "11")`` or ``oracle("deutsch-jozsa", 2)``."""
    return ORACLES[(algorithm, _norm_index(algorithm, index))]


def dj_circuit(index) -> list:
    """Time-ordered gate lists for the stages after ``init``."""
    o = oracle("deutsch-jozsa", index)
    return [["Y1/2", "Y2/2"], list(o.gates), ["-Y1/2", "-Y2/2"]]


def grover_circuit(index) -> list:
    o = oracle("grover", index)
    diffusion = ["Y1/2", "Y2/2"] + _GROVER["11"] + ["-Y1/2", "-Y2/2"]
    return [["-Y1/2", "-Y2/2"], list(o.gates), diffusion]


def sequence_unitary(labels, gates: GateSet | None = None, noise=None) -> np.ndarray:
    """Product of a time-ordered label list (ideal, or simulated if ``gates`` given)."""
    u = np.eye(4, dtype=complex)
    if gates is not None and noise is not None and np.ndim(noise) == 2:
        u = np.broadcast_to(u, (len(noise), 4, 4)).copy()
    for lab in labels:
        if gates is None or is_virtual(lab):
            g = ideal_unitary(lab)
        else:
            g = gates.unitary(lab, noise)
        u = g @ u
    return u


def _evolve(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    if u.ndim == 2:
        return u @ rho @ dagger(u)
    return np.mean(u @ rho[None] @ dagger(u), axis=0)


def _run(algorithm: str, index, blocks: list, noise: NoiseModel | None, tomo: TomoOptions | None,
         gates: GateSet | None, spam: SpamConfig | None, samples: int, seed: int,
         p: DeviceParams | None) -> tuple[list, dict]:
    p = p or (gates.p if gates is not None else DeviceParams())
    if noise is not None and gates is None:
        gates = GateSet(p)
    rows = None
    if noise is not None and not noise.is_zero:
        rows = draw_samples(noise, samples, "algo", algorithm, str(index))
    rho = initial_state(spam)
    ideal = np.zeros(4, dtype=complex)
    ideal[3] = 1
    readout, C = None, None
    if tomo is not None:
        spam_t = spam or SpamConfig()
        readout = ReadoutModel.from_spam(spam_t, p, tomo.shots)
        C = calibrate_C(spam_t, tomo.calibration_shots, seed, p)
    reports = []
    for k, name in enumerate(STAGES):
        if k > 0:
            labels = blocks[k - 1]
            rho = _evolve(rho, sequence_unitary(labels, gates, rows))
            ideal = sequence_unitary(labels) @ ideal
        rho = validate_density(rho)
        shown, mc = rho, None
        if tomo is not None:
            rec = simulate_record(rho, readout, tomo.shots, seed, key=(algorithm, str(index), name))
            res = mle_reconstruct(rec, C, ideal)
            shown = res.rho
            if tomo.mc_resamples:
                mc = mc_state_uncertainty(rec, C, ideal, tomo.mc_resamples, seed=seed + k)
        reports.append(StageReport(name, shown, np.outer(ideal, np.conj(ideal)),
                                   state_fidelity(shown, ideal),
                                   float(np.max(np.abs(np.imag(shown)))), mc))
    meta = {"noise": None if noise is None else noise.kind, "samples": 0 if rows is None else len(rows),
            "tomography": tomo is not None, "f_R": None if gates is None else gates.f_R}
    return reports, meta


def run_dj(oracle_index, noise: NoiseModel | None = None, tomo: TomoOptions | None = None, *,
           gates: GateSet | None = None, spam: SpamConfig | None = None, samples: int = 200,
           seed: int = 0, p: DeviceParams | None = None) -> AlgorithmResult:
    """Deutsch-Jozsa for oracle ``f0..f3``.

    Without ``noise`` and ``gates`` the circuit uses ideal unitaries.  With a
    noise model, calibrated pulse-level primitives are used and the state is
    averaged over ``samples`` quasi-static draws (one draw per shot).

    Returns
    -------
    AlgorithmResult
        Stage reports plus the verdict read from qubit 1 of the output state.
    """
    idx = _norm_index("deutsch-jozsa", oracle_index)
    reports, meta = _run("deutsch-jozsa", idx, dj_circuit(idx), noise, tomo, gates, spam,
                         samples, seed, p)
    out = np.real(np.diag(reports[-1].rho))
    p_down = float(out[2] + out[3])
    verdict = "constant" if p_down >= 0.5 else "balanced"
    return AlgorithmResult("deutsch-jozsa", idx, reports, verdict, max(p_down, 1 - p_down), meta)


def run_grover(oracle_index, noise: NoiseModel | None = None, tomo: TomoOptions | None = None, *,
               gates: GateSet | None = None, spam: SpamConfig | None = None, samples: int = 200,
               seed: int = 0, p: DeviceParams | None = None) -> AlgorithmResult:
    """Grover search for oracle ``f00..f11``; ``outcome`` is the found string."""
    idx = _norm_index("grover", oracle_index)
    reports, meta = _run("grover", idx, grover_circuit(idx), noise, tomo, gates, spam,
                         samples, seed, p)
    out = np.real(np.diag(reports[-1].rho))
    k = int(np.argmax(out))
    return AlgorithmResult("grover", idx, reports, f"{k >> 1}{k & 1}", float(out[k]), meta)
