"""Randomized benchmarking on simulated primitives.

The engine draws random Clifford sequences, appends the recovery element,
and propagates a batch of state vectors (or density matrices when a
decoherence channel or initialisation error is present), one per quasi-static
noise sample.  Every shot sees its own noise sample; outcomes are drawn shot
by shot through the readout model.

Three error models are available for the primitives:

``"ideal"``
    exact ideal unitaries (useful with an injected depolarizing channel);
``"simulated"``
    calibrated pulse-level propagators under the drawn noise;
``"noise-only"``
    ``V_ideal W_0^dag W_noise`` -- the ideal gate followed by the error that the
    noise adds to the calibrated propagator, leaving out the small coherent
    error present even without noise.

Fidelity conversions::

    one qubit:  F_C = (1 + p)/2          two qubits: F_C = (1 + 3p)/4
    F_p = 1 - (1 - F_C)/avg_primitives
    interleaved: F_gate = (1 + 3 p_int/p_ref)/4   (two qubits)
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import curve_fit

from .clifford import CliffordTable, cached_table, recovery_gate
from .device import DeviceParams
from .evolution import TrotterConfig
from .gates import GateSet, ideal_unitary, is_virtual
from .linalg import dagger
from .noise import NoiseModel, draw_samples, stream_rng
from .readout import ReadoutModel

__all__ = [
    "RBConfig", "RBCurves", "DecayFit", "run_rb", "fit_decay", "to_fidelities",
    "mc_uncertainty", "mc_interleaved", "sweep_fr", "default_lengths",
    "interleaved_fidelity",
]

log = logging.getLogger(__name__)


def default_lengths(num_qubits: int = 2, n_max: int | None = None, points: int = 12) -> list[int]:
    """Log-spaced sequence lengths (up to ~300 for one qubit, 271 for two)."""
    n_max = n_max or (300 if num_qubits == 1 else 271)
    grid = np.unique(np.round(np.geomspace(1, n_max, points)).astype(int))
    return [int(x) for x in grid]


@dataclass
class RBConfig:
    """Benchmarking run description.

    Parameters
    ----------
    lengths : list of int
        Numbers of random Cliffords (increasing).
    num_sequences : int
        Random sequences per length (paper: 16 for one qubit, 60 for two).
    shots_per_sequence : int or None
        Single shots per sequence; ``None`` records exact noise-averaged
        probabilities (no sampling noise).
    protocol : {"standard", "differenced"}
        ``differenced`` also runs the twin whose recovery targets all-down.
    interleaved : str, optional
        Primitive label inserted after every random Clifford.  ``"I"`` is
        interleaved as a perfect no-op, so it must give unit fidelity.
    noise : NoiseModel
    noise_repeats : int, optional
        Quasi-static samples per sequence; defaults to one per shot (or 100
        with exact probabilities).
    readout : ReadoutModel, optional
        Measurement model (ideal if omitted).
    init_error : float
        Population outside the start state at initialisation.
    error_model : {"simulated", "noise-only", "ideal"}
    depolarizing : float
        Injected average gate infidelity per physical primitive.
    rabi_decay : bool
        Add the phenomenological Rabi-decay depolarizing channel.
    num_qubits : {1, 2}
    qubit : int
        Target qubit for one-qubit benchmarking.
    spectator : {"down", "up"}
        State of the other qubit in one-qubit benchmarking.
    single_tone : bool
        One-qubit benchmarking with single-tone primitives at the
        spectator-conditioned frequency (fixed control state).
    start_state : {"down", "up"}
    seed : int
    threads : int
    """

    lengths: list = field(default_factory=lambda: default_lengths(2))
    num_sequences: int = 60
    shots_per_sequence: int | None = 400
    protocol: str = "standard"
    interleaved: str | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    noise_repeats: int | None = None
    readout: ReadoutModel | None = None
    init_error: float = 0.0
    error_model: str = "simulated"
    depolarizing: float = 0.0
    rabi_decay: bool = False
    num_qubits: int = 2
    qubit: int = 1
    spectator: str = "down"
    single_tone: bool = False
    start_state: str = "down"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.lengths = [int(n) for n in self.lengths]
        if not self.lengths or any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("lengths must be non-empty and strictly increasing")
        if self.lengths[0] < 0:
            raise ValueError("lengths must be >= 0")
        if self.num_sequences < 1 or (self.shots_per_sequence is not None and self.shots_per_sequence < 1):
            raise ValueError("sequence and shot counts must be > 0")
        if self.protocol not in ("standard", "differenced"):
            raise ValueError("protocol must be 'standard' or 'differenced'")
        if self.error_model not in ("simulated", "noise-only", "ideal"):
            raise ValueError("unknown error model")
        if self.num_qubits not in (1, 2):
            raise ValueError("num_qubits must be 1 or 2")
        if not 0 <= self.depolarizing < 0.75:
            raise ValueError("depolarizing strength out of range")

    @property
    def repeats(self) -> int:
        if self.noise_repeats is not None:
            return self.noise_repeats
        return self.shots_per_sequence or 100


@dataclass
class RBCurves:
    """Raw benchmarking data.

    ``prob[s, l]`` is the exact noise-averaged probability of the measured
    outcome for sequence ``s`` at length ``lengths[l]``; ``counts`` the
    sampled successes (``None`` with exact probabilities).  ``*_twin``
    hold the all-down-target twin of the differenced protocol.
    """

    lengths: np.ndarray
    prob: np.ndarray
    counts: np.ndarray | None
    shots: int | None
    num_qubits: int
    avg_primitives: float
    prob_twin: np.ndarray | None = None
    counts_twin: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def protocol(self) -> str:
        return "differenced" if self.prob_twin is not None else "standard"

    def observed(self, twin: bool = False) -> np.ndarray:
        """Per-sequence measured fractions (exact probabilities when unsampled)."""
        c = self.counts_twin if twin else self.counts
        p = self.prob_twin if twin else self.prob
        return p if c is None else c / self.shots

    def mean_curve(self, protocol: str | None = None) -> np.ndarray:
        protocol = protocol or self.protocol
        y = self.observed().mean(axis=0)
        if protocol == "differenced":
            y = y - self.observed(twin=True).mean(axis=0)
        return y

    def stderr_curve(self, protocol: str | None = None) -> np.ndarray:
        protocol = protocol or self.protocol
        y = self.observed()
        if protocol == "differenced":
            y = y - self.observed(twin=True)
        return y.std(axis=0, ddof=1) / math.sqrt(y.shape[0]) if y.shape[0] > 1 else np.zeros(y.shape[1])


class _Engine:
    """Shared state for simulating the sequences of one run."""

    def __init__(self, cfg: RBConfig, table: CliffordTable, p: DeviceParams,
                 gates: GateSet | None):
        self.cfg = cfg
        self.table = table
        self.p = p
        self.dm = cfg.depolarizing > 0 or cfg.rabi_decay or cfg.init_error > 0
        if gates is None and cfg.error_model != "ideal":
            gates = GateSet(p, single_tone=cfg.spectator if cfg.single_tone else None)
        self.gates = gates
        m = cfg.qubit
        if cfg.num_qubits == 1:
            self.words = [[_relabel(w, m) for w in word] for word in table.decomp]
        else:
            self.words = table.decomp
        self.labels = sorted({w for word in self.words for w in word}
                             | ({cfg.interleaved} if cfg.interleaved else set()))
        self.ideal = {lab: ideal_unitary(lab) for lab in self.labels}
        self.nominal = {}
        if cfg.error_model == "noise-only":
            self.nominal = {lab: gates.unitary(lab) for lab in self.labels
                            if not is_virtual(lab)}
        self.lam = self._channel_strengths()
        self.readout = cfg.readout or ReadoutModel()
        self.start = self._start_index()
        self.measure_index = self._measure_projector()

    # -- set-up helpers -------------------------------------------------
    def _channel_strengths(self) -> dict:
        cfg = self.cfg
        lam = {}
        for lab in self.labels:
            if is_virtual(lab):
                continue
            d = 4 if cfg.num_qubits == 2 else 2
            l = cfg.depolarizing * d / (d - 1)
            if cfg.rabi_decay and lab != "I":
                from .estimation import rabi_envelope
                f_R = self.gates.f_R if self.gates else None
                tr = (cfg.qubit, cfg.spectator) if cfg.num_qubits == 1 else (1, "down")
                r = rabi_envelope(1.0 / (4 * f_R), f_R, self.p.T2star[tr], self.p.T2rabi[tr])
                l = 1 - (1 - l) * r ** 2
            lam[lab] = l
        return lam

    def _start_index(self) -> int:
        cfg = self.cfg
        if cfg.num_qubits == 2:
            return 3 if cfg.start_state == "down" else 0
        tgt = 1 if cfg.start_state == "down" else 0
        spec = 1 if cfg.spectator == "down" else 0
        return 2 * tgt + spec if cfg.qubit == 1 else 2 * spec + tgt

    def _measure_projector(self):
        cfg = self.cfg
        if cfg.num_qubits == 2:
            return [0]                                  # both up
        return [0, 1] if cfg.qubit == 1 else [0, 2]     # target up

    # -- simulation -----------------------------------------------------
    def primitive_stack(self, noise: np.ndarray) -> dict:
        cfg = self.cfg
        s = noise.shape[0]
        out = {}
        zero_noise = not np.any(noise)
        for lab in self.labels:
            v = self.ideal[lab]
            if is_virtual(lab) or cfg.error_model == "ideal":
                out[lab] = np.diagonal(v).copy() if is_virtual(lab) else v
                continue
            if cfg.error_model == "noise-only":
                if zero_noise:
                    out[lab] = v
                    continue
                w = self.gates.unitary(lab, noise)
                out[lab] = v @ dagger(self.nominal[lab]) @ w
            else:
                out[lab] = self.gates.unitary(lab, None if zero_noise else noise)
            if out[lab].ndim == 3 and out[lab].shape[0] != s:
                out[lab] = np.broadcast_to(out[lab], (s, 4, 4))
        return out

    def apply(self, state, lab: str, prims: dict):
        u = prims[lab]
        if is_virtual(lab):
            if self.dm:
                return u[..., :, None] * state * np.conj(u)[..., None, :]
            return state * u
        if self.dm:
            state = u @ state @ dagger(u)
            lam = self.lam.get(lab, 0.0)
            if lam:
                state = self._depolarize(state, lam)
            return state
        if u.ndim == 2:
            return state @ u.T
        return np.einsum("sij,sj->si", u, state)

    def _depolarize(self, rho, lam):
        if self.cfg.num_qubits == 2:
            tr = np.trace(rho, axis1=-2, axis2=-1)[..., None, None]
            return (1 - lam) * rho + lam * tr * np.eye(4) / 4
        # single-qubit depolarizing on the target qubit only
        r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
        if self.cfg.qubit == 1:
            red = np.einsum("...ajak->...jk", r)
            mixed = np.einsum("ab,...jk->...ajbk", np.eye(2) / 2, red)
        else:
            red = np.einsum("...iaka->...ik", r)
            mixed = np.einsum("...ik,ab->...iakb", red, np.eye(2) / 2)
        return (1 - lam) * rho + lam * mixed.reshape(rho.shape)

    def initial(self, s: int):
        cfg = self.cfg
        if self.dm:
            rho = np.zeros((4, 4), dtype=complex)
            eps = cfg.init_error
            rho[np.diag_indices(4)] = eps / 3
            rho[self.start, self.start] = 1 - eps
            return np.broadcast_to(rho, (s, 4, 4)).copy()
        psi = np.zeros((s, 4), dtype=complex)
        psi[:, self.start] = 1
        return psi

    def success_prob(self, state) -> np.ndarray:
        pr = self.readout.probabilities(state)
        return pr[..., self.measure_index].sum(axis=-1)

    def run_one(self, seq_index: int, len_index: int):
        cfg = self.cfg
        n = cfg.lengths[len_index]
        rng = stream_rng(cfg.seed, "rb-seq", seq_index, len_index)
        seq = rng.integers(0, len(self.table), n)
        s = 1 if cfg.noise.is_zero else cfg.repeats
        noise = draw_samples(cfg.noise, s, "rb-noise", seq_index, len_index,
                             start=(seq_index * len(cfg.lengths) + len_index) * s)
        prims = self.primitive_stack(noise)
        state = self.initial(s)
        ideal_seq = []
        for c in seq:
            for lab in self.words[c]:
                state = self.apply(state, lab, prims)
            ideal_seq.append(int(c))
            if cfg.interleaved:
                # an interleaved identity is a true no-op (no idle primitive)
                if cfg.interleaved != "I":
                    state = self.apply(state, cfg.interleaved, prims)
                ideal_seq.append(self._interleaved_index())
        start = "down" if cfg.start_state == "down" else "up"
        targets = ["up"] + (["down"] if cfg.protocol == "differenced" else [])
        results = []
        for k, tgt in enumerate(targets):
            rec = recovery_gate(self.table, ideal_seq, tgt, start)
            st = state
            for lab in self.words[rec]:
                st = self.apply(st, lab, prims)
            p_shot = self.success_prob(st)
            exact = float(np.mean(p_shot))
            count = None
            if cfg.shots_per_sequence is not None:
                srng = stream_rng(cfg.seed, "rb-shots", seq_index, len_index, k)
                shots = cfg.shots_per_sequence
                if len(p_shot) == shots:
                    count = int(np.sum(srng.random(shots) < p_shot))
                else:
                    count = int(srng.binomial(shots, min(max(exact, 0.0), 1.0)))
            results.append((exact, count))
        return results

    def _interleaved_index(self) -> int:
        if not hasattr(self, "_int_idx"):
            u = ideal_unitary(self.cfg.interleaved)
            if self.cfg.num_qubits == 1:
                u = u[::2, ::2] if self.cfg.qubit == 1 else u[:2, :2]
            self._int_idx = self.table.index_of(u)
        return self._int_idx


def _relabel(label: str, m: int) -> str:
    return label if m == 1 or label == "I" else label.replace("1", str(m))


def run_rb(cfg: RBConfig, table: CliffordTable | None = None, p: DeviceParams | None = None,
           gates: GateSet | None = None) -> RBCurves:
    """Simulate a benchmarking experiment and return raw curves.

    Parameters
    ----------
    cfg : RBConfig
    table : CliffordTable, optional
        Built on demand for ``cfg.num_qubits``.
    p : DeviceParams, optional
        Device parameters (paper operating point by default).
    gates : GateSet, optional
        Calibrated primitives; built from ``p`` if omitted.

    Raises
    ------
    RuntimeError
        If a simulated primitive is not unitary.
    """
    p = p or DeviceParams()
    table = table or cached_table(cfg.num_qubits)
    if table.num_qubits != cfg.num_qubits:
        raise ValueError("Clifford table does not match num_qubits")
    eng = _Engine(cfg, table, p, gates)
    if eng.gates is not None and cfg.error_model != "ideal":
        for lab in eng.labels:
            if is_virtual(lab):
                continue
            u = eng.gates.unitary(lab)
            err = np.max(np.abs(u @ dagger(u) - np.eye(4)))
            if err > 1e-8:
                raise RuntimeError(f"primitive {lab} is not unitary (deviation {err:.2e})")
    n_l = len(cfg.lengths)
    jobs = [(s, l) for s in range(cfg.num_sequences) for l in range(n_l)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            res = list(ex.map(lambda j: eng.run_one(*j), jobs))
    else:
        res = [eng.run_one(*j) for j in jobs]
    nt = 2 if cfg.protocol == "differenced" else 1
    prob = np.zeros((nt, cfg.num_sequences, n_l))
    counts = np.zeros((nt, cfg.num_sequences, n_l), dtype=int)
    for (s, l), r in zip(jobs, res):
        for k, (exact, c) in enumerate(r):
            prob[k, s, l] = exact
            counts[k, s, l] = c if c is not None else 0
    sampled = cfg.shots_per_sequence is not None
    meta = dict(error_model=cfg.error_model, noise=cfg.noise.kind, seed=cfg.seed,
                repeats=cfg.repeats, interleaved=cfg.interleaved,
                depolarizing=cfg.depolarizing, identity_convention="one idle primitive")
    if eng.gates is not None:
        meta["f_R"] = eng.gates.f_R
    return RBCurves(np.array(cfg.lengths), prob[0], counts[0] if sampled else None,
                    cfg.shots_per_sequence, cfg.num_qubits, table.avg_primitives,
                    prob[1] if nt == 2 else None,
                    (counts[1] if sampled else None) if nt == 2 else None, meta)


# ---------------------------------------------------------------------------
# fitting and fidelity conversion
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    """Fitted decay ``A p^n + C`` (standard) or ``A p^n`` (differenced)."""

    p: float
    amp: float
    offset: float | None
    stderr: dict
    protocol: str
    num_qubits: int
    avg_primitives: float
    converged: bool = True
    notes: list = field(default_factory=list)
    fidelities: dict = field(default_factory=dict)
    mc_std: dict = field(default_factory=dict)


def _model_std(n, a, p, c):
    return a * np.power(p, n) + c


def _model_diff(n, a, p):
    return a * np.power(p, n)


def _fit_arrays(n: np.ndarray, y: np.ndarray, protocol: str):
    if len(n) < 3:
        raise ValueError("need at least 3 sequence lengths to fit")
    n = np.asarray(n, dtype=float)
    if protocol == "standard":
        c0 = float(y[-1])
        z = y - c0
        mask = z[:-1] > 1e-9
        if mask.sum() >= 2:
            slope, icpt = np.polyfit(n[:-1][mask], np.log(z[:-1][mask]), 1)
            p0 = float(np.clip(np.exp(slope), 1e-3, 1 - 1e-9))
        else:
            p0 = 0.99
        a0 = float(y[0] - c0) / p0 ** n[0] if p0 > 0 else float(y[0] - c0)
        if abs(a0) < 1e-12:
            a0 = 1e-3
        f = _model_std
        x0 = [a0, p0, c0]
        bounds = ([-np.inf, 0.0, -np.inf], [np.inf, 1.0, np.inf])
    else:
        mask = y > 1e-9
        if mask.sum() >= 2:
            slope, icpt = np.polyfit(n[mask], np.log(y[mask]), 1)
            p0 = float(np.clip(np.exp(slope), 1e-3, 1 - 1e-9))
            a0 = float(np.exp(icpt))
        else:
            p0, a0 = 0.99, float(max(y[0], 1e-3))
        f = _model_diff
        x0 = [a0, p0]
        bounds = ([-np.inf, 0.0], [np.inf, 1.0])
    return f, x0, bounds, n


def fit_curve(n, y, protocol: str = "standard", num_qubits: int = 2,
              avg_primitives: float = 1.0) -> DecayFit:
    """Least-squares fit of a mean curve; deterministic initialisation."""
    y = np.asarray(y, dtype=float)
    f, x0, bounds, n = _fit_arrays(n, y, protocol)
    notes, ok = [], True
    x0 = [float(np.clip(v, lo + 1e-12, hi - 1e-12)) if np.isfinite(lo) or np.isfinite(hi) else v
          for v, lo, hi in zip(x0, *bounds)]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, pcov = curve_fit(f, n, y, p0=x0, bounds=bounds, method="trf",
                                   xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    except (RuntimeError, ValueError) as exc:
        popt, pcov, ok = np.array(x0), np.full((len(x0), len(x0)), np.nan), False
        notes.append(f"fit did not converge: {exc}")
    resid = y - f(n, *popt)
    if not ok:
        notes.append(f"residual rms {np.sqrt(np.mean(resid ** 2)):.3g}")
    err = np.sqrt(np.clip(np.diag(pcov), 0, None)) if np.all(np.isfinite(pcov)) else \
        np.full(len(popt), np.nan)
    p = float(popt[1])
    if p >= 1.0 - 1e-12 or p <= 1e-12:
        notes.append("p at the boundary of [0, 1]")
    names = ("amp", "p", "offset")[:len(popt)]
    fit = DecayFit(p=p, amp=float(popt[0]), offset=float(popt[2]) if len(popt) == 3 else None,
                   stderr=dict(zip(names, map(float, err))), protocol=protocol,
                   num_qubits=num_qubits, avg_primitives=avg_primitives,
                   converged=ok, notes=notes)
    fit.fidelities = to_fidelities(fit, num_qubits, avg_primitives)
    return fit


def fit_decay(curves: RBCurves, protocol: str | None = None, n_max: int | None = None) -> DecayFit:
    """Fit the mean curve of a run.

    Parameters
    ----------
    curves : RBCurves
    protocol : {"standard", "differenced"}, optional
        Defaults to the protocol the data was taken with.
    n_max : int, optional
        Only use lengths ``<= n_max``.
    """
    protocol = protocol or curves.protocol
    if protocol == "differenced" and curves.prob_twin is None:
        raise ValueError("differenced fit needs the twin curve")
    y = curves.mean_curve(protocol)
    n = curves.lengths
    if n_max is not None:
        keep = n <= n_max
        n, y = n[keep], y[keep]
    return fit_curve(n, y, protocol, curves.num_qubits, curves.avg_primitives)


def to_fidelities(fit: DecayFit | float, num_qubits: int = 2, avg_primitives: float = 1.0,
                  ref: DecayFit | float | None = None, interleaved: bool = False) -> dict:
    """Clifford, primitive and (optionally) interleaved-gate fidelities.

    Raises
    ------
    ValueError
        If ``interleaved`` is requested without a reference fit.
    """
    p = fit.p if isinstance(fit, DecayFit) else float(fit)
    d = 2 ** num_qubits
    f_c = (1 + (d - 1) * p) / d
    out = {"F_C": f_c, "F_p": 1 - (1 - f_c) / avg_primitives}
    if interleaved and ref is None:
        raise ValueError("interleaved fidelity needs a reference fit")
    if ref is not None:
        p_ref = ref.p if isinstance(ref, DecayFit) else float(ref)
        out["F_interleaved"] = interleaved_fidelity(p, p_ref, num_qubits)
    return out


def interleaved_fidelity(p_int: float, p_ref: float, num_qubits: int = 2) -> float:
    """``(1 + (d-1) p_int/p_ref)/d``."""
    d = 2 ** num_qubits
    return (1 + (d - 1) * p_int / p_ref) / d


def _resample(curves: RBCurves, rng: np.random.Generator, twin: bool) -> np.ndarray:
    obs = curves.observed(twin)
    return rng.binomial(curves.shots, np.clip(obs, 0, 1)) / curves.shots


def _gauss_std(values: np.ndarray) -> float:
    values = values[np.isfinite(values)]
    if len(values) < 2 or np.ptp(values) == 0:
        return 0.0
    return float(stats.norm.fit(values)[1])


def mc_uncertainty(curves: RBCurves, fit: DecayFit | None = None, resamples: int = 500,
                   seed: int = 0, protocol: str | None = None) -> dict:
    """Monte Carlo standard deviations of ``p``, ``F_C`` and ``F_p``.

    Each sequence's outcome count is resampled binomially from its observed
    fraction, the mean curve is refitted, and a Gaussian is fitted to the
    resulting distribution.  Exact-probability data gives zeros.
    """
    protocol = protocol or (fit.protocol if fit else curves.protocol)
    if curves.shots is None:
        out = {"p": 0.0, "F_C": 0.0, "F_p": 0.0, "note": "exact probabilities"}
        if fit is not None:
            fit.mc_std = out
        return out
    rng = stream_rng(seed, "rb-mc")
    vals = {"p": [], "F_C": [], "F_p": []}
    for _ in range(resamples):
        y = _resample(curves, rng, False).mean(axis=0)
        if protocol == "differenced":
            y = y - _resample(curves, rng, True).mean(axis=0)
        f = fit_curve(curves.lengths, y, protocol, curves.num_qubits, curves.avg_primitives)
        vals["p"].append(f.p)
        vals["F_C"].append(f.fidelities["F_C"])
        vals["F_p"].append(f.fidelities["F_p"])
    out = {k: _gauss_std(np.array(v)) for k, v in vals.items()}
    if fit is not None:
        fit.mc_std = out
    return out


def mc_interleaved(curves_int: RBCurves, curves_ref: RBCurves, resamples: int = 500,
                   seed: int = 0, protocol: str | None = None) -> float:
    """Monte Carlo std of the interleaved-gate fidelity."""
    if curves_int.shots is None or curves_ref.shots is None:
        return 0.0
    protocol = protocol or curves_ref.protocol
    rng = stream_rng(seed, "irb-mc")
    vals = []
    for _ in range(resamples):
        ps = []
        for cv in (curves_int, curves_ref):
            y = _resample(cv, rng, False).mean(axis=0)
            if protocol == "differenced":
                y = y - _resample(cv, rng, True).mean(axis=0)
            ps.append(fit_curve(cv.lengths, y, protocol, cv.num_qubits, cv.avg_primitives).p)
        vals.append(interleaved_fidelity(ps[0], ps[1], curves_ref.num_qubits))
    return _gauss_std(np.array(vals))


# ---------------------------------------------------------------------------
# Rabi-frequency sweep
# ---------------------------------------------------------------------------

def idle_time_for_exchange(J: float) -> float:
    """Extra idle ``(2 - sqrt(15)/2)/J`` making a synchronised primitive last ``2/J``."""
    return (2 - math.sqrt(15) / 2) / J


def sweep_fr(p_base: DeviceParams | None, fr_grid, mode: str = "dephasing-only", *,
             t2star: float = 3.0, sigma_J: float = 0.03, num_sequences: int = 60,
             noise_repeats: int = 100, lengths=None, error_model: str = "noise-only",
             seed: int = 0, cfg: TrotterConfig | None = None, threads: int = 1) -> dict:
    """Two-qubit primitive infidelity versus Rabi frequency with ``J = sqrt(15) f_R``.

    Returns a dict ``f_R -> {"infidelity", "F_p", "p", "J"}``.  In
    ``"with-idle"`` mode every primitive is followed by the idle of
    :func:`idle_time_for_exchange`.

    Every point uses the same length grid (``default_lengths(2)`` unless
    given): under quasi-static noise the ensemble decay is not a single
    exponential, so the fitted rate depends on the window and a common
    window keeps the points comparable.
    """
    if mode not in ("dephasing-only", "with-idle"):
        raise ValueError("mode must be 'dephasing-only' or 'with-idle'")
    p_base = p_base or DeviceParams()
    table = cached_table(2)
    noise = NoiseModel.from_t2star(t2star, sigma_J=sigma_J, seed=seed)
    out = {}
    for f_R in fr_grid:
        J = math.sqrt(15) * f_R
        p = p_base.replace(J=J)
        idle = idle_time_for_exchange(J) if mode == "with-idle" else 0.0
        gates = GateSet(p, f_R=f_R, cfg=cfg or TrotterConfig(), idle_extra=idle)
        lens = lengths or default_lengths(2)
        rb = RBConfig(lengths=lens, num_sequences=num_sequences, shots_per_sequence=None,
                      noise=noise, noise_repeats=noise_repeats, error_model=error_model,
                      seed=seed, threads=threads)
        curves = run_rb(rb, table, p, gates)
        fit = fit_decay(curves)
        out[float(f_R)] = {"infidelity": 1 - fit.fidelities["F_p"], "F_p": fit.fidelities["F_p"],
                           "p": fit.p, "J": J, "converged": fit.converged}
        log.info("sweep f_R=%.3f MHz: infidelity %.3e", f_R, out[float(f_R)]["infidelity"])
    return out
