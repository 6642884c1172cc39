"""Virtual coherence experiments, decay fits and Bayesian frequency tracking.

Three kinds of sequence are simulated on one CROT transition with the pulse
engine: a Ramsey fringe (two pi/2 pulses with an artificial detuning applied
as a phase of the second pulse), a Hahn echo (pi/2 - pi - pi/2 with the last
phase swept) and a Rabi oscillation.  The resulting ensemble curves are fitted
to extract ``T2*``, ``T2_echo`` (with a stretch exponent) and the Rabi
envelope.

Single Ramsey records can also be sampled shot by shot and turned into a
frequency estimate on a posterior grid, which in turn lets a noise trace be
tracked and decomposed into qubit and exchange fluctuations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .device import TRANSITION_PAIRS, DeviceParams, parse_transition, resonances
from .evolution import (
    N_LEVELS, DriveTone, PulseSchedule, TrotterConfig, halfpi_time, noise_hamiltonian,
    propagate, sync_rabi,
)
from .noise import NoiseModel, NoiseTrace, draw_samples, ou_paths, stream_rng

__all__ = [
    "CoherenceCurve", "DecayParams", "RamseyRecord", "BayesResult", "RabiDecayMetric",
    "default_ramsey_times", "simulate_ramsey", "simulate_echo", "simulate_rabi",
    "fit_decay_curve", "rabi_envelope", "rabi_decay_metric", "synthetic_ramsey_record",
    "sample_ramsey_record", "bayes_estimate", "decompose_trace", "recompose_trace",
    "track_trace", "CYCLE_SECONDS",
]

CYCLE_SECONDS = 1.706            # one four-transition estimation cycle


class FitWarning(RuntimeWarning):
    """A least-squares fit did not converge cleanly."""


@dataclass
class CoherenceCurve:
    """Ensemble-averaged coherence data.

    ``prob`` is the spin-up probability of the target (Ramsey, Rabi) or the
    echo amplitude extracted from the final-phase sweep (echo).
    """

    kind: str
    times: np.ndarray
    prob: np.ndarray
    transition: tuple = (1, "down")
    meta: dict = field(default_factory=dict)


@dataclass
class DecayParams:
    """Result of :func:`fit_decay_curve` (times in µs, frequencies in MHz)."""

    kind: str
    T2: float
    amplitude: float
    offset: float = 0.0
    alpha: float = 2.0
    frequency: float = 0.0
    phase: float = 0.0
    f_R: float = 0.0
    T2star: float = math.inf
    scale: float = 1.0
    converged: bool = True
    stderr: dict = field(default_factory=dict)


@dataclass
class RamseyRecord:
    """Single Ramsey record: spin-up counts per evolution time."""

    times: np.ndarray
    counts: np.ndarray
    shots: int = 1

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        if self.times.shape != self.counts.shape:
            raise ValueError("times and counts must have the same shape")
        if np.any(self.counts < 0) or np.any(self.counts > self.shots):
            raise ValueError("counts must lie in [0, shots]")


@dataclass
class BayesResult:
    f_est: float
    std: float
    grid: np.ndarray
    posterior: np.ndarray
    edge_mass: float
    window_too_narrow: bool


@dataclass(frozen=True)
class RabiDecayMetric:
    """``R`` is the envelope at the pi/2 time; ``D = 1 - R`` (smaller is better)."""

    D: float
    R: float
    t_hp: float


def default_ramsey_times() -> np.ndarray:
    """0.04 µs to 4.0 µs in 0.04 µs steps."""
    return np.round(np.arange(1, 101) * 0.04, 10)


# --------------------------------------------------------------------------
# Pulse-level simulation helpers

def _noise_rows(noise: NoiseModel | None, samples: int, *key) -> np.ndarray:
    if noise is None or noise.is_zero:
        return np.zeros((1, 3))
    return draw_samples(noise, samples, *key)


def _phase_frame(phi: float) -> np.ndarray:
    """Diagonal ``D`` with ``D U(0) D^dag = U(phi)`` for any drive tone."""
    return np.exp(1j * phi * N_LEVELS)


def _pulse(p: DeviceParams, tr, f_R: float, duration: float, rows: np.ndarray,
           cfg: TrotterConfig | None) -> np.ndarray:
    f = resonances(p).f[tr]
    sched = PulseSchedule((DriveTone(f, 0.0, f_R, duration),))
    if cfg is None:
        # Resolve the fastest off-resonant term; the product costs O(log N).
        n = max(1000, int(math.ceil(duration * 2 * math.pi * 400.0 / 0.05)))
        cfg = TrotterConfig(n)
    return propagate(p, sched, rows, cfg)


def _idle_diag(rows: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Idle phases with shape (T, S, 4)."""
    dh = noise_hamiltonian(rows)
    return np.exp(-2j * np.pi * tau[:, None, None] * dh[None])


def simulate_ramsey(p: DeviceParams, transition=(1, "down"), noise: NoiseModel | None = None,
                    times=None, *, samples: int = 2000, detuning: float = 1.0,
                    f_R: float | None = None, seed_key=("ramsey",),
                    cfg: TrotterConfig | None = None) -> CoherenceCurve:
    """Ensemble Ramsey fringe ``pi/2 - tau - pi/2(phi)`` on one transition.

    The target starts in its spin-down state with the control already in the
    state selected by the transition.  The second pulse carries the phase
    ``2 pi detuning tau``, which emulates an off-resonant drive.

    Parameters
    ----------
    samples : int
        Quasi-static noise draws averaged per time point.
    detuning : float
        Artificial fringe frequency (MHz).
    """
    tr = parse_transition(transition)
    times = default_ramsey_times() if times is None else np.asarray(times, dtype=float)
    f_R = f_R or sync_rabi(p.J)
    i, j = TRANSITION_PAIRS[tr]
    rows = _noise_rows(noise, samples, *seed_key)
    u = _pulse(p, tr, f_R, halfpi_time(f_R), rows, cfg)          # (S, 4, 4)
    psi1 = u[:, :, j]                                             # (S, 4)
    idle = _idle_diag(rows, times) * psi1[None]                   # (T, S, 4)
    phases = np.array([_phase_frame(2 * np.pi * detuning * t) for t in times])   # (T, 4)
    # U(phi) = D U D^dag applied row-wise: amplitude on i only is needed.
    amp = np.einsum("sk,tk,tsk->ts", u[:, i, :], np.conj(phases), idle)
    amp = amp * phases[:, i][:, None]
    prob = np.mean(np.abs(amp) ** 2, axis=1)
    return CoherenceCurve("ramsey", times, prob, tr,
                          {"detuning": detuning, "f_R": f_R, "samples": len(rows)})


def simulate_echo(p: DeviceParams, transition=(1, "down"), noise: NoiseModel | None = None,
                  times=None, *, samples: int = 2000, phase_steps: int = 8,
                  f_R: float | None = None, seed_key=("echo",),
                  cfg: TrotterConfig | None = None) -> CoherenceCurve:
    """Hahn-echo amplitude versus total free evolution time.

    Sequence ``pi/2 - tau/2 - pi - tau/2 - pi/2(phi)``; the final phase is
    swept over ``phase_steps`` values and the amplitude is read off the first
    Fourier component, ``P(phi) = 1/2 + (a/2) cos(phi + phi0)``.

    Quasi-static noise is refocused exactly during the idles.  For the
    Ornstein-Uhlenbeck model each draw is a time-correlated path and the idle
    phases are its integrals over each half; the pulses see the path value at
    time zero.
    """
    tr = parse_transition(transition)
    times = np.linspace(0.5, 20.0, 40) if times is None else np.asarray(times, dtype=float)
    f_R = f_R or sync_rabi(p.J)
    i, j = TRANSITION_PAIRS[tr]
    ou = noise is not None and noise.kind == "ornstein-uhlenbeck" and not noise.is_zero
    if ou:
        first, second, rows = _ou_halves(noise, times, samples, seed_key)
    else:
        rows = _noise_rows(noise, samples, *seed_key)
        dh = noise_hamiltonian(rows)
        first = second = np.exp(-2j * np.pi * 0.5 * times[:, None, None] * dh[None])
    u = _pulse(p, tr, f_R, halfpi_time(f_R), rows, cfg)
    upi = u @ u
    psi = first * u[:, :, j][None]                                # (T, S, 4)
    psi = np.einsum("sab,tsb->tsa", upi, psi) * second
    phis = 2 * np.pi * np.arange(phase_steps) / phase_steps
    probs = []
    for phi in phis:
        dp = _phase_frame(phi)
        amp = np.einsum("sk,tsk->ts", u[:, i, :] * np.conj(dp)[None], psi) * dp[i]
        probs.append(np.mean(np.abs(amp) ** 2, axis=1))
    probs = np.array(probs)                                       # (K, T)
    c = np.sum(probs * np.exp(-1j * phis)[:, None], axis=0)
    amp = 4 * np.abs(c) / phase_steps
    return CoherenceCurve("echo", times, amp, tr, {"f_R": f_R, "samples": len(rows),
                                                   "noise": None if noise is None else noise.kind})


def _ou_halves(noise: NoiseModel, times: np.ndarray, samples: int, seed_key):
    t_max = float(np.max(times))
    dt = min(noise.tau_c / 20.0, t_max / 2000.0)
    n_steps = int(math.ceil(t_max / dt)) + 1
    rng = stream_rng(noise.seed, *seed_key, "ou")
    comps = [ou_paths(s, noise.tau_c, n_steps, dt, rng, samples)
             for s in (noise.sigma_f1, noise.sigma_f2, noise.sigma_J)]
    df1, df2, dj = comps                                          # (S, n_steps)
    paths = np.stack([(df1 + df2) / 2, df2 - df1, dj], axis=-1)   # (S, n, 3)
    dh = noise_hamiltonian(paths)                                 # (S, n, 4)
    cum = np.concatenate([np.zeros((samples, 1, 4)),
                          np.cumsum(0.5 * (dh[:, 1:] + dh[:, :-1]) * dt, axis=1)], axis=1)

    def integral(t):
        x = np.asarray(t) / dt
        k = np.minimum(np.floor(x).astype(int), cum.shape[1] - 2)
        w = (x - k)[:, None, None]
        return np.transpose((1 - w) * cum[:, k].transpose(1, 0, 2) + w * cum[:, k + 1].transpose(1, 0, 2),
                            (0, 1, 2))

    mid, end = integral(times / 2), integral(times)
    first = np.exp(-2j * np.pi * mid)
    second = np.exp(-2j * np.pi * (end - mid))
    return first, second, paths[:, 0, :]


def simulate_rabi(p: DeviceParams, transition=(1, "down"), noise: NoiseModel | None = None,
                  times=None, *, samples: int = 2000, f_R: float | None = None,
                  include_t2rabi: bool = True, seed_key=("rabi",)) -> CoherenceCurve:
    """Ensemble Rabi oscillation (target spin-up probability versus burst length).

    Quasi-static noise produces the dephasing envelope; the additional
    exponential ``exp(-t/T2_rabi)`` of the device is applied to the
    oscillating part when ``include_t2rabi`` is set.
    """
    tr = parse_transition(transition)
    f_R = f_R or sync_rabi(p.J)
    times = np.linspace(0.02, 2.0, 100) if times is None else np.asarray(times, dtype=float)
    i, j = TRANSITION_PAIRS[tr]
    rows = _noise_rows(noise, samples, *seed_key)
    prob = np.empty(len(times))
    for k, t in enumerate(times):
        u = _pulse(p, tr, f_R, float(t), rows, None)
        prob[k] = np.mean(np.abs(u[:, i, j]) ** 2)
    if include_t2rabi and math.isfinite(p.T2rabi[tr]):
        prob = 0.5 + (prob - 0.5) * np.exp(-times / p.T2rabi[tr])
    return CoherenceCurve("rabi", times, prob, tr, {"f_R": f_R, "samples": len(rows)})


# --------------------------------------------------------------------------
# Envelopes and fits

def rabi_envelope(t, f_R: float, t2star: float, t2rabi: float, scale: float = 1.0):
    """Rabi-oscillation envelope ``R(t) = exp(-t/T2_rabi) W(t)``.

    ``W(t) = (1 + (t / (scale f_R T2*^2))^2)^(-1/4)``.  ``scale = 1`` is the
    conventional form; Gaussian quasi-static detuning averaged exactly gives
    ``scale = pi``.
    """
    t = np.asarray(t, dtype=float)
    dec = np.ones_like(t) if math.isinf(t2rabi) else np.exp(-t / t2rabi)
    if math.isinf(t2star):
        w = np.ones_like(t)
    else:
        w = (1.0 + (t / (scale * f_R * t2star ** 2)) ** 2) ** -0.25
    out = dec * w
    return float(out) if out.ndim == 0 else out


def rabi_decay_metric(params: DecayParams | None = None, *, f_R: float | None = None,
                      t2star: float | None = None, t2rabi: float | None = None,
                      scale: float | None = None) -> RabiDecayMetric:
    """Envelope loss accumulated during one pi/2 CROT.

    Pass either a fitted ``kind="rabi"`` :class:`DecayParams` or the three
    parameters directly.  Returns both ``R(t_hp)`` and ``D = 1 - R(t_hp)``.
    """
    if params is not None:
        if params.kind != "rabi":
            raise ValueError("rabi_decay_metric needs kind='rabi' parameters")
        f_R, t2star, t2rabi = params.f_R, params.T2star, params.T2
        scale = params.scale if scale is None else scale
    if f_R is None or t2star is None or t2rabi is None:
        raise ValueError("f_R, t2star and t2rabi are required")
    t_hp = halfpi_time(f_R)
    r = rabi_envelope(t_hp, f_R, t2star, t2rabi, 1.0 if scale is None else scale)
    return RabiDecayMetric(1.0 - r, r, t_hp)


def _ramsey_model(t, a, t2, f, ph, b):
    return a * np.exp(-(t / t2) ** 2) * np.cos(2 * np.pi * f * t + ph) + b


def _echo_model(t, a, t2, alpha):
    return a * np.exp(-(t / t2) ** alpha)


def _dominant_frequency(t, y) -> float:
    fs = np.linspace(0.05, 0.5 / np.min(np.diff(t)), 2000)
    yc = y - np.mean(y)
    power = np.abs(np.exp(-2j * np.pi * fs[:, None] * t[None]) @ yc)
    return float(fs[np.argmax(power)])


def fit_decay_curve(curve: CoherenceCurve, kind: str | None = None, *,
                    t2star: float | None = None, scale: float = 1.0) -> DecayParams:
    """Least-squares fit of a coherence curve.

    ``ramsey``: ``a exp(-(t/T2*)^2) cos(2 pi f t + ph) + b``.
    ``echo``: ``a exp(-(t/T2)^alpha)`` with ``alpha`` in (0.5, 3).
    ``rabi``: ``b + a R(t) cos(2 pi f_R t)`` with ``R`` from
    :func:`rabi_envelope`; ``t2star`` fixes the dephasing time (recommended,
    since the two decay constants are otherwise nearly degenerate).

    Non-convergence issues a ``FitWarning`` and sets ``converged=False``.
    """
    kind = kind or curve.kind
    t = np.asarray(curve.times, dtype=float)
    y = np.asarray(curve.prob, dtype=float)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", category=Warning)
            if kind == "ramsey":
                out = _fit_ramsey(t, y)
            elif kind == "echo":
                out = _fit_echo(t, y)
            elif kind == "rabi":
                out = _fit_rabi(t, y, curve.meta.get("f_R"), t2star, scale)
            else:
                raise ValueError(f"unknown decay kind {kind!r}")
    except (RuntimeError, Warning) as exc:
        warnings.warn(f"{kind} fit did not converge: {exc}", FitWarning, stacklevel=2)
        return DecayParams(kind, math.nan, math.nan, converged=False)
    return out


def _fit_ramsey(t, y) -> DecayParams:
    f0 = _dominant_frequency(t, y)
    amp0 = 0.5 * (np.max(y) - np.min(y))
    best = None
    for ph0 in (0.0, np.pi / 2, np.pi, -np.pi / 2):
        try:
            popt, pcov = curve_fit(_ramsey_model, t, y, p0=[amp0, 0.5 * t[-1], f0, ph0, np.mean(y)],
                                   maxfev=20000)
        except RuntimeError:
            continue
        res = np.sum((_ramsey_model(t, *popt) - y) ** 2)
        if best is None or res < best[0]:
            best = (res, popt, pcov)
    if best is None:
        raise RuntimeError("no starting point converged")
    _, popt, pcov = best
    a, t2, f, ph, b = popt
    if a < 0:
        a, ph = -a, ph + np.pi
    err = np.sqrt(np.abs(np.diag(pcov)))
    return DecayParams("ramsey", abs(t2), a, b, 2.0, abs(f), float(np.angle(np.exp(1j * ph))),
                       stderr={"T2": err[1], "frequency": err[2]})


def _fit_echo(t, y) -> DecayParams:
    a0 = float(np.max(y))
    below = np.nonzero(y < a0 / np.e)[0]
    t0 = float(t[below[0]]) if len(below) else 2 * float(t[-1])
    popt, pcov = curve_fit(_echo_model, t, y, p0=[a0, t0, 1.5],
                           bounds=([0, 1e-6, 0.5], [2, np.inf, 3.0]), maxfev=20000)
    err = np.sqrt(np.abs(np.diag(pcov)))
    ok = 0.5 < popt[2] < 3.0 and popt[1] > 0
    return DecayParams("echo", popt[1], popt[0], 0.0, popt[2], converged=bool(ok),
                       stderr={"T2": err[1], "alpha": err[2]})


def _fit_rabi(t, y, f_R, t2star, scale) -> DecayParams:
    f0 = f_R or _dominant_frequency(t, y)
    fixed = t2star is not None

    def model(tt, a, b, f, t2r, *rest):
        ts = t2star if fixed else rest[0]
        return b + a * rabi_envelope(tt, f, ts, t2r, scale) * np.cos(2 * np.pi * f * tt)

    p0 = [-0.5, 0.5, f0, 50.0] + ([] if fixed else [3.0])
    lo = [-1, 0, 0.5 * f0, 1e-3] + ([] if fixed else [1e-3])
    hi = [1, 1, 1.5 * f0, 1e6] + ([] if fixed else [1e6])
    popt, pcov = curve_fit(model, t, y, p0=p0, bounds=(lo, hi), maxfev=20000)
    err = np.sqrt(np.abs(np.diag(pcov)))
    ts = t2star if fixed else popt[4]
    return DecayParams("rabi", popt[3], abs(popt[0]), popt[1], 1.0, popt[2], 0.0, popt[2],
                       ts, scale, stderr={"T2": err[3]})


# --------------------------------------------------------------------------
# Bayesian frequency estimation

def synthetic_ramsey_record(f: float, times=None, shots: int = 1, *, visibility: float = 1.0,
                            t2star: float = math.inf,
                            rng: np.random.Generator | int = 0) -> RamseyRecord:
    """Sample a record from ``P(up) = (1 + v exp(-(t/T2*)^2) cos(2 pi f t)) / 2``."""
    times = default_ramsey_times() if times is None else np.asarray(times, dtype=float)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    pu = _likelihood_up(np.array([f]), times, visibility, t2star)[0]
    return RamseyRecord(times, rng.binomial(shots, pu), shots)


def sample_ramsey_record(curve: CoherenceCurve, shots: int = 1,
                         rng: np.random.Generator | int = 0) -> RamseyRecord:
    """Draw a record from a simulated Ramsey probability curve."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return RamseyRecord(curve.times, rng.binomial(shots, np.clip(curve.prob, 0, 1)), shots)


def _likelihood_up(fgrid, times, visibility, t2star):
    env = np.ones_like(times) if math.isinf(t2star) else np.exp(-(times / t2star) ** 2)
    pu = 0.5 * (1 + visibility * env[None, :] * np.cos(2 * np.pi * fgrid[:, None] * times[None, :]))
    return np.clip(pu, 1e-12, 1 - 1e-12)


def bayes_estimate(record: RamseyRecord, window: tuple = (0.0, 2.0), resolution: float = 0.002,
                   *, visibility: float = 1.0, t2star: float = math.inf) -> BayesResult:
    """Grid posterior of the fringe frequency for one record (uniform prior).

    Returns the posterior mean and standard deviation.  If more than 10% of
    the posterior mass sits in the outer 5% of the window on either side the
    result is flagged ``window_too_narrow`` and a warning is issued.
    """
    lo, hi = map(float, window)
    if not hi > lo or not resolution > 0:
        raise ValueError("window must be increasing and resolution > 0")
    grid = lo + resolution * np.arange(int(round((hi - lo) / resolution)) + 1)
    pu = _likelihood_up(grid, record.times, visibility, t2star)
    n_up = record.counts[None, :]
    logl = np.sum(n_up * np.log(pu) + (record.shots - n_up) * np.log1p(-pu), axis=1)
    post = np.exp(logl - np.max(logl))
    post /= post.sum()
    mean = float(post @ grid)
    std = float(np.sqrt(post @ (grid - mean) ** 2))
    edge = max(1, int(round(0.05 * len(grid))))
    edge_mass = float(max(post[:edge].sum(), post[-edge:].sum()))
    flag = edge_mass > 0.1 and visibility > 0
    if flag:
        warnings.warn("posterior mass at window edge exceeds 10%; widen the window",
                      RuntimeWarning, stacklevel=2)
    return BayesResult(mean, std, grid, post, edge_mass, flag)


def decompose_trace(f1_up, f1_down, f2_up, f2_down) -> tuple:
    """Per-transition shifts to ``(df1, df2, dJ/2)``.

    ``df_m = (df_{m,up} + df_{m,down}) / 2`` and ``dJ/2`` is the mean of
    ``(df_{m,up} - df_{m,down}) / 2`` over both qubits.
    """
    arrs = [np.asarray(a, dtype=float) for a in (f1_up, f1_down, f2_up, f2_down)]
    if len({a.shape for a in arrs}) != 1:
        raise ValueError("frequency series must have equal length")
    a, b, c, d = arrs
    return (a + b) / 2, (c + d) / 2, ((a - b) + (c - d)) / 4


def recompose_trace(df1, df2, djhalf) -> tuple:
    """Inverse of :func:`decompose_trace`: ``df_{m,sigma} = df_m ± dJ/2``."""
    return df1 + djhalf, df1 - djhalf, df2 + djhalf, df2 - djhalf


def track_trace(trace: NoiseTrace, f0: float = 1.0, *, times=None, shots: int = 1,
                visibility: float = 1.0, t2star: float = math.inf, window: float = 1.0,
                resolution: float = 0.002, seed: int = 0) -> dict:
    """Emulate frequency tracking over a replayed trace.

    For every trace entry four Ramsey records (one per transition) are
    sampled at fringe frequency ``f0 + df_{m,sigma}``, estimated, and
    decomposed.  Cycle timestamps are ``CYCLE_SECONDS`` apart.

    Returns
    -------
    dict
        ``times`` (s), per-transition ``estimates`` and ``errors`` (posterior
        std), and the decomposed ``df1``, ``df2``, ``djhalf`` series.
    """
    shifts = trace.transition_shifts()
    order = [(1, "up"), (1, "down"), (2, "up"), (2, "down")]
    est = {k: np.empty(len(trace)) for k in order}
    err = {k: np.empty(len(trace)) for k in order}
    for n in range(len(trace)):
        for k in order:
            rng = stream_rng(seed, "track", n, f"{k[0]}{k[1]}")
            rec = synthetic_ramsey_record(f0 + shifts[k][n], times, shots, visibility=visibility,
                                          t2star=t2star, rng=rng)
            res = bayes_estimate(rec, (f0 - window, f0 + window), resolution,
                                 visibility=visibility, t2star=t2star)
            est[k][n] = res.f_est - f0
            err[k][n] = res.std
    df1, df2, djh = decompose_trace(*(est[k] for k in order))
    return {"times": trace.times[0] + CYCLE_SECONDS * np.arange(len(trace)),
            "estimates": est, "errors": err, "df1": df1, "df2": df2, "djhalf": djh}
