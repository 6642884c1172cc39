"""Resonance-frequency noise: quasi-static draws, trace replay, OU generator.

Noise enters the dynamics as three frequency offsets (MHz)

* ``dEZ``  -- shift of the average Zeeman frequency, ``(df1 + df2)/2``
* ``ddEz`` -- shift of the effective Zeeman difference, ``df2 - df1``
* ``dJ``   -- shift of the exchange coupling

where ``df_m`` is the shift of qubit ``m`` averaged over the control state.
The per-transition shifts follow as ``df_{m,sigma} = df_m ± dJ/2`` (``+``
for control up).
"""
from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "NoiseSample", "NoiseTrace", "NoiseModel", "TraceFormatError",
    "sigma_from_t2star", "draw_sample", "draw_samples", "load_trace",
    "save_trace", "ou_trace", "ou_paths", "stream_rng",
]

TRACE_HEADER = ("time_s", "df1_mhz", "df2_mhz", "djhalf_mhz")


def stream_rng(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``.

    String components are hashed with CRC-32 so that streams can be named by
    purpose, e.g. ``stream_rng(7, "rb", seq_index)``.
    """
    ints = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in key:
        ints.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return np.random.default_rng(ints)


@dataclass(frozen=True)
class NoiseSample:
    """Quasi-static offsets for one shot (MHz)."""

    dEZ: float = 0.0
    ddEz: float = 0.0
    dJ: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.dEZ, self.ddEz, self.dJ)):
            raise ValueError("NoiseSample values must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.dEZ, self.ddEz, self.dJ])

    @classmethod
    def from_qubit_shifts(cls, df1: float, df2: float, dJ: float = 0.0) -> "NoiseSample":
        return cls((df1 + df2) / 2, df2 - df1, dJ)


@dataclass(frozen=True)
class NoiseTrace:
    """Time series of (df1, df2, dJ/2) offsets; ``times`` in seconds, offsets in MHz."""

    times: np.ndarray
    df1: np.ndarray
    df2: np.ndarray
    djhalf: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.times, self.df1, self.df2, self.djhalf)]
        n = len(arrs[0])
        if any(len(a) != n for a in arrs):
            raise ValueError("NoiseTrace columns must have equal length")
        if n > 1 and np.any(np.diff(arrs[0]) <= 0):
            raise ValueError("NoiseTrace times must be strictly increasing")
        for name, a in zip(("times", "df1", "df2", "djhalf"), arrs):
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return len(self.times)

    def transition_shifts(self) -> dict:
        """Per-transition shifts ``df_{m,sigma} = df_m ± dJ/2``."""
        return {
            (1, "up"): self.df1 + self.djhalf, (1, "down"): self.df1 - self.djhalf,
            (2, "up"): self.df2 + self.djhalf, (2, "down"): self.df2 - self.djhalf,
        }


@dataclass(frozen=True)
class NoiseModel:
    """Noise source description.

    ``kind`` is one of ``"quasi-static-gaussian"``, ``"trace-replay"`` or
    ``"ornstein-uhlenbeck"``.  Standard deviations are in MHz, ``tau_c`` in µs.
    For the OU model ``sigma_f1``/``sigma_f2``/``sigma_J`` are the stationary
    standard deviations of each component.
    """

    kind: str = "quasi-static-gaussian"
    sigma_f1: float = 0.0
    sigma_f2: float = 0.0
    sigma_J: float = 0.0
    tau_c: float = math.inf
    trace: NoiseTrace | None = field(default=None, compare=False)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("quasi-static-gaussian", "trace-replay", "ornstein-uhlenbeck"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if min(self.sigma_f1, self.sigma_f2, self.sigma_J) < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if not self.tau_c > 0:
            raise ValueError("tau_c must be > 0")
        if self.kind == "trace-replay" and (self.trace is None or len(self.trace) == 0):
            raise ValueError("trace-replay noise needs a non-empty trace")

    @classmethod
    def quasi_static(cls, sigma_f1: float, sigma_f2: float | None = None,
                     sigma_J: float = 0.0, seed: int = 0) -> "NoiseModel":
        return cls("quasi-static-gaussian", sigma_f1,
                   sigma_f1 if sigma_f2 is None else sigma_f2, sigma_J, seed=seed)

    @classmethod
    def from_t2star(cls, t2star: float, sigma_J: float = 0.03, seed: int = 0) -> "NoiseModel":
        """Quasi-static model whose single-qubit std reproduces ``T2*`` on both qubits."""
        s = sigma_from_t2star(t2star)
        return cls("quasi-static-gaussian", s, s, sigma_J, seed=seed)

    @classmethod
    def ornstein_uhlenbeck(cls, sigma: float, tau_c: float, sigma_J: float = 0.0,
                           seed: int = 0) -> "NoiseModel":
        return cls("ornstein-uhlenbeck", sigma, sigma, sigma_J, tau_c=tau_c, seed=seed)

    @classmethod
    def replay(cls, trace: NoiseTrace, seed: int = 0) -> "NoiseModel":
        return cls("trace-replay", trace=trace, seed=seed)

    @property
    def is_zero(self) -> bool:
        if self.kind == "trace-replay":
            t = self.trace
            return not (np.any(t.df1) or np.any(t.df2) or np.any(t.djhalf))
        return self.sigma_f1 == self.sigma_f2 == self.sigma_J == 0.0

    def with_seed(self, seed: int) -> "NoiseModel":
        return NoiseModel(self.kind, self.sigma_f1, self.sigma_f2, self.sigma_J,
                          self.tau_c, self.trace, seed)


def sigma_from_t2star(t2star: float) -> float:
    """Gaussian quasi-static std (MHz) giving a Ramsey envelope ``exp(-(t/T2*)^2)``.

    ``sigma_f = sqrt(2) / (2 pi T2*)`` with ``T2*`` in µs; ``inf`` maps to 0.
    """
    if not t2star > 0:
        raise ValueError("t2star must be > 0")
    if math.isinf(t2star):
        return 0.0
    return math.sqrt(2.0) / (2 * math.pi * t2star)


def _shifts_to_array(df1, df2, dj) -> np.ndarray:
    df1, df2, dj = np.broadcast_arrays(df1, df2, dj)
    return np.stack([(df1 + df2) / 2, df2 - df1, dj], axis=-1)


def _gauss_rows(model: NoiseModel, rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, 3))
    return _shifts_to_array(model.sigma_f1 * z[:, 0], model.sigma_f2 * z[:, 1],
                            model.sigma_J * z[:, 2])


def draw_samples(model: NoiseModel, count: int, *key, start: int = 0) -> np.ndarray:
    """Draw ``count`` samples as an array of shape ``(count, 3)`` of (dEZ, ddEz, dJ).

    Deterministic in ``(model.seed, *key)``.  For trace replay the rows are the
    trace entries ``start, start+1, ...`` taken cyclically.  The OU model
    returns stationary (quasi-static) snapshots.
    """
    if model.kind == "trace-replay":
        t = model.trace
        idx = (start + np.arange(count)) % len(t)
        return _shifts_to_array(t.df1[idx], t.df2[idx], 2 * t.djhalf[idx])
    if model.is_zero:
        return np.zeros((count, 3))
    return _gauss_rows(model, stream_rng(model.seed, *key), count)


def draw_sample(model: NoiseModel, shot_index: int) -> NoiseSample:
    """One deterministic sample for ``(model.seed, shot_index)``."""
    if model.kind == "trace-replay":
        row = draw_samples(model, 1, start=shot_index)[0]
    elif model.is_zero:
        row = np.zeros(3)
    else:
        row = _gauss_rows(model, stream_rng(model.seed, shot_index), 1)[0]
    return NoiseSample(*map(float, row))


class TraceFormatError(ValueError):
    """Malformed noise-trace CSV; message carries the line number."""


def load_trace(path) -> NoiseTrace:
    """Read a trace CSV with header ``time_s,df1_mhz,df2_mhz,djhalf_mhz``."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(f"{path}: line 1: empty file") from None
        if tuple(h.strip() for h in header) != TRACE_HEADER:
            raise TraceFormatError(f"{path}: line 1: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise TraceFormatError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise TraceFormatError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    a = np.array(rows)
    try:
        return NoiseTrace(a[:, 0], a[:, 1], a[:, 2], a[:, 3])
    except ValueError as exc:
        raise TraceFormatError(f"{path}: {exc}") from None


def save_trace(trace: NoiseTrace, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for row in zip(trace.times, trace.df1, trace.df2, trace.djhalf):
            w.writerow([f"{v:.12g}" for v in row])


def ou_paths(sigma: float, tau_c: float, n_steps: int, dt: float,
             rng: np.random.Generator, n_paths: int = 1) -> np.ndarray:
    """Stationary Ornstein-Uhlenbeck sample paths, shape ``(n_paths, n_steps)``.

    Uses the exact update ``x' = x e^{-dt/tau} + sigma sqrt(1 - e^{-2dt/tau}) xi``
    started from the stationary distribution.
    """
    out = np.empty((n_paths, n_steps))
    x = sigma * rng.standard_normal(n_paths)
    a = math.exp(-dt / tau_c) if math.isfinite(tau_c) else 1.0
    b = sigma * math.sqrt(max(0.0, 1 - a * a))
    for k in range(n_steps):
        out[:, k] = x
        x = a * x + b * rng.standard_normal(n_paths)
    return out


def ou_trace(model: NoiseModel, duration: float, dt: float, *key) -> NoiseTrace:
    """Generate a trace from an OU model.

    ``duration`` and ``dt`` are in µs; the returned ``times`` are in seconds as
    for every :class:`NoiseTrace`.
    """
    if model.kind != "ornstein-uhlenbeck":
        raise ValueError("ou_trace needs an ornstein-uhlenbeck model")
    n = int(round(duration / dt))
    rng = stream_rng(model.seed, "ou-trace", *key)
    df1 = ou_paths(model.sigma_f1, model.tau_c, n, dt, rng)[0]
    df2 = ou_paths(model.sigma_f2, model.tau_c, n, dt, rng)[0]
    djh = ou_paths(model.sigma_J / 2, model.tau_c, n, dt, rng)[0]
    return NoiseTrace(np.arange(n) * dt * 1e-6, df1, df2, djh)
