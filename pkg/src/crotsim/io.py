"""Experiment configuration files and result persistence.

Configuration is an INI-style text file with fixed sections.  Unknown
sections or keys are rejected, and every error names the offending line::

    [device]
    dE_Z = 300
    J = 18.85

    [noise]
    t2star = 3.0

Results are written as JSON (floats rounded to 12 significant digits),
plot-ready CSV files, and a ``manifest.json`` with the configuration echo,
seeds and library versions.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import platform
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .device import DeviceParams
from .noise import NoiseModel, load_trace, sigma_from_t2star
from .readout import SpamConfig

__all__ = [
    "ConfigError", "ExperimentConfig", "SCHEMA", "load_config", "parse_config",
    "to_jsonable", "write_json", "write_csv", "write_manifest", "SIG_DIGITS",
]

SIG_DIGITS = 12


def _floats(text: str) -> list:
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _ints(text: str) -> list:
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_str(text: str):
    t = text.strip()
    return None if t.lower() in ("", "none") else t


# section -> key -> (parser, default)
SCHEMA = {
    "run": {"seed": (int, 0), "out": (str, "results"), "threads": (int, 1)},
    "device": {
        "E_Z": (float, 15700.0), "dE_Z": (float, 300.0), "J": (float, 18.85),
        "T1": (float, math.inf), "T2star": (float, 3.0), "T2rabi": (float, 50.0),
        "echo_exponent": (float, 1.5),
    },
    "gates": {"f_R": (_opt_str, None), "k": (int, 1), "mode": (str, "transition"),
              "trotter_N": (int, 1000)},
    "noise": {
        "kind": (str, "quasi-static-gaussian"), "t2star": (float, 3.0),
        "sigma_f1": (_opt_str, None), "sigma_f2": (_opt_str, None), "sigma_J": (float, 0.03),
        "tau_c": (float, math.inf), "trace_file": (_opt_str, None),
    },
    "spam": {"init_error": (float, 0.0), "up_to_down": (float, 0.0),
             "down_to_up": (float, 0.0), "calibration_shots": (int, 10000)},
    "rb": {
        "num_qubits": (int, 2), "num_sequences": (int, 60), "shots": (int, 400),
        "noise_repeats": (_opt_str, None), "lengths": (_ints, None), "n_max": (int, 271),
        "points": (int, 12), "protocol": (str, "standard"), "error_model": (str, "simulated"),
        "depolarizing": (float, 0.0), "interleaved": (str, "CNOT1"), "qubit": (int, 1),
        "spectator": (str, "down"), "single_tone": (_bool, False),
        "mc_resamples": (int, 200),
    },
    "sweep": {"fr_grid": (_floats, [1.0, 2.0, 3.0, 4.0, 4.5, 5.0]), "mode": (str, "dephasing-only"),
              "num_sequences": (int, 20), "noise_repeats": (int, 30),
              "error_model": (str, "noise-only")},
    "tomo": {"state": (str, "dd"), "shots": (int, 10000), "mc_resamples": (int, 20)},
    "algo": {"algorithm": (str, "deutsch-jozsa"), "oracle": (str, "f2"), "samples": (int, 200),
             "tomography": (_bool, True)},
    "coherence": {"transition": (str, "1d"), "samples": (int, 2000), "detuning": (float, 1.0)},
    "estimate": {"f0": (float, 1.0), "shots": (int, 1), "window": (float, 1.0),
                 "resolution": (float, 0.002), "records": (int, 50), "tau_c": (float, 5e6),
                 "sigma": (float, 0.05)},
}


class ConfigError(ValueError):
    """Configuration problem; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}" + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}")


@dataclass
class ExperimentConfig:
    """Parsed configuration: ``values[section][key]`` with defaults filled in."""

    values: dict
    source: str = ""
    path: str | None = None
    explicit: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def set(self, section: str, key: str, value) -> None:
        if key not in SCHEMA.get(section, {}):
            raise ConfigError(f"unknown key {section}.{key}")
        self.values[section][key] = value
        self.explicit.setdefault(section, set()).add(key)

    def device_params(self) -> DeviceParams:
        d = self.values["device"]
        return DeviceParams(E_Z=d["E_Z"], dE_Z=d["dE_Z"], J=d["J"], T1=d["T1"],
                            T2star=d["T2star"], T2rabi=d["T2rabi"], echo_exponent=d["echo_exponent"])

    def noise_model(self, seed: int | None = None) -> NoiseModel:
        n = self.values["noise"]
        seed = self.values["run"]["seed"] if seed is None else seed
        if n["kind"] == "trace-replay":
            if not n["trace_file"]:
                raise ConfigError("noise.trace_file is required for trace-replay", path=self.path)
            return NoiseModel.replay(load_trace(n["trace_file"]), seed=seed)
        s = sigma_from_t2star(n["t2star"])
        s1 = float(n["sigma_f1"]) if n["sigma_f1"] is not None else s
        s2 = float(n["sigma_f2"]) if n["sigma_f2"] is not None else s1
        if n["kind"] == "ornstein-uhlenbeck":
            return NoiseModel("ornstein-uhlenbeck", s1, s2, n["sigma_J"], n["tau_c"], seed=seed)
        if n["kind"] != "quasi-static-gaussian":
            raise ConfigError(f"unknown noise kind {n['kind']!r}", path=self.path)
        return NoiseModel.quasi_static(s1, s2, n["sigma_J"], seed=seed)

    def spam(self) -> SpamConfig:
        s = self.values["spam"]
        return SpamConfig(s["init_error"], (s["up_to_down"],) * 2, (s["down_to_up"],) * 2)

    def f_R(self) -> float | None:
        v = self.values["gates"]["f_R"]
        return None if v is None else float(v)

    def echo(self) -> dict:
        """Effective values (for the manifest)."""
        return {sec: {k: v for k, v in vals.items()} for sec, vals in self.values.items()}


def _key_line(text: str, section: str, key: str) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            cur = m.group(1).strip()
            continue
        if cur == section and re.match(rf"^{re.escape(key)}\s*[=:]", line, re.IGNORECASE):
            return i
    return None


def _section_line(text: str, section: str) -> int | None:
    for i, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{section}]":
            return i
    return None


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    """Parse configuration text; raises :class:`ConfigError` with a line number."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno, path) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno, path) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, path) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line, path) from None
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    explicit: dict = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", _section_line(text, sec), path)
        lower = {k.lower(): k for k in SCHEMA[sec]}
        for key, raw in cp.items(sec):
            canon = SCHEMA[sec].get(key) and key or lower.get(key.lower())
            if canon is None:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", _key_line(text, sec, key), path)
            parser = SCHEMA[sec][canon][0]
            try:
                values[sec][canon] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{canon}: {exc}",
                                  _key_line(text, sec, key), path) from None
            explicit.setdefault(sec, set()).add(canon)
    return ExperimentConfig(values, text, path, explicit)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(path)) from None
    return parse_config(text, str(path))


def _round(x: float):
    if not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(f"{x:.{SIG_DIGITS}g}")


def to_jsonable(obj):
    """Convert numpy values, complex numbers and dataclasses for JSON output."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": to_jsonable(obj.real.tolist()), "im": to_jsonable(obj.imag.tolist())}
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _round(obj.real), "im": _round(obj.imag)}
    if isinstance(obj, set):
        return sorted(to_jsonable(v) for v in obj)
    if hasattr(obj, "__dataclass_fields__"):
        return {k: to_jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__
                if not k.startswith("_")}
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path, header, rows) -> Path:
    """Write rows with floats formatted to 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.{SIG_DIGITS}g}" if isinstance(v, (float, np.floating)) else v
                        for v in row])
    return path


def write_manifest(out_dir, command: str, config: ExperimentConfig, argv=None,
                   seeds: dict | None = None, files=None) -> Path:
    import scipy

    from . import __version__
    manifest = {
        "command": command,
        "argv": list(argv or sys.argv[1:]),
        "config": config.echo(),
        "config_path": config.path,
        "seeds": seeds or {"root": config["run"]["seed"]},
        "versions": {"crotsim": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "files": sorted(str(f) for f in (files or [])),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)
