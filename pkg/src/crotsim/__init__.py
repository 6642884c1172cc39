"""Simulation toolkit for a two-qubit exchange-coupled spin device.

The package models the four-level device Hamiltonian, builds calibrated
pulse-level primitive gates, injects quasi-static and time-correlated noise,
and provides randomized benchmarking, state tomography, two-qubit algorithm
runs, coherence fits and Bayesian frequency tracking.  A command-line runner
is available as ``crotsim`` (or ``python -m crotsim``).
"""
__version__ = "0.1.0"

from .device import DeviceParams, energies, parse_transition, resonances
from .evolution import DriveTone, Idle, PulseSchedule, TrotterConfig, propagate
from .gates import GateSet, ideal_unitary
from .noise import NoiseModel, NoiseTrace, draw_samples, load_trace, save_trace
from .readout import ReadoutModel, SpamConfig, calibrate_C, correct_readout

__all__ = [
    "__version__", "DeviceParams", "energies", "parse_transition", "resonances",
    "DriveTone", "Idle", "PulseSchedule", "TrotterConfig", "propagate",
    "GateSet", "ideal_unitary", "NoiseModel", "NoiseTrace", "draw_samples",
    "load_trace", "save_trace", "ReadoutModel", "SpamConfig", "calibrate_C",
    "correct_readout",
]
