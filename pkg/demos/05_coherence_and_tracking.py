"""Coherence measurements and Bayesian tracking of slow frequency drift.

Simulates Ramsey, Hahn echo (quasi-static and Ornstein-Uhlenbeck noise) and
Rabi bursts on one transition, fits them, and then follows a synthetic
drifting trace with the four-transition Bayesian estimator.

    python3 demos/05_coherence_and_tracking.py
"""
import math

import numpy as np

from crotsim import DeviceParams, NoiseModel
from crotsim.estimation import (fit_decay_curve, rabi_decay_metric, simulate_echo,
                                simulate_rabi, simulate_ramsey, track_trace)
from crotsim.noise import ou_trace, sigma_from_t2star

p = DeviceParams()
sigma = sigma_from_t2star(3.0)
qs = NoiseModel.from_t2star(3.0, seed=3)

ramsey = fit_decay_curve(simulate_ramsey(p, "1d", qs, samples=5000))
print(f"Ramsey: T2* = {ramsey.T2:.3f} us, fringe {ramsey.frequency:.4f} MHz")

echo_qs = simulate_echo(p, "1d", qs, samples=500)
print(f"echo, quasi-static noise: amplitude >= {np.min(echo_qs.prob):.4f} up to 100 us")
ou = NoiseModel.ornstein_uhlenbeck(sigma, tau_c=5.0, seed=3)
echo_fit = fit_decay_curve(simulate_echo(p, "1d", ou, samples=500))
print(f"echo, OU noise (tau_c = 5 us): T2 = {echo_fit.T2:.2f} us, exponent {echo_fit.alpha:.2f}")

rabi = fit_decay_curve(simulate_rabi(p, "1d", qs, samples=500), t2star=3.0, scale=math.pi)
m = rabi_decay_metric(f_R=rabi.f_R, t2star=3.0, t2rabi=rabi.T2, scale=math.pi)
print(f"Rabi: f_R = {rabi.f_R:.4f} MHz, T2_Rabi = {rabi.T2:.1f} us, decay per pi/2 D = {m.D:.2e}")

# a slow drift: one estimation cycle every 1.706 s, correlation time ~ 1 minute
drift = NoiseModel("ornstein-uhlenbeck", 0.05, 0.05, 0.02, tau_c=60e6, seed=4)
trace = ou_trace(drift, 40 * 1.706e6, 1.706e6)
est = track_trace(trace, shots=20, seed=4)
for name in ("df1", "df2", "djhalf"):
    rms = np.sqrt(np.mean((est[name] - getattr(trace, name)) ** 2))
    print(f"tracking {name:>6}: rms error {1e3 * rms:.2f} kHz over {len(trace)} cycles")
