"""Randomized benchmarking with the simulated primitive set.

Builds the two-qubit Clifford table, runs standard and differenced
benchmarking under quasi-static noise and SPAM, and converts the decay into
Clifford and primitive fidelities.  Finishes with an interleaved CNOT.

    python3 demos/02_benchmarking.py
"""
from crotsim import DeviceParams, GateSet, NoiseModel, ReadoutModel, SpamConfig
from crotsim.benchmark import (RBConfig, default_lengths, fit_decay, interleaved_fidelity,
                               mc_uncertainty, run_rb)
from crotsim.clifford import cached_table

table = cached_table(2)
print(f"{len(table)} two-qubit Cliffords, {table.avg_primitives:.4f} primitives on average")

p = DeviceParams()
gates = GateSet(p)
noise = NoiseModel.from_t2star(3.0, seed=1)
spam = SpamConfig.symmetric(0.01, init_error=0.02)
common = dict(lengths=default_lengths(2, points=8), num_sequences=20, shots_per_sequence=200,
              noise=noise, noise_repeats=20, readout=ReadoutModel.from_spam(spam, p),
              init_error=spam.init_error, seed=4)

curves = run_rb(RBConfig(protocol="differenced", **common), gates=gates)
for protocol in ("standard", "differenced"):
    fit = fit_decay(curves, protocol)
    std = mc_uncertainty(curves, fit, 100, protocol=protocol)
    print(f"{protocol:>11}: p = {fit.p:.5f} +- {std['p']:.5f}, "
          f"F_C = {fit.fidelities['F_C']:.4f}, F_p = {fit.fidelities['F_p']:.4f}")
# The differenced curve decays to zero, so SPAM drops out of the offset.

ref = fit_decay(curves, "standard")
itl = fit_decay(run_rb(RBConfig(interleaved="CNOT1", **common), gates=gates))
print(f"interleaved CNOT1 fidelity {interleaved_fidelity(itl.p, ref.p):.4f}")
