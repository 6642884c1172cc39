"""State tomography and the two-qubit algorithms, stage by stage.

Reconstructs a prepared state from 16 pre-rotation settings, then runs
Deutsch-Jozsa and Grover with noisy primitives, 2% initialisation error and
1% readout flips, reconstructing the register after every stage.

    python3 demos/04_tomography_and_algorithms.py
"""
import numpy as np

from crotsim import DeviceParams, GateSet, NoiseModel, ReadoutModel
from crotsim.algorithms import TomoOptions, paper_spam, run_dj, run_grover
from crotsim.readout import calibrate_C, initial_state
from crotsim.tomography import mc_state_uncertainty, mle_reconstruct, simulate_record

p = DeviceParams()
spam = paper_spam()
down_down = np.eye(4)[3]
rec = simulate_record(initial_state(spam), ReadoutModel.from_spam(spam, p, 10000), 10000, seed=1)
C = calibrate_C(spam, 10000, seed=1, p=p)
res = mle_reconstruct(rec, C, down_down)
std = mc_state_uncertainty(rec, C, down_down, 20, seed=1)
print(f"initial state fidelity {res.fidelity:.4f} +- {std:.4f} (initialisation error dominates)")

gates = GateSet(p)
noise = NoiseModel.from_t2star(3.0, seed=2)
for run, oracles in ((run_dj, ["f0", "f1", "f2", "f3"]), (run_grover, ["00", "01", "10", "11"])):
    for idx in oracles:
        r = run(idx, noise, TomoOptions(), gates=gates, spam=spam, samples=200, seed=2)
        stages = "  ".join(f"{s.stage}={s.fidelity:.3f}" for s in r.stages)
        print(f"{r.algorithm:>13} {idx}: {r.outcome:>8} ({r.probability:.3f})  {stages}")
