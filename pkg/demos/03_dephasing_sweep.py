"""How the primitive infidelity falls as the gates get faster.

With J = sqrt(15) f_R the primitives stay synchronised while their
duration scales as 1/f_R, so quasi-static dephasing costs less at higher
Rabi frequency.  The idle variant appends the extra wait needed to match
the exchange phase.  Uses the reduced 20 x 30 grid (about half a minute).

    python3 demos/03_dephasing_sweep.py
"""
from crotsim import DeviceParams
from crotsim.benchmark import sweep_fr

grid = [1.0, 2.0, 3.0, 4.0, 4.5, 5.0]
p = DeviceParams()
base = sweep_fr(p, grid, "dephasing-only", num_sequences=20, noise_repeats=30)
idle = sweep_fr(p, grid, "with-idle", num_sequences=20, noise_repeats=30)
print(" f_R (MHz)   J (MHz)   infidelity (%)   with idle (%)")
for f in grid:
    print(f"{f:9.1f} {base[f]['J']:9.2f} {100 * base[f]['infidelity']:14.3f} "
          f"{100 * idle[f]['infidelity']:15.3f}")
# Under quasi-static noise the benchmarking decay is not a single exponential
# (errors add coherently inside a sequence), so these numbers are tied to
# the common length window used for every point.
