"""Shuttle a single well from the loading spot to a target site and plot
the electrode waveforms, then solve the four-well end configuration.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iontrap_bench.constants import YB171
from iontrap_bench.fivewire import demo_trap
from iontrap_bench.voltage_solver import (WellSpec, build_constraints,
                                          shuttle_waveform, solve_voltages)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

trap = demo_trap()
omega_ax = 2 * np.pi * 1.02e6


def well(x_um):
    return WellSpec.from_axial_frequency(trap.site(x_um * 1e-6), omega_ax, YB171)


# 25 steps from the loading spot at -200 um to the far site at +400 um
steps = 25
sols = shuttle_waveform([well(-200)], [well(400)], steps, trap.basis, bound=5.0)
waveform = np.array([s.voltages for s in sols])
print(f"shuttle -200 -> +400 um in {steps} steps; "
      f"peak voltage {np.abs(waveform).max():.2f} V")

plt.figure(figsize=(7, 4))
for i, name in enumerate(trap.basis.names):
    if np.abs(waveform[:, i]).max() > 0.3:  # only the electrodes doing work
        plt.plot(waveform[:, i], label=name, lw=1.2)
plt.xlabel("step")
plt.ylabel("voltage (V)")
plt.title("Interior control electrode waveforms")
plt.legend(ncol=4, fontsize=7)
plt.tight_layout()
plt.savefig(OUT / "shuttle_waveform.png", dpi=150)
print("wrote", OUT / "shuttle_waveform.png")

# final configuration of the loading sequence: loading well + three sites
wells4 = [well(x) for x in (-200, 0, 200, 400)]
system = build_constraints(wells4, trap.basis)
sol = solve_voltages(system, bound=1.0)
print(f"four-well static solution: {system.matrix.shape[0]} constraints, "
      f"max|v| = {sol.max_abs_voltage:.3f} V, feasible = {sol.feasible}")
