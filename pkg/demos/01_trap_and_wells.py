"""Build the bundled five-wire trap, calibrate the RF drive, and solve
a three-well voltage set at 1.02 MHz axial.

Run from the repository root:  python demos/01_trap_and_wells.py
Figures land in demos/output/.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import scipy.constants as const

from iontrap_bench.constants import YB171
from iontrap_bench.fivewire import demo_trap
from iontrap_bench.trap_model import secular_frequency, total_potential, trap_depth
from iontrap_bench.voltage_solver import WellSpec, build_constraints, solve_voltages

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# ---- trap with RF calibrated so the radial frequency is 2pi x 3.52 MHz ----
trap = demo_trap(species=YB171, calibrate_radial=2 * np.pi * 3.52e6)
print(f"RF null height: {trap.height * 1e6:.2f} um")
print(f"calibrated RF amplitude: {trap.rf.amplitude:.1f} V "
      f"at {trap.rf.frequency / 2 / np.pi / 1e6:.0f} MHz")

zeros = np.zeros(len(trap.basis))
site = trap.site(0.0)
pseudo = total_potential(trap.basis, zeros, trap.rf, YB171, site)
modes = secular_frequency(pseudo.hessian, YB171)
print("pseudopotential frequencies (MHz):",
      np.round(modes.omega / 2 / np.pi / 1e6, 4))

depth = trap_depth(trap.basis, zeros, trap.rf, YB171, site, [0, 0, 1])
print(f"radial escape barrier: {depth / const.e * 1e3:.1f} meV")

# pseudopotential landscape in the y-z plane
ys = np.linspace(-80e-6, 80e-6, 121)
zs = np.linspace(10e-6, 160e-6, 121)
U = np.zeros((zs.size, ys.size))
for i, z in enumerate(zs):
    for j, y in enumerate(ys):
        U[i, j] = total_potential(trap.basis, zeros, trap.rf, YB171,
                                  np.array([0.0, y, z])).energy
plt.figure(figsize=(7, 4.5))
plt.contourf(ys * 1e6, zs * 1e6, U / const.e * 1e3, levels=40, cmap="viridis")
plt.colorbar(label="pseudopotential (meV)")
plt.plot(0, trap.height * 1e6, "r+", ms=12)
plt.xlabel("y (um)")
plt.ylabel("z (um)")
plt.title("RF pseudopotential, transverse plane")
plt.tight_layout()
plt.savefig(OUT / "pseudopotential_yz.png", dpi=150)
print("wrote", OUT / "pseudopotential_yz.png")

# ---- three wells, 200 um apart, 1.02 MHz axial ----
omega_ax = 2 * np.pi * 1.02e6
wells = [WellSpec.from_axial_frequency(trap.site(x), omega_ax, YB171)
         for x in (0.0, 200e-6, 400e-6)]
system = build_constraints(wells, trap.basis)
sol = solve_voltages(system, bound=1.0)
print(f"\n3-well solve: max|v| = {sol.max_abs_voltage:.3f} V, "
      f"residual norm = {sol.residual_norm:.2e}")
for name, v in zip(system.electrode_names, sol.voltages):
    if abs(v) > 0.05:
        print(f"  {name}: {v:+.3f} V")

# axial potential along the trapping line
xs = np.linspace(-150e-6, 550e-6, 400)
u_axial = [total_potential(trap.basis, sol.voltages, None, YB171,
                           trap.site(x)).energy / const.e * 1e3 for x in xs]
plt.figure(figsize=(7, 3.5))
plt.plot(xs * 1e6, u_axial)
for x in (0, 200, 400):
    plt.axvline(x, color="k", ls=":", lw=0.6)
plt.xlabel("x (um)")
plt.ylabel("potential energy (meV)")
plt.title("Three 1.02 MHz wells from one voltage set")
plt.tight_layout()
plt.savefig(OUT / "three_wells_axial.png", dpi=150)
print("wrote", OUT / "three_wells_axial.png")
