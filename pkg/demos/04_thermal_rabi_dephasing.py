"""Carrier Rabi flopping of a thermal ion: contrast decay with nbar, and
the closed form checked against the explicit Fock-state sum.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iontrap_bench.constants import YB171
from iontrap_bench.dynamics import (DriveSpec, MotionalMode, lamb_dicke,
                                    rabi_carrier_population,
                                    rabi_population_oracle)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

omega_mode = 2 * np.pi * 1.02e6
eta = lamb_dicke(435e-9, np.pi / 4, YB171, omega_mode)
print(f"Lamb-Dicke parameter at 435 nm, 45 deg, 1.02 MHz: eta = {eta:.4f}")
print(f"validity sqrt(nbar)*eta at nbar=50: {np.sqrt(50) * eta:.3f} (< 1)")

omega0 = np.pi / 130e-6  # 130 us pi-time
drive = DriveSpec(omega0=omega0, a=1.0)
t = np.linspace(0, 12 * 130e-6, 1200)

plt.figure(figsize=(7.5, 4))
for nbar, color in ((0.0, "C0"), (10.0, "C1"), (30.0, "C2")):
    mode = MotionalMode(omega=omega_mode, eta=eta, nbar=nbar)
    p = rabi_carrier_population(t, drive, [mode])
    plt.plot(t * 1e6, p, color=color, lw=1.1, label=f"nbar = {nbar:.0f}")
    # cross-check a few points against the Fock sum
    t_check = np.array([0.5, 2.0, 6.0, 11.0]) * 130e-6
    worst = np.abs(rabi_carrier_population(t_check, drive, [mode])
                   - rabi_population_oracle(t_check, drive, [mode])).max()
    print(f"nbar = {nbar:4.0f}: closed form vs Fock sum, worst |diff| = {worst:.1e}")
plt.xlabel("pulse time (us)")
plt.ylabel("excited-state population")
plt.title("Thermal dephasing of carrier Rabi flopping (130 us pi-time)")
plt.legend()
plt.tight_layout()
plt.savefig(OUT / "thermal_rabi.png", dpi=150)
print("wrote", OUT / "thermal_rabi.png")
