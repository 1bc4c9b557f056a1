"""Extraction pipelines on synthetic data: a shot-noise Rabi trace fit for
{Omega0, nbar, a}, and the heating-rate regression over wait times.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import binom

from iontrap_bench.analysis import RabiTrace, fit_rabi, heating_rate
from iontrap_bench.dynamics import DriveSpec, MotionalMode, rabi_carrier_population

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

omega0 = np.pi / 130e-6
mode = MotionalMode(omega=2 * np.pi * 1.02e6, eta=0.055, nbar=30.0)

# ---- synthetic measurement: 60 pulse times x 600 state detections ----
times = np.linspace(5e-6, 1.5e-3, 60)
p_true = rabi_carrier_population(times, DriveSpec(omega0=omega0, a=1.0), [mode])
rng = np.random.Generator(np.random.Philox(key=np.uint64(2026)))
shots = 600
counts = binom.ppf(np.maximum(rng.random(times.size), 1e-300), shots, p_true).astype(int)
trace = RabiTrace.from_binomial(times, counts, shots)

fit = fit_rabi(trace, [mode])
print("Rabi fit:", {k: f"{v:.5g}" for k, v in fit.params.items()},
      "converged:", fit.converged)
print("  true omega0 = {:.5g} rad/s, nbar = 30, a = 1".format(omega0))
for key in ("omega0", "nbar", "a"):
    print(f"  {key}: {fit.params[key]:.5g} +/- {fit.errors[key]:.2g}")

t_fine = np.linspace(0, times[-1], 1000)
model_fine = rabi_carrier_population(
    t_fine, DriveSpec(omega0=fit.params["omega0"], a=fit.params["a"]),
    [MotionalMode(omega=mode.omega, eta=mode.eta, nbar=fit.params["nbar"])])
plt.figure(figsize=(7.5, 3.8))
plt.errorbar(times * 1e6, trace.populations, yerr=trace.stderr, fmt="o",
             ms=3, lw=0.8, label="600-shot estimates")
plt.plot(t_fine * 1e6, model_fine, "C1", lw=1.1, label="fit")
plt.xlabel("pulse time (us)")
plt.ylabel("excited population")
plt.title("Thermal carrier fit: Omega0, nbar, a floated")
plt.legend()
plt.tight_layout()
plt.savefig(OUT / "rabi_fit.png", dpi=150)
print("wrote", OUT / "rabi_fit.png")

# ---- heating rate: nbar vs wait time, weighted straight line ----
waits = np.array([0.0, 1e-3, 2e-3, 4e-3, 6e-3, 8e-3])
nbar_true = 5.0 + 1250.0 * waits
rng2 = np.random.default_rng(7)
nbar_meas = nbar_true + rng2.normal(0, 0.3, waits.shape)
result = heating_rate(waits, nbar_meas, np.full(waits.shape, 0.3))
print(f"\nheating rate: {result.rate_q_per_ms:.3f} +/- "
      f"{result.rate_error_q_per_ms:.3f} q/ms (true 1.25)")

plt.figure(figsize=(6, 3.4))
plt.errorbar(waits * 1e3, nbar_meas, yerr=0.3, fmt="s", ms=4)
plt.plot(waits * 1e3, result.intercept + result.slope * waits, "C1")
plt.xlabel("wait time (ms)")
plt.ylabel("nbar")
plt.title("Heating-rate extraction")
plt.tight_layout()
plt.savefig(OUT / "heating_rate.png", dpi=150)
print("wrote", OUT / "heating_rate.png")
