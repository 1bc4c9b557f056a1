"""Bright/dark photon-count histograms for the side-imaging operating
point, the optimal integer threshold, and SNR comparisons.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iontrap_bench.detection import (CountModel, discrimination_threshold,
                                     monte_carlo_fidelity, simulate_counts, snr)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# side imaging with waveguide delivery: 4.5 kcps fluorescence on 2 kcps
# background, 4 ms windows
model = CountModel(signal_rate=4500.0, background_rate=2000.0, duration=4e-3)
print(f"bright mean {model.bright_mean:.0f}, dark mean {model.dark_mean:.0f} counts")
print(f"rate SNR: side imaging {snr(4500, 2000):.2f}, "
      f"free space + top imaging {snr(30000, 100):.0f}")

result = discrimination_threshold(model.bright_mean, model.dark_mean)
print(f"optimal threshold {result.threshold} counts, "
      f"fidelity {result.fidelity:.4f} "
      f"(bright err {result.bright_error:.4f}, dark err {result.dark_error:.4f})")

shots = 20000
bright = simulate_counts(model, "bright", shots, seed=12)
dark = simulate_counts(model, "dark", shots, seed=13)
mc_fid, _ = monte_carlo_fidelity(model, shots, seed=14)
print(f"Monte Carlo fidelity at {shots} shots: {mc_fid:.4f}")

bins = np.arange(0, 61) - 0.5
plt.figure(figsize=(7, 3.6))
plt.hist(dark, bins=bins, alpha=0.65, label="dark", color="C3", density=True)
plt.hist(bright, bins=bins, alpha=0.65, label="bright", color="C0", density=True)
plt.axvline(result.threshold - 0.5, color="k", ls="--", lw=1,
            label=f"threshold = {result.threshold}")
plt.xlabel("counts per 4 ms window")
plt.ylabel("probability")
plt.title("State discrimination with side-imaging count rates")
plt.legend()
plt.tight_layout()
plt.savefig(OUT / "detection_histograms.png", dpi=150)
print("wrote", OUT / "detection_histograms.png")
