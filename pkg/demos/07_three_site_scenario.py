"""Run the bundled three-site scenario end to end and plot the three
simulated-and-fitted traces, including the split-pair rate imbalance.

Equivalent CLI:  iontrap-bench run src/iontrap_bench/scenarios/three_site_rabi.json
"""

import csv
import json
import pathlib
from importlib import resources

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iontrap_bench.scenario import run_scenario

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

scenario = resources.files("iontrap_bench.scenarios") / "three_site_rabi.json"
report = run_scenario(scenario, out_dir=OUT / "three_site_run")
print(f"scenario '{report.name}' finished in {report.wall_time_s:.2f} s; "
      f"seed {report.provenance['seed']}")

fits = report.steps["fit"]["sites"]
for sid in ("i", "ii", "iii"):
    p = fits[sid]["params"]
    e = fits[sid]["errors"]
    print(f"  site {sid:3s}: Omega0/2pi = {p['omega0'] / 2 / np.pi / 1e3:.4f} "
          f"+/- {e['omega0'] / 2 / np.pi / 1e3:.4f} kHz, "
          f"nbar = {p['nbar']:.1f} +/- {e['nbar']:.1f}")
delta = report.steps["derived"]["delta_omega"]
print(f"split-pair rate imbalance: delta = {delta['relative']:.4f} "
      f"+/- {delta['error']:.4f} (configured 0.0640)")

plt.figure(figsize=(8, 4))
colors = {"i": "C0", "ii": "C9", "iii": "C1"}
for sid in ("i", "ii", "iii"):
    with open(OUT / "three_site_run" / f"trace_{sid}.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t_us"]) for r in rows])
    p = np.array([float(r["population"]) for r in rows])
    err = np.array([float(r["stderr"]) for r in rows])
    plt.errorbar(t, p, yerr=err, fmt="o", ms=3, lw=0.7, color=colors[sid],
                 label=f"site {sid}")
plt.xlabel("pulse time (us)")
plt.ylabel("excited population")
plt.title("Simultaneous traces: split pair (i, ii) and independent site (iii)")
plt.legend()
plt.tight_layout()
plt.savefig(OUT / "three_site_traces.png", dpi=150)
print("wrote", OUT / "three_site_traces.png")

report_json = json.loads((OUT / "three_site_run" / "report.json").read_text())
print("artifacts:", ", ".join(report_json["artifacts"]))
