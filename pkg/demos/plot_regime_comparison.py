"""
Four control regimes on the 10-agent experiment
===============================================

Simulate every regime from the same initial draws and plot the maximum ECE
discrepancy over time.  A handful of seeds keeps this quick; the acceptance
suite uses twenty.
"""

import numpy as np

from daoctrl import Regime, paper_scenario
from daoctrl.engine import run_batch

scenario = paper_scenario()
seeds = [1, 2, 3]
report = run_batch(scenario, list(Regime), seeds)
series = report.pop("_series")

for name, entry in report["regimes"].items():
    stats = entry["stats"]
    conv = stats["convergence_time"]["median"]
    conv = f"{conv:.1f}s" if np.isfinite(conv) else "not reached"
    print(f"{name:>10}: median convergence {conv}, "
          f"median |dJ| {stats['abs_delta_j']['median']:.2f}, "
          f"subgraphs found {entry['operations']['found']}/{entry['operations']['attempted']}")

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(7, 4))
for regime in Regime:
    run = series[(regime.value, seeds[0])]
    ax.semilogy(run["t"], np.fmax(run["max_discrepancy"], 1e-6), label=regime.value, lw=0.8)
ax.set_xlabel("t [s]")
ax.set_ylabel("max |r_i - r_j|")
ax.legend()
fig.savefig("regime_comparison.png", dpi=120)
print("wrote regime_comparison.png")
