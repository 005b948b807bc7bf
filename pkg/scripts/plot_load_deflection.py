#!/usr/bin/env python3
"""Reproduce the load-deflection study on the simulator and plot it.

Sweeps hook loads from 0 to 200 g on the three 1 m constructions and writes
load_deflection_sim.png plus a CSV next to it.

Usage: python scripts/plot_load_deflection.py [outdir]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from vinesim.config import get_robot
from vinesim.solver import tip_deflection_curve

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
OUT.mkdir(parents=True, exist_ok=True)

loads = [0.01 * i for i in range(21)]
styles = {"baseline_1m": "o-", "unreinforced_1m": "s-", "reinforced_1m": "^-"}

fig, ax = plt.subplots(figsize=(6, 4.2))
rows = ["load_kg,baseline_m,unreinforced_m,reinforced_m"]
curves = {}
for name, style in styles.items():
    curve = tip_deflection_curve(get_robot(name), loads)
    curves[name] = [d for _, d in curve]
    ax.plot([m * 1e3 for m, _ in curve], curves[name], style, label=name, markersize=4)
for i, load in enumerate(loads):
    rows.append(
        f"{load:.3f},{curves['baseline_1m'][i]:.6f},"
        f"{curves['unreinforced_1m'][i]:.6f},{curves['reinforced_1m'][i]:.6f}"
    )

ax.set_xlabel("hook load [g]")
ax.set_ylabel("hook-point deflection [m]")
ax.grid(alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "load_deflection_sim.png", dpi=140)
(OUT / "load_deflection_sim.csv").write_text("\n".join(rows) + "\n")
print(f"wrote {OUT / 'load_deflection_sim.png'} and {OUT / 'load_deflection_sim.csv'}")
