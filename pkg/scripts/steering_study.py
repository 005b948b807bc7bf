#!/usr/bin/env python3
"""Tension sweep for tendon steering with one compliant joint.

Finds the tensions that reach 15..90 degrees of distal heading on the
shape-demo robot (proximal joint stiffened, distal joint vented), reports the
bend share carried by the compliant joint, and draws the solved shapes.

Usage: python scripts/steering_study.py [outdir]
"""

import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from vinesim.config import get_robot
from vinesim.mechanics import PressureState, TendonState
from vinesim.solver import assemble_chain, bend_to_angle, localization_index, solve_equilibrium

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")
OUT.mkdir(parents=True, exist_ok=True)

config = get_robot("shape_demo")
pressures = PressureState(12_000.0, {1: 15_000.0, 2: 0.0})
chain = assemble_chain(config, pressures)

fig, ax = plt.subplots(figsize=(6, 4.5))
print("target  tension   achieved  joint-share")
for target in (15.0, 30.0, 45.0, 60.0, 75.0, 90.0):
    tension = bend_to_angle(config, pressures, target, tendon_id=1)
    shape = solve_equilibrium(chain, tendons=TendonState.single(1, tension))
    achieved = math.degrees(shape.tip_heading)
    share = localization_index(shape, 3)
    print(f"{target:5.0f}  {tension:8.2f}  {achieved:8.2f}  {share:10.3f}")
    ax.plot(shape.x, shape.y, label=f"{target:.0f} deg (T={tension:.1f} N)")

ax.axhline(0.0, color="k", lw=0.5)
ax.set_aspect("equal")
ax.set_xlabel("x [m]")
ax.set_ylabel("y [m]")
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "steering_shapes.png", dpi=140)
print(f"wrote {OUT / 'steering_shapes.png'}")
