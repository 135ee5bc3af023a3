import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

root = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
fig, ax = plt.subplots(2, 2, figsize=(11, 8))

land = pd.read_csv(root / "landscape" / "landscape.csv")
for d, curve in land.groupby("D"):
    ax[0, 0].plot(curve.u, curve.j, label=f"D = {d}")
ax[0, 0].set(xlabel="u", ylabel="J(u)", title="evaluation landscape")
ax[0, 0].legend()

bif = pd.read_csv(root / "sweep" / "bifurcation.csv")
ax[0, 1].plot(bif.D, bif.u_star, ".", ms=3)
ax[0, 1].set(xlabel="D", ylabel="u*", title="optimal control")

traj = pd.read_csv(root / "solar_day" / "trajectory.csv")
ax[1, 0].plot(traj.t, traj.u_star, label="u*")
ax[1, 0].plot(traj.t, traj.d_true / traj.d_true.max(), label="D(t) / max")
ax[1, 0].plot(traj.t, traj.d_hat / traj.d_true.max(), label="D-hat / max", alpha=0.6)
ax[1, 0].set(xlabel="t", title="single router, pseudo-solar day")
ax[1, 0].legend()

for f in sorted((root / "ring_burst").glob("node_*.csv")):
    node = pd.read_csv(f)
    ax[1, 1].plot(node.t, node.x, label=f.stem)
ax[1, 1].set(xlabel="t", ylabel="x", title="5-ring, burst at node 0")
ax[1, 1].legend()

fig.tight_layout()
fig.savefig(root / "figures.png", dpi=120)
