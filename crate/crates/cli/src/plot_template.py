# Plot the predicted curve against the computed spectra in this directory.
# Usage: python plot.py [output.png]
import glob
import sys

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    return np.genfromtxt(path, delimiter=",", comments="#", names=True)


fig, ax = plt.subplots(figsize=(7, 5))
for path in sorted(glob.glob("spectra/*.csv")):
    s = load(path)
    ax.plot(s["re"], s["im"], ".", ms=2, alpha=0.4, color="tab:blue")
try:
    c = load("curve.csv")
    for k in np.unique(c["arc"]):
        if k < 0:
            continue
        arc = c[c["arc"] == k]
        ax.plot(arc["x"], arc["y"], color="tab:red", lw=1.2)
        ax.plot(arc["x"], -arc["y"], color="tab:red", lw=1.2)
    sigma = c[c["arc"] < 0]
    for a, b in zip(sigma["x"][::2], sigma["x"][1::2]):
        ax.plot([a, b], [0, 0], color="tab:red", lw=3)
except OSError:
    pass
ax.set_xlabel("Re z")
ax.set_ylabel("Im z")
ax.set_aspect("equal", adjustable="datalim")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "spectrum.png", dpi=150)
