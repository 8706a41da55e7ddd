"""Render heatmap CSVs as PNG images (needs matplotlib; not part of the package).

usage: python3 scripts/plot_heatmaps.py results/heatmap/*.csv
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load(path):
    rows = Path(path).read_text().splitlines()
    scan = np.array([float(v) for v in rows[0].split(",")[3:]])
    x_true = np.array([float(r.split(",")[0]) for r in rows[1:]])
    energy = np.array([[float(v) for v in r.split(",")[3:]] for r in rows[1:]])
    return x_true, scan, energy


def main(paths):
    for p in paths:
        x_true, scan, energy = load(p)
        fig, ax = plt.subplots(figsize=(5, 4))
        mesh = ax.pcolormesh(scan / 1e3, x_true / 1e3, energy, shading="nearest")
        ax.set_xlabel("assumed fault position x' (km)")
        ax.set_ylabel("true fault position x_f (km)")
        ax.set_title(Path(p).stem)
        fig.colorbar(mesh, ax=ax, label="normalized energy")
        fig.tight_layout()
        fig.savefig(Path(p).with_suffix(".png"), dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main(sys.argv[1:])
