"""Report figures rendered to image files (non-interactive backend)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import scaled_jacobians  # noqa: E402
from .metrics import vdr  # noqa: E402


def plot_trace(records, path):
    """#BC, #H and E(m) against the operation index."""
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    x = np.arange(1, len(records) + 1)
    ok = np.array([r["outcome"] == "success" for r in records], dtype=bool)
    for ax, key, label in zip(axes, ("n_components", "n_hexes", "energy"),
                              ("#BC", "#H", "E(m)")):
        y = [r[key] for r in records]
        ax.plot(x, y, color="0.3", lw=1)
        y = np.asarray(y)
        ax.scatter(x[ok], y[ok], s=12, color="tab:blue", label="success")
        ax.scatter(x[~ok], y[~ok], s=12, color="tab:red",
                   marker="x", label="rejected / rolled back")
        ax.set_ylabel(label)
    axes[0].legend(fontsize=8)
    axes[-1].set_xlabel("operation")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_quality(mesh, path, title=""):
    """Histograms of per-hex scaled Jacobian and volume deviation ratio."""
    sj = scaled_jacobians(mesh)
    per, _, _ = vdr(mesh)
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    axes[0].hist(sj, bins=20, range=(min(0.0, sj.min()), 1.0), color="tab:blue")
    axes[0].set_xlabel("scaled Jacobian")
    axes[0].set_ylabel("hexes")
    axes[1].hist(per, bins=20, color="tab:orange")
    axes[1].set_xlabel("VDR")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report_figures(records, mesh, directory, stem="report"):
    os.makedirs(directory, exist_ok=True)
    paths = []
    if records:
        p = os.path.join(directory, f"{stem}_trace.png")
        plot_trace(records, p)
        paths.append(p)
    p = os.path.join(directory, f"{stem}_quality.png")
    plot_quality(mesh, p, stem)
    paths.append(p)
    return paths
