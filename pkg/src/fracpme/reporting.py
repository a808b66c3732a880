"""Delimited output and figure rendering for the command-line drivers.

Every CSV has a header row and floats serialized with 17 significant digits,
so identical runs produce byte-identical files.  Figures are rendered with
the Agg backend next to the delimited output.
"""

from __future__ import annotations

import json
import os

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_snapshots_figure(history, path, max_slices: int = 6):
    plt = _pyplot()
    grid = history.grid
    times = history.times()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if grid.dim == 1:
        (x,) = grid.coordinates()
        idx = np.unique(np.linspace(0, len(history.fields) - 1, max_slices).astype(int))
        for j in idx:
            ax.plot(x, history.fields[j].values, label=f"t={times[j]:.3g}")
        ax.set_xlabel("x")
        ax.set_ylabel("w")
        ax.legend(fontsize=8)
    else:
        im = ax.imshow(history.fields[-1].values, origin="lower",
                       extent=(0, grid.length, 0, grid.length))
        fig.colorbar(im, ax=ax, label="w")
        ax.set_title(f"final state, t={times[-1]:.3g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_masses_figure(times, masses, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(times, masses, marker=".")
    ax.set_xlabel("t")
    ax.set_ylabel("mass")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(values, errors, parameter, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(values, errors, marker="o")
    ax.set_xlabel(parameter)
    ax.set_ylabel("L2 error")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_oscillation_figure(radii, osc, beta_fit, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    pos = osc > 0
    ax.loglog(radii[pos], osc[pos], marker="o", label="oscillation")
    if np.isfinite(beta_fit) and pos.sum() >= 2:
        ref = osc[pos][0] * (radii[pos] / radii[pos][0]) ** beta_fit
        ax.loglog(radii[pos], ref, "--", label=f"slope {beta_fit:.3f}")
    ax.set_xlabel("cylinder radius")
    ax.set_ylabel("oscillation")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_margins_figure(margins_l1, margins_hstar, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(margins_l1, label="L1 margin")
    ax.plot(margins_hstar, label="H* margin")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("||D(0)|| - ||D(j)||")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".write_probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
