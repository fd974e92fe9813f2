"""Static SVG line charts for the command-line tools.

Output is byte-stable for fixed inputs: the SVG id salt is fixed and the
creation date is omitted from the metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "fsurv"
plt.rcParams["svg.fonttype"] = "path"

_SVG_METADATA = {"Date": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)


def trajectories_by_status(samples, status, path, title: str = "Observed trajectories") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    colors = {1: "tab:red", 0: "tab:blue"}
    for sample, d in zip(samples, status):
        ax.plot(sample.times, sample.values, color=colors[int(d)], alpha=0.35, lw=0.8)
    for d, label in ((1, "event"), (0, "censored")):
        ax.plot([], [], color=colors[d], label=label)
    ax.set(xlabel="t", ylabel="value", title=title)
    ax.legend(loc="best")
    _save(fig, path)


def lfsdc_with_regions(grid, curve, left_curves, right_curves, path, title: str) -> None:
    """Discrimination curve over the reconstructed members of both regions."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for c in left_curves:
        ax.plot(grid, c, color="tab:green", alpha=0.25, lw=0.7)
    for c in right_curves:
        ax.plot(grid, c, color="tab:orange", alpha=0.25, lw=0.7)
    ax.plot([], [], color="tab:green", label="left region")
    ax.plot([], [], color="tab:orange", label="right region")
    ax.plot(grid, curve, color="black", lw=2.0, label="LFSDC")
    ax.set(xlabel="t", ylabel="trajectory", title=title)
    ax.legend(loc="best")
    _save(fig, path)


def step_functions(functions: dict, path, title: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, fn in functions.items():
        x = np.concatenate(([0.0], fn.jump_times))
        y = np.concatenate(([fn.value_before_first], fn.values))
        ax.step(x, y, where="post", label=str(label), lw=1.0)
    ax.set(xlabel="t", ylabel=ylabel, title=title)
    if len(functions) <= 12:
        ax.legend(loc="best", fontsize="small")
    _save(fig, path)


def distance_profile(profile, path, title: str = "Separability along path") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if profile:
        depth, dist = zip(*profile)
        ax.plot(depth, dist, marker="o")
    ax.set(xlabel="depth", ylabel="d2 to parent", title=title)
    _save(fig, path)


def series_with_intervals(times, series: dict, boundaries, path, title: str, ylabel: str) -> None:
    """Curves over time with dashed verticals at interval boundaries."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for b in boundaries:
        ax.axvline(b, color="grey", ls="--", lw=0.4)
    for label, values in series.items():
        ax.plot(times, values, lw=1.0, label=str(label))
    ax.set(xlabel="t", ylabel=ylabel, title=title)
    if len(series) <= 12:
        ax.legend(loc="best", fontsize="small")
    _save(fig, path)
