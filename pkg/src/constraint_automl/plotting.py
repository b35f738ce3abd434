"""Figures written next to the CLI's delimited outputs."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_curve(curve, path, label: str = "best-so-far validation BA") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(curve.times, curve.bas, where="post", label=label)
    ax.set_xlabel("search time (s)")
    ax.set_ylabel("balanced accuracy")
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_trace(result, path, title: str = "") -> None:
    """Per-evaluation scores and the best satisfied BA over search time."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    t = [h.elapsed for h in result.history]
    s = [h.score if math.isfinite(h.score) else np.nan for h in result.history]
    sat = [h.satisfied for h in result.history]
    if t:
        ax.scatter([a for a, ok in zip(t, sat) if ok], [b for b, ok in zip(s, sat) if ok], s=8,
                   label="satisfied", color="tab:blue")
        ax.scatter([a for a, ok in zip(t, sat) if not ok], [b for b, ok in zip(s, sat) if not ok], s=8,
                   label="violating", color="tab:red", marker="x")
    if result.trace:
        tt, bb = zip(*[(a, b) for a, b in result.trace if math.isfinite(b)] or [(0.0, np.nan)])
        ax.step(tt, bb, where="post", color="black", label="best satisfied BA")
    ax.axhline(0.0, color="grey", lw=0.5)
    ax.set_xlabel("elapsed search time (s)")
    ax.set_ylabel("objective")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    _save(fig, path)


def plot_thresholds(samples: dict, thresholds: dict, path) -> None:
    """Histogram of each sampled metric with its derived thresholds marked."""
    keys = [k for k in samples if len(samples[k])]
    fig, axes = plt.subplots(1, max(1, len(keys)), figsize=(3.2 * max(1, len(keys)), 3), squeeze=False)
    for ax, key in zip(axes[0], keys):
        vals = np.asarray(samples[key], dtype=float)
        log = key != "equal_opportunity" and np.all(vals > 0) and vals.max() / vals.min() > 100
        bins = np.geomspace(vals.min(), vals.max(), 30) if log else 30
        ax.hist(vals, bins=bins, color="tab:gray")
        if log:
            ax.set_xscale("log")
        for t in thresholds.get(key, []):
            ax.axvline(t, color="tab:red", lw=0.8)
        ax.set_title(key, fontsize=9)
    _save(fig, path)
