"""Figure rendering for the CLI report paths.

Every report subcommand writes a PNG next to its delimited output; the axes
mirror the report columns so the figures and the CSV carry the same content.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 130


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def convergence_figure(records: list[dict], path) -> None:
    """Mean distance to the true deepest set vs n, one line per m."""
    means = [r for r in records if r["statistic"] == "mean"]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for m in sorted({r["m"] for r in means}):
        pts = sorted((r["n"], max(r["value"], 1e-300)) for r in means if r["m"] == m)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"m={m}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean distance to true deepest set")
    ax.legend(fontsize=8)
    _finish(fig, path)


def identification_figure(records: list[dict], path) -> None:
    """Success proportion per method, grouped by (N, sd)."""
    cases = sorted({(r["N"], r["sd"]) for r in records})
    methods = []
    for r in records:
        if r["method"] not in methods:
            methods.append(r["method"])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    width = 0.8 / max(len(methods), 1)
    xs = np.arange(len(cases))
    for j, meth in enumerate(methods):
        vals = []
        for case in cases:
            hit = [r["value"] for r in records
                   if (r["N"], r["sd"]) == case and r["method"] == meth]
            vals.append(hit[0] if hit else np.nan)
        ax.bar(xs + j * width, vals, width=width, label=meth)
    ax.set_xticks(xs + 0.4 - width / 2)
    ax.set_xticklabels([f"N={n}\nsd={sd:g}" for n, sd in cases], fontsize=7)
    ax.set_ylabel("success proportion")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7, ncol=3)
    _finish(fig, path)


def percent_curve_figure(records: list[dict], ykey: str, ylabel: str, path) -> None:
    """One line per series over the percentage grid (correlation or f plots)."""
    series = []
    for r in records:
        tag = r.get("subject", "") or ""
        if tag not in series:
            series.append(tag)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for tag in series:
        pts = [(r["p"], r[ykey]) for r in records
               if (r.get("subject", "") or "") == tag and r[ykey] is not None]
        pts.sort()
        label = tag if tag else None
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=label)
    ax.axhline(0.0, color="grey", lw=0.6)
    ax.set_xlabel("p (%)")
    ax.set_ylabel(ylabel)
    if any(series):
        ax.legend(fontsize=8)
    _finish(fig, path)


def depth_slices_figure(values: np.ndarray, path) -> None:
    """Mid-volume sagittal, coronal and axial views of a depth image."""
    x, y, z = values.shape
    views = [
        (values[x // 2, :, :].T, "sagittal"),
        (values[:, y // 2, :].T, "coronal"),
        (values[:, :, z // 2].T, "axial"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(9.0, 3.2))
    for ax, (img, name) in zip(axes, views):
        shown = ax.imshow(img, origin="lower", cmap="hot", vmin=0.0, vmax=1.0)
        ax.set_title(name, fontsize=9)
        ax.set_xticks(())
        ax.set_yticks(())
    fig.colorbar(shown, ax=axes, shrink=0.8)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
