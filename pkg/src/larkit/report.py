"""Figures and count tables written next to an arrangement run."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Poly3DCollection  # noqa: E402

from .formats import explode  # noqa: E402
from .model import ChainComplexResult, euler_both  # noqa: E402

_DPI = 120


def counts_rows(result: ChainComplexResult) -> list[list]:
    rows = [["convention"] + [f"n{p}" for p in range(result.dim + 1)] + ["euler"]]
    chi = euler_both(result)
    rows.append(["interior"] + result.counts(exterior=False) + [chi["interior"]])
    rows.append(["with_exterior"] + result.counts(exterior=True) + [chi["with_exterior"]])
    return rows


def write_counts(result: ChainComplexResult, path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, delimiter="\t", lineterminator="\n").writerows(counts_rows(result))


def plot_coboundary(result: ChainComplexResult, path) -> None:
    """Spy plot of the top coboundary: +1 blue, -1 red, exterior row included."""
    m = result.coboundary(result.dim - 1, exterior=True)
    rows, cols, vals = m.triplets()
    fig, ax = plt.subplots(figsize=(8, max(2.0, 8 * m.nrows / max(m.ncols, 1))))
    ms = max(0.5, min(6.0, 600.0 / max(m.nrows, m.ncols, 1)))
    for sign, color in ((1, "tab:blue"), (-1, "tab:red")):
        k = vals == sign
        ax.plot(cols[k], rows[k], "s", ms=ms, color=color, lw=0)
    ax.set_xlim(-0.5, m.ncols - 0.5)
    ax.set_ylim(m.nrows - 0.5, -0.5)
    ax.set_xlabel(f"{result.dim - 1}-cells")
    ax.set_ylabel(f"{result.dim}-cells")
    ax.set_title(f"{m.nrows} x {m.ncols}, {m.nnz} nonzeros")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_exploded(result: ChainComplexResult, path, scale: float = 1.2) -> None:
    cells = explode(result, scale)
    cmap = plt.get_cmap("tab20")
    if result.dim == 2:
        fig, ax = plt.subplots(figsize=(6, 6))
        for k, c in enumerate(cells):
            for lp in c.loops:
                xy = c.coords[lp]
                ax.fill(xy[:, 0], xy[:, 1], color=cmap(k % 20), alpha=0.6, lw=0.5, ec="k")
        ax.set_aspect("equal")
    else:
        fig = plt.figure(figsize=(7, 7))
        ax = fig.add_subplot(projection="3d")
        for k, c in enumerate(cells):
            polys = [c.coords[lp] for lp in c.loops]
            ax.add_collection3d(Poly3DCollection(polys, facecolor=cmap(k % 20), edgecolor="k", lw=0.2, alpha=0.5))
        allp = np.vstack([c.coords for c in cells]) if cells else np.zeros((1, 3))
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_zlim(lo[2], hi[2])
        ax.set_box_aspect(np.maximum(hi - lo, 1e-9))
    ax.set_title(f"{len(cells)} cells, scale {scale}")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def write_report(result: ChainComplexResult, outdir, scale: float = 1.2) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "counts.tsv", out / "coboundary.png", out / "exploded.png"]
    write_counts(result, paths[0])
    plot_coboundary(result, paths[1])
    plot_exploded(result, paths[2], scale)
    return paths
