"""SVG rendering of tradeoff surfaces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from slicemux.provisioner import TradeoffSurface  # noqa: E402


def plot_surface(surface: TradeoffSurface, path, names=None) -> None:
    """Heatmap of total PRBs for two slices, otherwise one line per slice.

    In the line view each curve varies one slice's isolation degree with all
    others held at zero.
    """
    pl = np.array(surface.p_l, dtype=float)
    totals = np.array([p.total for p in surface.plans])
    n = pl.shape[1]
    names = names or [f"slice {i}" for i in range(n)]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if n == 2:
        xs, ys = np.unique(pl[:, 0]), np.unique(pl[:, 1])
        grid = np.full((len(ys), len(xs)), np.nan)
        for (a, b), t in zip(pl, totals):
            grid[np.searchsorted(ys, b), np.searchsorted(xs, a)] = t
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(xs)), [f"{x:g}" for x in xs])
        ax.set_yticks(range(len(ys)), [f"{y:g}" for y in ys])
        ax.set_xlabel(f"isolation degree, {names[0]}")
        ax.set_ylabel(f"isolation degree, {names[1]}")
        for r in range(len(ys)):
            for c in range(len(xs)):
                if not np.isnan(grid[r, c]):
                    ax.text(c, r, f"{grid[r, c]:.0f}", ha="center", va="center", color="w", fontsize=8)
        fig.colorbar(im, ax=ax, label="total PRBs")
    else:
        for i in range(n):
            others = np.delete(pl, i, axis=1)
            mask = (others == 0).all(axis=1)
            order = np.argsort(pl[mask, i])
            ax.plot(pl[mask, i][order], totals[mask][order], marker="o", label=names[i])
        ax.set_xlabel("isolation degree of the varied slice")
        ax.set_ylabel("total PRBs")
        ax.grid(alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
