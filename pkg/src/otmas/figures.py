"""Figure rendering for the command-line report path.

Every plot is written next to the CSV output it visualizes.  Only data
already computed for the CSVs is used, so figures never change the run.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finite(pairs):
    return [(x, y) for (x, y) in pairs if y is not None and math.isfinite(y) and y > 0]


def _loglog_error_plot(points, slope, ylabel, title, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    pts = _finite(points)
    if pts:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.loglog(xs, ys, "o-", color="tab:blue", label=ylabel)
        # reference slope anchored at the first point
        ref = [ys[0] * (x / xs[0]) ** slope for x in xs]
        ax.loglog(xs, ref, "--", color="gray",
                  label=f"slope {slope:g}")
        ax.legend()
    ax.set_xlabel("M + N")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_cost_convergence(sizes, deltas, dim, path):
    """Cost error against total atom count, log-log with reference slope."""
    _loglog_error_plot(
        list(zip(sizes, deltas)),
        slope=-2.0 / dim,
        ylabel="cost error",
        title="convergence of the optimal cost",
        path=path,
    )


def plot_multiplier_convergence(sizes, errors, dim, path):
    _loglog_error_plot(
        list(zip(sizes, errors)),
        slope=-2.0 / dim,
        ylabel="multiplier error",
        title="convergence of the dual multiplier",
        path=path,
    )


def plot_active_set_growth(levels, active, dense, path):
    """Active pairs per level against the dense pair count."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.semilogy(levels, dense, "s--", color="gray", label="M * N")
    ax.semilogy(levels, active, "o-", color="tab:red", label="active pairs")
    ax.set_xlabel("level")
    ax.set_ylabel("pairs")
    ax.set_title("active-set growth")
    ax.set_xticks(list(levels))
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_support_1d(x_coords, y_coords, masses, path):
    """Scatter of the transport plan for problems on intervals."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    m = max(masses) if len(masses) else 1.0
    sizes = [4 + 40 * v / m for v in masses]
    ax.scatter(x_coords, y_coords, s=sizes, color="tab:blue", alpha=0.7)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("support of the transport plan")
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
