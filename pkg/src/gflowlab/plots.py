"""Report figures (matplotlib PNGs) and the standalone SVG scatter emitter.

The SVG path is hand-rolled so its guarantees are exact: one circle element
per sample, angle coloring on a blue-red-green ramp over the conditioning
angle, density coloring from a 64x64 bin grid mapped to brightness.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DENSITY_BINS = 64


def brg_color(t: float) -> str:
    """Blue (t=0) through red (t=0.5) to green (t=1), as #rrggbb."""
    t = min(max(float(t), 0.0), 1.0)
    if t < 0.5:
        u = t / 0.5
        r, g, b = u, 0.0, 1.0 - u
    else:
        u = (t - 0.5) / 0.5
        r, g, b = 1.0 - u, u, 0.0
    return "#{:02x}{:02x}{:02x}".format(int(255 * r), int(255 * g), int(255 * b))


def density_color(v: float) -> str:
    """Brightness ramp for density coloring (dark background assumed)."""
    v = min(max(float(v), 0.0), 1.0)
    r = int(255 * v)
    g = int(255 * (0.15 + 0.85 * v))
    b = int(255 * (0.35 + 0.65 * v))
    return "#{:02x}{:02x}{:02x}".format(r, g, b)


def density_bin_counts(points: np.ndarray, bins: int = DENSITY_BINS) -> np.ndarray:
    """Counts on a bins x bins grid over [0,1]^2; all samples land in some bin."""
    pts = np.clip(np.atleast_2d(points), 0.0, 1.0)
    ij = np.minimum((pts * bins).astype(int), bins - 1)
    counts = np.zeros((bins, bins), dtype=np.int64)
    np.add.at(counts, (ij[:, 0], ij[:, 1]), 1)
    return counts


def _panel_pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def emit_scatter_svg(rewards: np.ndarray, payloads: np.ndarray, coloring: str,
                     out_path: str | Path) -> None:
    """Write a standalone SVG: one circle per sample per panel.

    coloring "angle" maps atan2 of the conditioning payload to the BRG ramp;
    "density" maps local sample counts on a 64x64 grid to brightness.
    """
    rewards = np.atleast_2d(np.asarray(rewards, dtype=np.float64))
    payloads = np.atleast_2d(np.asarray(payloads, dtype=np.float64))
    if len(rewards) == 0:
        raise ValueError("cannot render an empty sample log")
    if coloring not in ("angle", "density"):
        raise ValueError(f"unknown coloring {coloring!r}")
    k = rewards.shape[1]
    pairs = _panel_pairs(k)
    size, margin = 480, 36
    width = len(pairs) * size
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{size}" '
        f'viewBox="0 0 {width} {size}">',
    ]
    for p, (i, j) in enumerate(pairs):
        x0 = p * size
        span = size - 2 * margin
        bg = "#101018" if coloring == "density" else "#ffffff"
        parts.append(
            f'<rect x="{x0 + margin}" y="{margin}" width="{span}" height="{span}" '
            f'fill="{bg}" stroke="#404040"/>')
        pts = rewards[:, (i, j)]
        if coloring == "density":
            counts = density_bin_counts(pts)
            peak = counts.max()
            ij_idx = np.minimum((np.clip(pts, 0, 1) * DENSITY_BINS).astype(int),
                                DENSITY_BINS - 1)
            values = counts[ij_idx[:, 0], ij_idx[:, 1]] / peak
            colors = [density_color(v) for v in values]
        else:
            angles = np.arctan2(payloads[:, j], payloads[:, i])
            colors = [brg_color(a / (np.pi / 2)) for a in angles]
        for (rx, ry), color in zip(pts, colors):
            cx = x0 + margin + rx * span
            cy = margin + (1.0 - ry) * span
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="{color}"/>')
    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(parts))


# -- matplotlib report figures -------------------------------------------------


def learning_curves_png(log: list[dict], out_path: str | Path) -> None:
    steps = [rec["step"] for rec in log]
    fields = ["mean_loss", "logZ_mean", "goal_accuracy", "zero_reward_fraction"]
    fig, axes = plt.subplots(1, len(fields), figsize=(4 * len(fields), 3))
    for ax, name in zip(axes, fields):
        vals = [rec.get(name) for rec in log]
        if any(v is not None for v in vals):
            ax.plot(steps, [np.nan if v is None else v for v in vals], lw=1)
        if name == "mean_loss":
            ax.set_yscale("log")
        ax.set_title(name)
        ax.set_xlabel("step")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def comparison_grid_png(cells: dict, landscapes: list[str], algorithms: list[str],
                        coloring: str, out_path: str | Path) -> None:
    """Rows = algorithms, columns = landscapes; each panel a sample scatter.

    cells maps (algorithm, landscape) -> dict with "rewards" (N,K) and
    "payloads" (N,K) from the first seed's evaluation.
    """
    fig, axes = plt.subplots(len(algorithms), len(landscapes),
                             figsize=(2.2 * len(landscapes), 2.4 * len(algorithms)),
                             squeeze=False)
    for row, algo in enumerate(algorithms):
        for col, land in enumerate(landscapes):
            ax = axes[row][col]
            cell = cells.get((algo, land))
            if cell is None or len(cell["rewards"]) == 0:
                ax.set_facecolor("#eeeeee")
            else:
                r = cell["rewards"]
                if coloring == "density":
                    ax.set_facecolor("#101018")
                    ax.hist2d(r[:, 0], r[:, 1], bins=DENSITY_BINS,
                              range=[[0, 1], [0, 1]], cmap="magma")
                else:
                    c = cell["payloads"]
                    t = np.arctan2(c[:, 1], c[:, 0]) / (np.pi / 2)
                    colors = [brg_color(v) for v in t]
                    ax.scatter(r[:, 0], r[:, 1], s=2, c=colors, linewidths=0)
            ax.set_xlim(0, 1)
            ax.set_ylim(0, 1)
            ax.set_xticks([])
            ax.set_yticks([])
            if row == 0:
                ax.set_title(land, fontsize=8)
            if col == 0:
                ax.set_ylabel(algo, fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def mg_sweep_png(mg_values: list[float], mean_cosines: list[float],
                 out_path: str | Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3))
    thetas = np.linspace(0.0, np.arccos(0.98) * 1.4, 200)
    for m in mg_values:
        expo = 0.0 if m == 1.0 else np.log(m) / np.log(0.98)
        alpha = np.where(np.cos(thetas) >= 0.98, np.cos(thetas) ** expo, 0.0)
        ax1.plot(np.degrees(thetas), alpha, label=f"m_g={m}")
    ax1.set_xlabel("angle to goal direction (deg)")
    ax1.set_ylabel("reward coefficient")
    ax1.legend(fontsize=7)
    ax2.plot(mg_values, mean_cosines, marker="o")
    ax2.set_xlabel("m_g")
    ax2.set_ylabel("mean in-cone cosine")
    ax2.invert_xaxis()
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def landscape_png(points: np.ndarray, masked: np.ndarray, front: np.ndarray,
                  out_path: str | Path) -> None:
    """Objective plane: unmasked image light, masked dark, front outlined."""
    fig, ax = plt.subplots(figsize=(4, 4))
    live = points[~masked]
    dead = points[masked]
    if len(dead):
        ax.scatter(dead[:, 0], dead[:, 1], s=6, c="#222230", marker="s")
    if len(live):
        ax.scatter(live[:, 0], live[:, 1], s=6, c="#cfd8e8", marker="s")
    if len(front):
        order = np.argsort(front[:, 0])
        ax.plot(front[order, 0], front[order, 1], "r-", lw=1.2)
        ax.scatter(front[:, 0], front[:, 1], s=10, c="red", zorder=3)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("objective 1")
    ax.set_ylabel("objective 2")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
