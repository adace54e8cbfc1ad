"""Heatmap rendering of power surfaces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANEL_TITLES = {
    "cond_centered": "conditionally centered magnetization",
    "sqrt_n_mean": "total magnetization",
    "quarter_root_mean": "total magnetization ($n^{1/4}$ scaling)",
}


def render_surface(surface, path, dpi: int = 120) -> Path:
    """Power heatmap over (a, r) with the detection boundary in red."""
    cfg = surface.config
    a, r = cfg.a_values, cfg.r_values
    pm = surface.p_hat_matrix()
    da = a[1] - a[0] if len(a) > 1 else 0.05
    dr = r[1] - r[0] if len(r) > 1 else 0.05
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.imshow(
        pm,
        origin="lower",
        extent=(a[0] - da / 2, a[-1] + da / 2, r[0] - dr / 2, r[-1] + dr / 2),
        vmin=0.0,
        vmax=1.0,
        cmap="gray",
        aspect="auto",
        interpolation="nearest",
    )
    line_a = np.linspace(a[0] - da / 2, a[-1] + da / 2, 200)
    ax.plot(line_a, surface.boundary(line_a), color="red", lw=2)
    ax.set_xlim(a[0] - da / 2, a[-1] + da / 2)
    ax.set_ylim(r[0] - dr / 2, r[-1] + dr / 2)
    ax.set_xlabel("sparsity exponent $a$  ($s = n^{1-a}$)")
    ax.set_ylabel("strength exponent $r$  ($\\tanh B = n^{-r}$)")
    ax.set_title(f"{PANEL_TITLES.get(cfg.stat, cfg.stat)}\n$\\theta$={cfg.theta:g}, n={cfg.n}", fontsize=10)
    fig.colorbar(im, ax=ax, label="empirical power")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
