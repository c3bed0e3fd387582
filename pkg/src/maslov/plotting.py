"""Figure rendering for the report path.

Every CLI command that writes delimited output also renders the matching
matplotlib figure next to it (PNG, Agg backend, no display required):
eigenvalue tracks with their zero crossings, and the homotopy-square
rectangle with per-side crossing positions.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.4, 4.0)
DPI = 130


def _style(ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3, linewidth=0.5)


def save_track_figure(t, tracks, path, *, events=(), level=0.0,
                      xlabel="t", title="eigenvalue tracks"):
    """Tracks against the parameter, crossings of the level marked."""
    t = np.asarray(t, dtype=float)
    arr = np.asarray(tracks, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for j in range(arr.shape[1]):
        ax.plot(t, arr[:, j], lw=1.0)
    ax.axhline(level, color="k", lw=0.8, ls="--")
    for ev in events:
        tc = ev.get("t", ev.get("s"))
        d = ev.get("direction", ev.get("signature", 0)) or 0
        ax.plot([tc], [level], marker="^" if d > 0 else "v",
                color="tab:red", ms=7, zorder=5)
    lo, hi = np.percentile(arr, [0, 100])
    span = max(hi - lo, 1e-12)
    ax.set_ylim(max(lo - 0.05 * span, level - 0.75 * span),
                min(hi + 0.05 * span, level + 0.75 * span))
    _style(ax, xlabel, "lambda", title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_square_figure(report, lambda_inf, alpha, beta, path):
    """The (lambda, t) rectangle with side indices and crossing marks."""
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    ax.add_patch(plt.Rectangle((lambda_inf, alpha), -lambda_inf, beta - alpha,
                               fill=False, lw=1.2, color="k"))
    d = report if isinstance(report, dict) else report.to_dict()
    sides = d["side_indices"]
    span = beta - alpha
    mids = {
        "side1": (lambda_inf / 2.0, alpha),
        "side2": (0.0, alpha + span / 2.0),
        "side3": (lambda_inf / 2.0, beta),
        "side4": (lambda_inf, alpha + span / 2.0),
    }
    for j, (name, (x, y)) in enumerate(mids.items()):
        ax.annotate(f"{name}: {sides[j]:+d}", (x, y),
                    textcoords="offset points", xytext=(4, 4), fontsize=9)

    def side_point(name, s):
        if name == "side1":
            return s, alpha
        if name == "side2":
            return 0.0, s + alpha
        if name == "side3":
            return -s + span, beta
        return lambda_inf, -s + 2.0 * beta - alpha - lambda_inf

    for name in ("side1", "side2", "side3", "side4"):
        for c in d["crossings"].get(name, []):
            x, y = side_point(name, c["s"])
            sig = c.get("signature") or 0
            color = "tab:red" if sig < 0 else "tab:blue"
            ax.plot([x], [y], marker="o", color=color, ms=6, zorder=5)
    ax.set_xlim(lambda_inf * 1.1, -0.08 * lambda_inf)
    ax.set_ylim(alpha - 0.08 * span, beta + 0.08 * span)
    _style(ax, "lambda", "t", f"homotopy square: {d.get('scenario', '')}")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_phase_figure(s_values, phase_rows, path, *, title="unitary phases"):
    """Eigenphases of U_s V^{-1} along a plane path."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    arr = np.asarray(phase_rows, dtype=float)
    for j in range(arr.shape[1]):
        ax.plot(s_values, arr[:, j], lw=1.0, marker=".", ms=2)
    ax.axhline(0.0, color="k", lw=0.8, ls="--")
    ax.set_ylim(-np.pi, np.pi)
    _style(ax, "s", "arg of unit-circle eigenvalues", title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
