"""Figure rendering for the report path.

Each reporting command drops PNG plots next to its CSV output: learning
curves per strategy, rank-correlation curves per mode, and the beta
sweep. CSV stays the canonical data format; these are conveniences for
eyeballing a run.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import ACCEPTABLE_TAU, TauCurve
from .simulate import CollectionResult

_STRATEGY_STYLE = {"SPL": "tab:gray", "SAL": "tab:orange", "CAL": "tab:blue"}


def plot_learning_curves(
    results: list[CollectionResult], beta: float, out_path
) -> Path:
    """Macro-averaged F_beta vs human judging fraction, one line per strategy."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for res in results:
        name = res.strategy.value
        ax.plot(
            res.cost_points,
            res.avg_curve(beta),
            marker="o",
            markersize=3,
            label=f"{name} (AUC {res.auc(beta):.3f})",
            color=_STRATEGY_STYLE.get(name),
        )
    ax.set_xlabel("fraction of pool judged by humans")
    ax.set_ylabel(f"F{beta:g} of hybrid labels")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_tau_curves(curves: list[TauCurve], out_path) -> Path:
    """Kendall tau vs judging fraction with the 0.9 reliability bar."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        xs = [p for p, _ in curve.points]
        ys = [t for _, t in curve.points]
        ax.plot(
            xs,
            ys,
            marker="o",
            markersize=3,
            label=f"{curve.strategy} {curve.mode.value} (AUC {curve.auc:.3f})",
        )
    ax.axhline(ACCEPTABLE_TAU, color="red", linestyle="--", linewidth=1, alpha=0.6)
    ax.set_xlabel("fraction of pool judged by humans")
    ax.set_ylabel("Kendall tau vs ground truth")
    ax.set_ylim(-1.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_beta_sweep(sweep: dict[float, float | None], out_path) -> Path:
    """Pearson(F_beta series, tau series) per beta."""
    betas = sorted(sweep)
    values = [sweep[b] for b in betas]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = range(len(betas))
    ax.bar(xs, [v if v is not None else 0.0 for v in values], color="tab:blue")
    for x, v in zip(xs, values):
        if v is None:
            ax.text(x, 0.02, "undef", ha="center", fontsize=8, rotation=90)
    ax.set_xticks(list(xs), [f"{b:g}" for b in betas])
    ax.set_xlabel("beta")
    ax.set_ylabel("Pearson(F-beta curve, tau curve)")
    ax.set_ylim(-1.0, 1.05)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
