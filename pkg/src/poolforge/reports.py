"""Delimited report files with stable schemas.

All writers are deterministic (fixed column order, sorted rows, fixed
float formatting) and atomic (temp file + rename), so reruns on the same
inputs produce byte-identical output.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .evaluation import TauCurve
from .simulate import CollectionResult

AVG_ROW = "AVG"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def atomic_write_text(path, text: str) -> Path:
    """Write via a sibling temp file and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def results_csv(results: list[CollectionResult]) -> str:
    """Per-topic and macro-average F_beta at each cost point.

    Columns: topic,strategy,cost_point,beta,score. The AVG row carries
    the macro average over non-discarded topics.
    """
    lines = ["topic,strategy,cost_point,beta,score"]
    for res in sorted(results, key=lambda r: r.strategy.value):
        strat = res.strategy.value
        for topic in res.active_topics():
            for i, cp in enumerate(res.cost_points):
                for beta in res.betas:
                    score = topic.snapshots[i].f_beta_scores[beta]
                    lines.append(
                        f"{topic.topic_id},{strat},{_fmt(cp)},{_fmt(beta)},{_fmt(score)}"
                    )
        for i, cp in enumerate(res.cost_points):
            for beta in res.betas:
                lines.append(
                    f"{AVG_ROW},{strat},{_fmt(cp)},{_fmt(beta)},{_fmt(res.avg_curve(beta)[i])}"
                )
    return "\n".join(lines) + "\n"


def auc_csv(results: list[CollectionResult]) -> str:
    """AUC summary: columns topic,strategy,beta,auc."""
    lines = ["topic,strategy,beta,auc"]
    for res in sorted(results, key=lambda r: r.strategy.value):
        strat = res.strategy.value
        for topic in res.active_topics():
            for beta in res.betas:
                lines.append(
                    f"{topic.topic_id},{strat},{_fmt(beta)},{_fmt(res.topic_auc(topic, beta))}"
                )
        for beta in res.betas:
            lines.append(f"{AVG_ROW},{strat},{_fmt(beta)},{_fmt(res.auc(beta))}")
    return "\n".join(lines) + "\n"


def prevalence_bins_csv(binned: list[tuple[CollectionResult, list]]) -> str:
    """Per-bin macro-average curves for each strategy's collection run.

    Columns: strategy,bin_low,bin_high,topics,cost_point,beta,score.
    """
    lines = ["strategy,bin_low,bin_high,topics,cost_point,beta,score"]
    for res, bins in sorted(binned, key=lambda rb: rb[0].strategy.value):
        strat = res.strategy.value
        for b in bins:
            prefix = f"{strat},{_fmt(b.low)},{_fmt(b.high)},{len(b.topic_ids)}"
            for i, cp in enumerate(res.cost_points):
                for beta in res.betas:
                    lines.append(f"{prefix},{_fmt(cp)},{_fmt(beta)},{_fmt(b.avg_curves[beta][i])}")
    return "\n".join(lines) + "\n"


def tau_csv(curves: list[TauCurve]) -> str:
    """Columns: mode,strategy,cost_point,tau,auc,meets_0.9."""
    lines = ["mode,strategy,cost_point,tau,auc,meets_0.9"]
    for curve in sorted(curves, key=lambda c: (c.mode.value, c.strategy)):
        for (cp, tau), ok in zip(curve.points, curve.acceptable()):
            lines.append(
                f"{curve.mode.value},{curve.strategy},{_fmt(cp)},{_fmt(tau)},"
                f"{_fmt(curve.auc)},{str(ok).lower()}"
            )
    return "\n".join(lines) + "\n"


def sweep_csv(sweeps: dict[str, dict[float, float | None]]) -> str:
    """Columns: mode,strategy,beta,pearson (blank when undefined)."""
    lines = ["mode,strategy,beta,pearson"]
    for key in sorted(sweeps):
        mode, strategy = key.split("/", 1)
        for beta in sorted(sweeps[key]):
            val = sweeps[key][beta]
            cell = "" if val is None else _fmt(val)
            lines.append(f"{mode},{strategy},{_fmt(beta)},{cell}")
    return "\n".join(lines) + "\n"
