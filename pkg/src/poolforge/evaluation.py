"""Leaderboard experiments: system rankings from partial or hybrid
judgments versus the ground-truth ranking, rank-correlation curves over
judging cost, and the F-measure beta sweep."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .corpus import HUMAN, MACHINE, Qrels, SystemRun
from .errors import ConfigError, UndefinedMetricError
from .metrics import (
    Leaderboard,
    auc_trapezoid,
    kendall_tau,
    mean_average_precision,
    mean_bpref,
    pearson,
)
from .simulate import CollectionResult

ACCEPTABLE_TAU = 0.9  # conventional reliability bar for IR evaluation


class TauMode(str, Enum):
    HUMAN_ONLY_BPREF = "human_only_bpref"
    HYBRID_MAP = "hybrid_map"


@dataclass
class TauCurve:
    mode: TauMode
    strategy: str
    points: list[tuple[float, float]]  # (cost point, tau)
    auc: float

    def taus(self) -> list[float]:
        return [t for _, t in self.points]

    def acceptable(self) -> list[bool]:
        return [t >= ACCEPTABLE_TAU for _, t in self.points]


def ground_truth_leaderboard(
    runs: list[SystemRun], full_qrels: Qrels, topics: list[str] | None = None
) -> Leaderboard:
    """Systems ranked by MAP over all judgments, descending."""
    if len(runs) < 2:
        raise ConfigError("need at least 2 runs for a leaderboard")
    scores = {}
    for run in runs:
        scores[run.system_id], _ = mean_average_precision(run, full_qrels, topics)
    return Leaderboard.from_scores(scores)


def human_qrels_at(sim: CollectionResult, snap_index: int) -> Qrels:
    """Qrels holding exactly the human judgments made by the snapshot."""
    qrels = Qrels()
    for topic in sim.active_topics():
        for doc, label in topic.snapshots[snap_index].human_judged:
            qrels.add(topic.topic_id, doc, label, HUMAN)
    return qrels


def hybrid_qrels_at(sim: CollectionResult, snap_index: int) -> Qrels:
    """Full-pool qrels at the snapshot: human labels plus machine labels."""
    qrels = Qrels()
    for topic in sim.active_topics():
        snap = topic.snapshots[snap_index]
        human = {d for d, _ in snap.human_judged}
        for doc, label in snap.hybrid_labels.items():
            qrels.add(topic.topic_id, doc, label, HUMAN if doc in human else MACHINE)
    return qrels


def tau_curve(
    sim: CollectionResult,
    runs: list[SystemRun],
    full_qrels: Qrels,
    mode: TauMode,
) -> TauCurve:
    """Rank correlation against the ground truth at every cost point.

    Human-only mode scores systems with bpref over the human judgments
    alone (everything else is unjudged); hybrid mode scores with MAP over
    the fully labeled pool. Topics discarded at seeding are dropped from
    both sides so the leaderboards cover identical topic sets.
    """
    mode = TauMode(mode)
    active = sim.active_topics()
    if not active:
        raise ConfigError("simulation has no usable topics")
    if not all(t.snapshots for t in active):
        raise ConfigError("simulation snapshots missing; cannot build curves")
    topics = [t.topic_id for t in active]
    truth = ground_truth_leaderboard(runs, full_qrels, topics)
    points = []
    for i, cost_point in enumerate(sim.cost_points):
        if mode == TauMode.HUMAN_ONLY_BPREF:
            qrels_cp = human_qrels_at(sim, i)
            scorer = mean_bpref
        else:
            qrels_cp = hybrid_qrels_at(sim, i)
            scorer = mean_average_precision
        scores = {}
        for run in runs:
            scores[run.system_id], _ = scorer(run, qrels_cp, topics)
        board = Leaderboard.from_scores(scores)
        points.append((cost_point, kendall_tau(truth, board)))
    auc = auc_trapezoid([p for p, _ in points], [t for _, t in points])
    return TauCurve(mode, str(sim.strategy.value), points, auc)


def beta_sweep(
    sim: CollectionResult, curve: TauCurve, betas: list[float]
) -> dict[float, float | None]:
    """Pearson correlation of each F_beta-vs-cost series with the tau series.

    A constant series has no defined correlation; those betas map to None.
    """
    missing = [b for b in betas if b not in sim.betas]
    if missing:
        raise ConfigError(f"simulation did not record F scores for beta={missing[0]}")
    taus = curve.taus()
    if len(taus) != len(sim.cost_points):
        raise ConfigError("tau curve does not align with the simulation cost points")
    out: dict[float, float | None] = {}
    for beta in betas:
        series = sim.avg_curve(beta)
        try:
            out[beta] = pearson(series, taus)
        except UndefinedMetricError:
            out[beta] = None
    return out
