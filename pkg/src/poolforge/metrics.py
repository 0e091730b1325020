"""Classification and IR effectiveness measures plus correlation statistics.

All functions are pure and stateless. Rankings are lists of doc_ids in
evaluation order; judgments are binary dicts ``doc_id -> {0, 1}``. Docs
missing from the judgment dict are unjudged: average precision counts
them as non-relevant, bpref skips them entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UndefinedMetricError

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 fallback


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(predicted: dict[str, int], truth: dict[str, int]) -> ConfusionCounts:
    """Counts over the keys of ``truth``; ``predicted`` must cover them."""
    tp = fp = fn = tn = 0
    for doc, y in truth.items():
        p = predicted[doc]
        if y == 1 and p == 1:
            tp += 1
        elif y == 1:
            fn += 1
        elif p == 1:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def f_beta(c: ConfusionCounts, beta: float) -> float:
    """F-measure (1 + b^2) * P * R / (b^2 * P + R).

    Degenerate cases: with no positives anywhere (tp = fp = fn = 0) the
    labeling is vacuously perfect and scores 1.0; an undefined precision
    or recall is otherwise treated as 0.
    """
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if c.tp == 0 and c.fp == 0 and c.fn == 0:
        return 1.0
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else 0.0
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def average_precision(ranking: list[str], judgments: dict[str, int]) -> float:
    """Mean of precision at each relevant document's rank.

    The denominator is the total number of judged-relevant docs, so
    relevant docs never retrieved contribute zero. Unjudged retrieved
    docs count as non-relevant.
    """
    if not ranking:
        raise DomainError("ranking must be non-empty")
    n_relevant = sum(1 for v in judgments.values() if v == 1)
    if n_relevant == 0:
        raise UndefinedMetricError("average precision undefined with no relevant docs")
    hits = 0
    total = 0.0
    for rank, doc in enumerate(ranking, start=1):
        if judgments.get(doc) == 1:
            hits += 1
            total += hits / rank
    return total / n_relevant


def bpref(ranking: list[str], judgments: dict[str, int]) -> float:
    """Binary preference over judged docs only.

    With R judged-relevant and N judged-non-relevant docs, each retrieved
    relevant doc r scores 1 - |non-relevant ranked above r| / min(R, N),
    counting only the first R retrieved non-relevant docs as penalizers;
    unjudged docs are skipped. When N = 0 the score degrades to the
    fraction of relevant docs retrieved.
    """
    n_rel = sum(1 for v in judgments.values() if v == 1)
    n_nonrel = sum(1 for v in judgments.values() if v == 0)
    if n_rel == 0:
        raise UndefinedMetricError("bpref undefined with no judged relevant docs")
    if n_nonrel == 0:
        retrieved_rel = sum(1 for d in ranking if judgments.get(d) == 1)
        return retrieved_rel / n_rel
    denom = min(n_rel, n_nonrel)
    nonrel_above = 0
    total = 0.0
    for doc in ranking:
        label = judgments.get(doc)
        if label == 1:
            total += 1.0 - min(nonrel_above, n_rel) / denom
        elif label == 0:
            nonrel_above += 1
    return total / n_rel


@dataclass(frozen=True)
class Leaderboard:
    """Systems sorted by score descending (ties broken by system_id)."""

    entries: tuple[tuple[str, float], ...]

    @classmethod
    def from_scores(cls, scores: dict[str, float]) -> "Leaderboard":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(tuple(ordered))

    def systems(self) -> set[str]:
        return {s for s, _ in self.entries}

    def scores(self) -> dict[str, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def kendall_tau(a: Leaderboard, b: Leaderboard, variant: str = "b") -> float:
    """Rank correlation between two leaderboards over the same systems.

    The default is the tie-adjusted statistic (variant "b"), which equals
    the classical coefficient when neither scoring has ties; variant "a"
    always divides by n(n-1)/2.
    """
    if variant not in ("a", "b"):
        raise DomainError(f"unknown tau variant {variant!r}")
    if a.systems() != b.systems():
        raise DomainError("leaderboards must rank the same systems")
    systems = sorted(a.systems())
    n = len(systems)
    if n < 2:
        raise UndefinedMetricError("tau undefined for fewer than 2 systems")
    sa = a.scores()
    sb = b.scores()
    concordant = discordant = tied_a = tied_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = sa[systems[i]] - sa[systems[j]]
            db = sb[systems[i]] - sb[systems[j]]
            if da == 0 and db == 0:
                continue
            if da == 0:
                tied_a += 1
            elif db == 0:
                tied_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    if variant == "a":
        return (concordant - discordant) / (n * (n - 1) / 2)
    denom = math.sqrt(
        (concordant + discordant + tied_a) * (concordant + discordant + tied_b)
    )
    if denom == 0.0:
        raise UndefinedMetricError("tau-b undefined: a leaderboard is fully tied")
    return (concordant - discordant) / denom


def pearson(x: list[float], y: list[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise DomainError("series must have equal length")
    if len(x) < 2:
        raise UndefinedMetricError("pearson undefined for fewer than 2 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sx = float(np.sqrt(xc @ xc))
    sy = float(np.sqrt(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError("pearson undefined for a constant series")
    return float((xc @ yc) / (sx * sy))


def auc_trapezoid(xs: list[float], ys: list[float]) -> float:
    """Area under the piecewise-linear curve through (xs, ys)."""
    if len(xs) != len(ys):
        raise DomainError("xs and ys must have equal length")
    if len(xs) < 2:
        raise DomainError("need at least 2 points")
    xa = np.asarray(xs, dtype=np.float64)
    if not np.all(np.diff(xa) > 0):
        raise DomainError("xs must be strictly ascending")
    return float(_trapezoid(np.asarray(ys, dtype=np.float64), xa))


def mean_average_precision(
    run, qrels, topics: list[str] | None = None
) -> tuple[float, list[str]]:
    """MAP over topics with at least one relevant doc.

    Topics without relevant docs are skipped and reported back; topics
    the run never ranked score zero. Returns (map, skipped_topics).
    """
    chosen = topics if topics is not None else qrels.topics()
    scores = []
    skipped = []
    for topic in chosen:
        judgments = qrels.labels(topic)
        if not any(v == 1 for v in judgments.values()):
            skipped.append(topic)
            continue
        ranking = run.rankings.get(topic)
        if not ranking:
            scores.append(0.0)
            continue
        scores.append(average_precision([d for d, _ in ranking], judgments))
    if not scores:
        raise UndefinedMetricError("no scoreable topics for MAP")
    return float(np.mean(scores)), skipped


def mean_bpref(run, qrels, topics: list[str] | None = None) -> tuple[float, list[str]]:
    """Mean bpref over topics with at least one judged relevant doc."""
    chosen = topics if topics is not None else qrels.topics()
    scores = []
    skipped = []
    for topic in chosen:
        judgments = qrels.labels(topic)
        if not any(v == 1 for v in judgments.values()):
            skipped.append(topic)
            continue
        ranking = run.rankings.get(topic)
        if not ranking:
            scores.append(0.0)
            continue
        scores.append(bpref([d for d, _ in ranking], judgments))
    if not scores:
        raise UndefinedMetricError("no scoreable topics for bpref")
    return float(np.mean(scores)), skipped
