"""Seed-set construction and batch document selection.

Seeding covers two scenarios: sampling known judgments (IS) and walking
a baseline system ranking until both classes are found (RDS). Batch
selection implements uniform sampling (SPL), uncertainty sampling (SAL),
and relevance sampling (CAL). All tie-breaks are lexicographic on
doc_id so replays are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .corpus import Qrels, SystemRun
from .errors import ConfigError, DomainError, NotFoundError
from .rng import child_rng


class Strategy(str, Enum):
    SPL = "SPL"
    SAL = "SAL"
    CAL = "CAL"


class SeedKind(str, Enum):
    IS = "IS"
    RDS = "RDS"


@dataclass(frozen=True)
class SeedConfig:
    kind: SeedKind = SeedKind.IS
    is_rel: int = 5
    is_nonrel: int = 5
    rds_min_rel: int = 1
    rds_min_nonrel: int = 1
    rds_max_effort: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("is_rel", "is_nonrel", "rds_min_rel", "rds_min_nonrel", "rds_max_effort"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class SeedResult:
    judged: list[tuple[str, int, int]]  # (doc_id, label, order)
    cost: int
    discarded: bool


def seed_is(pool_qrels: Qrels, topic: str, cfg: SeedConfig) -> SeedResult:
    """Sample seed judgments uniformly from the topic's judged pool.

    Draws ``is_rel`` relevant and ``is_nonrel`` non-relevant docs without
    replacement; a pool too small on either class discards the topic.
    """
    if cfg.kind != SeedKind.IS:
        raise ConfigError(f"seed_is called with kind {cfg.kind}")
    rel = sorted(pool_qrels.relevant(topic))
    nonrel = sorted(pool_qrels.nonrelevant(topic))
    if len(rel) < cfg.is_rel or len(nonrel) < cfg.is_nonrel:
        return SeedResult([], 0, True)
    rng = child_rng(cfg.rng_seed, "is-rel")
    picked_rel = [rel[i] for i in rng.choice(len(rel), size=cfg.is_rel, replace=False)]
    rng = child_rng(cfg.rng_seed, "is-nonrel")
    picked_nonrel = [
        nonrel[i] for i in rng.choice(len(nonrel), size=cfg.is_nonrel, replace=False)
    ]
    judged = [(d, 1, i) for i, d in enumerate(picked_rel)]
    judged += [(d, 0, len(judged) + i) for i, d in enumerate(picked_nonrel)]
    return SeedResult(judged, len(judged), False)


class RdsWalk:
    """Stateful top-down walk of a ranking collecting seed judgments.

    Docs outside the judgeable pool are skipped at zero cost (pass
    ``pool=None`` to make every ranked doc judgeable, as in live use).
    The walk succeeds once at least ``min_rel`` relevant and
    ``min_nonrel`` non-relevant docs are judged, and discards the topic
    when ``max_effort`` judgments were spent (or the ranking ran out)
    without success.
    """

    def __init__(
        self,
        ranking: list[str],
        pool: set[str] | None,
        min_rel: int,
        min_nonrel: int,
        max_effort: int,
    ):
        self._docs = [d for d in ranking if pool is None or d in pool]
        self._pos = 0
        self._min_rel = min_rel
        self._min_nonrel = min_nonrel
        self._max_effort = max_effort
        self.judged: list[tuple[str, int, int]] = []
        self._rel = 0
        self._nonrel = 0

    @property
    def cost(self) -> int:
        return len(self.judged)

    @property
    def satisfied(self) -> bool:
        return self._rel >= self._min_rel and self._nonrel >= self._min_nonrel

    @property
    def discarded(self) -> bool:
        if self.satisfied:
            return False
        return self.cost >= self._max_effort or self._pos >= len(self._docs)

    def next_doc(self) -> str | None:
        """Next doc to judge, or None when the walk has ended."""
        if self.satisfied or self.discarded:
            return None
        return self._docs[self._pos]

    def record(self, doc_id: str, label: int) -> None:
        if doc_id != self._docs[self._pos]:
            raise ValueError(f"out-of-order judgment for {doc_id!r}")
        self.judged.append((doc_id, label, len(self.judged)))
        self._pos += 1
        if label == 1:
            self._rel += 1
        else:
            self._nonrel += 1


def seed_rds(run: SystemRun, pool_qrels: Qrels, topic: str, cfg: SeedConfig) -> SeedResult:
    """Walk the run's ranking for the topic, judging against the pool qrels."""
    if cfg.kind != SeedKind.RDS:
        raise ConfigError(f"seed_rds called with kind {cfg.kind}")
    if topic not in run.rankings:
        raise NotFoundError(f"run {run.system_id!r} has no ranking for topic {topic!r}")
    pool = pool_qrels.pool(topic)
    walk = RdsWalk(
        run.ranked_docs(topic), pool, cfg.rds_min_rel, cfg.rds_min_nonrel, cfg.rds_max_effort
    )
    while (doc := walk.next_doc()) is not None:
        walk.record(doc, pool_qrels.label(topic, doc))
    return SeedResult(walk.judged, walk.cost, walk.discarded)


def uncertainty(p: float) -> float:
    """Binary entropy of a relevance probability, in nats."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))


def select_batch(
    strategy: Strategy,
    probs: dict[str, float],
    unlabeled: Iterable[str],
    u: int,
    rng_seed: int,
) -> list[str]:
    """Pick the next min(u, |unlabeled|) docs to judge.

    SPL samples uniformly without replacement; SAL takes the docs whose
    relevance probability is closest to 0.5; CAL takes the most probably
    relevant. An empty unlabeled set yields an empty batch.
    """
    if u < 1:
        raise ConfigError(f"batch size must be >= 1, got {u}")
    pool = sorted(set(unlabeled))
    if not pool:
        return []
    k = min(u, len(pool))
    if strategy == Strategy.SPL:
        rng = child_rng(rng_seed, "spl")
        picks = rng.choice(len(pool), size=k, replace=False)
        return [pool[i] for i in picks]
    missing = [d for d in pool if d not in probs]
    if missing:
        raise ConfigError(f"no probability for unlabeled doc {missing[0]!r}")
    if strategy == Strategy.SAL:
        ordered = sorted(pool, key=lambda d: (abs(probs[d] - 0.5), d))
    elif strategy == Strategy.CAL:
        ordered = sorted(pool, key=lambda d: (-probs[d], d))
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    return ordered[:k]
