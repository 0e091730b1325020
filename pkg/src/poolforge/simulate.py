"""Finite-pool active-learning harness.

Runs the batch judging loop per topic against a qrels-backed oracle:
seed, then repeatedly retrain / select / judge until the pool or the
budget is exhausted, emitting the realized judgment state at each
configured cost point. A live-mode variant with the judging service's
budget semantics supports replaying recorded sessions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .corpus import Qrels, SparseVector, SystemRun, VectorStore
from .errors import ConfigError, EmptyResultError, NotFoundError
from .metrics import ConfusionCounts, auc_trapezoid, confusion, f_beta
from .model import (
    LogisticModel,
    TrainConfig,
    classify,
    fit_matrix,
    oversample_indices,
    predict_proba,
    predict_proba_matrix,
)
from .rng import child_seed
from .selection import (
    RdsWalk,
    SeedConfig,
    SeedKind,
    Strategy,
    seed_is,
    seed_rds,
    select_batch,
)

DEFAULT_COST_POINTS = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_BETAS = (0.25, 0.5, 1.0, 3.0, 5.0)


@dataclass(frozen=True)
class SimulationConfig:
    strategy: Strategy = Strategy.CAL
    seed_cfg: SeedConfig = SeedConfig()
    train_cfg: TrainConfig = TrainConfig()
    batch_fraction: float = 0.10
    cost_points: tuple[float, ...] = DEFAULT_COST_POINTS
    betas: tuple[float, ...] = DEFAULT_BETAS
    budget: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ConfigError("batch_fraction must lie in (0, 1]")
        pts = tuple(self.cost_points)
        if any(not 0.0 <= p <= 1.0 for p in pts):
            raise ConfigError("cost points must lie in [0, 1]")
        if list(pts) != sorted(pts) or len(set(pts)) != len(pts):
            raise ConfigError("cost points must be strictly ascending")
        if any(b <= 0 for b in self.betas):
            raise ConfigError("betas must be positive")
        if self.budget is not None and self.budget < 0:
            raise ConfigError("budget must be >= 0")


@dataclass(frozen=True)
class CostSnapshot:
    cost_point: float
    human_fraction: float
    human_judged: tuple[tuple[str, int], ...]
    hybrid_labels: dict[str, int]
    confusion: ConfusionCounts
    f_beta_scores: dict[float, float]


@dataclass
class TopicResult:
    topic_id: str
    pool_size: int
    prevalence: float
    seed_cost: int
    snapshots: list[CostSnapshot]
    batches: list[list[tuple[str, int]]]  # batches[0] is the seed phase
    discarded: bool

    def curve(self, beta: float) -> list[float]:
        return [s.f_beta_scores[beta] for s in self.snapshots]


@dataclass
class CollectionResult:
    strategy: Strategy
    cost_points: tuple[float, ...]
    betas: tuple[float, ...]
    topics: list[TopicResult] = field(default_factory=list)

    def active_topics(self) -> list[TopicResult]:
        return [t for t in self.topics if not t.discarded]

    def discarded_topics(self) -> list[str]:
        return [t.topic_id for t in self.topics if t.discarded]

    def avg_curve(self, beta: float) -> list[float]:
        active = self.active_topics()
        if not active:
            raise EmptyResultError("all topics were discarded")
        return [
            float(np.mean([t.snapshots[i].f_beta_scores[beta] for t in active]))
            for i in range(len(self.cost_points))
        ]

    def auc(self, beta: float) -> float:
        return auc_trapezoid(list(self.cost_points), self.avg_curve(beta))

    def topic_auc(self, topic: TopicResult, beta: float) -> float:
        return auc_trapezoid(list(self.cost_points), topic.curve(beta))


def hybrid_labels(
    human: Iterable[tuple[str, int]],
    model: LogisticModel,
    pool_vectors: dict[str, SparseVector],
) -> dict[str, int]:
    """Full-pool labels: human judgments override classifier predictions."""
    human_map = dict(human)
    unknown = set(human_map) - set(pool_vectors)
    if unknown:
        raise NotFoundError(f"judged doc {sorted(unknown)[0]!r} outside the pool")
    labels = {}
    for doc_id in pool_vectors:
        if doc_id in human_map:
            labels[doc_id] = human_map[doc_id]
        else:
            labels[doc_id] = classify(predict_proba(model, pool_vectors[doc_id]))
    return labels


_DENSE_CELL_LIMIT = 4_000_000  # pool cells below this train on a dense matrix


class _PoolView:
    """Per-topic row view over the vector store with cached predictions."""

    def __init__(self, vectors: VectorStore, doc_ids: list[str]):
        self.doc_ids = doc_ids
        self.matrix = vectors.submatrix(doc_ids)
        self.row = {d: i for i, d in enumerate(doc_ids)}
        # BLAS beats sparse ops by a wide margin at desk-scale pools
        if len(doc_ids) * vectors.dim <= _DENSE_CELL_LIMIT:
            self.matrix = np.asarray(self.matrix.todense())

    def probs(self, mdl: LogisticModel) -> np.ndarray:
        return predict_proba_matrix(mdl, self.matrix)

    def fit(
        self,
        labeled: list[tuple[str, int]],
        cfg: TrainConfig,
        master_seed: int,
        topic: str,
        stage: int,
    ) -> LogisticModel:
        rows = [self.row[d] for d, _ in labeled]
        y = np.array([l for _, l in labeled], dtype=np.float64)
        if cfg.oversample:
            extra = oversample_indices(y, child_seed(master_seed, "oversample", topic, stage))
            if extra:
                rows = rows + [rows[i] for i in extra]
                y = np.concatenate([y, y[extra]])
        return fit_matrix(self.matrix[rows], y, cfg)


def batch_size_for_pool(batch_fraction: float, pool_size: int) -> int:
    return math.ceil(batch_fraction * pool_size)


def run_topic(
    topic: str,
    pool_qrels: Qrels,
    vectors: VectorStore,
    cfg: SimulationConfig,
    run_for_rds: SystemRun | None = None,
) -> TopicResult:
    """Simulate one topic's judging campaign against infallible pool qrels.

    The budget is charged per human judgment: the seed phase first, then
    full batches of u = ceil(batch_fraction * pool_size); a final short
    batch is allowed when fewer than u docs remain, but a round whose
    batch the remaining budget cannot cover does not start.
    """
    pool = sorted(pool_qrels.pool(topic))
    pool_size = len(pool)
    prevalence = pool_qrels.prevalence(topic)
    seed_cfg = replace(cfg.seed_cfg, rng_seed=child_seed(cfg.rng_seed, "seed", topic))
    if seed_cfg.kind == SeedKind.IS:
        seed = seed_is(pool_qrels, topic, seed_cfg)
    else:
        if run_for_rds is None:
            raise ConfigError("RDS seeding requires a system run")
        seed = seed_rds(run_for_rds, pool_qrels, topic, seed_cfg)
    if seed.discarded:
        return TopicResult(topic, pool_size, prevalence, seed.cost, [], [], True)

    view = _PoolView(vectors, pool)
    labeled: list[tuple[str, int]] = [(d, l) for d, l, _ in seed.judged]
    batches: list[list[tuple[str, int]]] = [list(labeled)]
    unlabeled = set(pool) - {d for d, _ in labeled}
    u = batch_size_for_pool(cfg.batch_fraction, pool_size)
    budget_left = None if cfg.budget is None else cfg.budget - seed.cost

    mdl = view.fit(labeled, cfg.train_cfg, cfg.rng_seed, topic, stage=0)
    states: list[tuple[int, LogisticModel]] = [(len(labeled), mdl)]
    stage = 0
    while unlabeled:
        u_round = min(u, len(unlabeled))
        if budget_left is not None and budget_left < u_round:
            break
        stage += 1
        if cfg.strategy == Strategy.SPL:
            probs: dict[str, float] = {}
        else:
            all_probs = view.probs(mdl)
            probs = {d: float(all_probs[view.row[d]]) for d in unlabeled}
        batch = select_batch_for_round(cfg, topic, stage, probs, unlabeled, u_round)
        judged = [(d, pool_qrels.label(topic, d)) for d in batch]
        labeled.extend(judged)
        batches.append(judged)
        unlabeled.difference_update(batch)
        if budget_left is not None:
            budget_left -= u_round
        mdl = view.fit(labeled, cfg.train_cfg, cfg.rng_seed, topic, stage=stage)
        states.append((len(labeled), mdl))

    oracle = pool_qrels.labels(topic)
    snapshots = [
        _snapshot(cp, labeled, states, view, oracle, pool_size, seed.cost, cfg.betas)
        for cp in cfg.cost_points
    ]
    return TopicResult(topic, pool_size, prevalence, seed.cost, snapshots, batches, False)


def select_batch_for_round(
    cfg: SimulationConfig,
    topic: str,
    stage: int,
    probs: dict[str, float],
    unlabeled: set[str],
    u_round: int,
) -> list[str]:
    return select_batch(
        cfg.strategy, probs, unlabeled, u_round, child_seed(cfg.rng_seed, "select", topic, stage)
    )


def _snapshot(
    cost_point: float,
    labeled: list[tuple[str, int]],
    states: list[tuple[int, LogisticModel]],
    view: _PoolView,
    oracle: dict[str, int],
    pool_size: int,
    seed_cost: int,
    betas: tuple[float, ...],
) -> CostSnapshot:
    """Realized state at a cost point: the last completed batch whose
    cumulative human count fits under floor(cost_point * pool), with the
    seed-only state as the floor (no interpolation between batches)."""
    target = max(int(cost_point * pool_size + 1e-9), seed_cost)
    count, mdl = states[0]
    for c, m in states:
        if c <= target:
            count, mdl = c, m
        else:
            break
    human = tuple(labeled[:count])
    human_map = dict(human)
    machine_probs = view.probs(mdl)
    hybrid = {}
    for doc in view.doc_ids:
        if doc in human_map:
            hybrid[doc] = human_map[doc]
        else:
            hybrid[doc] = classify(float(machine_probs[view.row[doc]]))
    counts = confusion(hybrid, oracle)
    scores = {beta: f_beta(counts, beta) for beta in betas}
    return CostSnapshot(cost_point, count / pool_size, human, hybrid, counts, scores)


def pick_rds_run(runs: list[SystemRun], rng_seed: int) -> SystemRun:
    """Uniform choice of the baseline ranking among participating systems."""
    if not runs:
        raise ConfigError("RDS seeding requires at least one run")
    ordered = sorted(runs, key=lambda r: r.system_id)
    idx = int(np.random.default_rng(child_seed(rng_seed, "rds-run")).integers(len(ordered)))
    return ordered[idx]


def run_collection(
    topics: list[str],
    qrels: Qrels,
    vectors: VectorStore,
    cfg: SimulationConfig,
    runs: list[SystemRun] | None = None,
    threads: int = 1,
) -> CollectionResult:
    """Run every topic and aggregate; discarded topics are kept listed but
    excluded from every average."""
    rds_run = None
    if cfg.seed_cfg.kind == SeedKind.RDS:
        rds_run = pick_rds_run(runs or [], cfg.rng_seed)
    ordered = sorted(topics)

    def one(topic: str) -> TopicResult:
        return run_topic(topic, qrels, vectors, cfg, rds_run)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, ordered))
    else:
        results = [one(t) for t in ordered]
    results.sort(key=lambda t: t.topic_id)
    collection = CollectionResult(cfg.strategy, tuple(cfg.cost_points), tuple(cfg.betas), results)
    if not collection.active_topics():
        raise EmptyResultError("all topics were discarded at seeding")
    return collection


@dataclass
class PrevalenceBin:
    low: float
    high: float
    topic_ids: list[str]
    avg_curves: dict[float, list[float]]


def bin_by_prevalence(result: CollectionResult, n_bins: int) -> list[PrevalenceBin]:
    """Group non-discarded topics into quantile bins of prevalence.

    Duplicate quantile edges collapse, so a collection whose topics all
    share one prevalence yields a single bin.
    """
    if n_bins < 1:
        raise ConfigError("n_bins must be >= 1")
    active = result.active_topics()
    if not active:
        raise EmptyResultError("all topics were discarded")
    prevalences = np.array([t.prevalence for t in active])
    edges = np.unique(np.quantile(prevalences, np.linspace(0.0, 1.0, n_bins + 1)))
    if len(edges) < 2:
        assignments = np.zeros(len(active), dtype=int)
        edges = np.array([edges[0], edges[0]])
    else:
        assignments = np.clip(
            np.searchsorted(edges, prevalences, side="right") - 1, 0, len(edges) - 2
        )
    bins = []
    for b in range(len(edges) - 1):
        members = [t for t, a in zip(active, assignments) if a == b]
        if not members:
            continue
        curves = {
            beta: [
                float(np.mean([t.snapshots[i].f_beta_scores[beta] for t in members]))
                for i in range(len(result.cost_points))
            ]
            for beta in result.betas
        }
        bins.append(
            PrevalenceBin(float(edges[b]), float(edges[b + 1]), [t.topic_id for t in members], curves)
        )
    return bins


# ---------------------------------------------------------------------------
# Live-mode loop (judging-service semantics)
# ---------------------------------------------------------------------------


@dataclass
class LiveResult:
    batches: list[list[tuple[str, int]]]
    discarded: bool
    model: LogisticModel | None
    human: list[tuple[str, int]]
    hybrid: dict[str, int] | None


def run_live_topic(
    topic: str,
    universe: list[str],
    vectors: VectorStore,
    ranking: list[str],
    oracle: Callable[[str], int],
    cfg: SimulationConfig,
) -> LiveResult:
    """Algorithm loop with live-session budget semantics.

    Every served document costs one judgment (seeding walks the baseline
    ranking one doc at a time), and active batches are truncated to
    min(u, remaining budget, remaining pool). Replaying a recorded
    session's oracle through this loop reproduces its batch sequence.
    """
    pool = sorted(universe)
    view = _PoolView(vectors, pool)
    u = batch_size_for_pool(cfg.batch_fraction, len(pool))
    budget_left = cfg.budget if cfg.budget is not None else len(pool)

    walk = RdsWalk(
        ranking,
        set(pool),
        cfg.seed_cfg.rds_min_rel,
        cfg.seed_cfg.rds_min_nonrel,
        cfg.seed_cfg.rds_max_effort,
    )
    seed_batch: list[tuple[str, int]] = []
    while budget_left > 0 and (doc := walk.next_doc()) is not None:
        budget_left -= 1
        label = int(oracle(doc))
        walk.record(doc, label)
        seed_batch.append((doc, label))
    batches = [seed_batch]
    if not walk.satisfied:
        return LiveResult(batches, walk.discarded, None, list(seed_batch), None)

    labeled = list(seed_batch)
    unlabeled = set(pool) - {d for d, _ in labeled}
    mdl = view.fit(labeled, cfg.train_cfg, cfg.rng_seed, topic, stage=0)
    stage = 0
    while unlabeled:
        u_round = min(u, len(unlabeled), budget_left)
        if u_round == 0:
            break
        stage += 1
        if cfg.strategy == Strategy.SPL:
            probs: dict[str, float] = {}
        else:
            all_probs = view.probs(mdl)
            probs = {d: float(all_probs[view.row[d]]) for d in unlabeled}
        batch = select_batch_for_round(cfg, topic, stage, probs, unlabeled, u_round)
        budget_left -= len(batch)
        judged = [(d, int(oracle(d))) for d in batch]
        labeled.extend(judged)
        batches.append(judged)
        unlabeled.difference_update(batch)
        mdl = view.fit(labeled, cfg.train_cfg, cfg.rng_seed, topic, stage=stage)

    probs_all = view.probs(mdl)
    human_map = dict(labeled)
    hybrid = {
        d: human_map[d] if d in human_map else classify(float(probs_all[view.row[d]]))
        for d in pool
    }
    return LiveResult(batches, False, mdl, labeled, hybrid)
