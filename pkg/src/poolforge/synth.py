"""Desk-scale synthetic test-bed generator.

Produces a corpus, pool qrels, and a family of system runs whose quality
is controlled by the probability of ordering a (relevant, non-relevant)
pair correctly. Relevant documents mix topic-specific signal terms into
a shared background vocabulary at a configurable rate, so per-topic
relevance is learnable but not trivially separable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .corpus import Document, Qrels, SystemRun
from .errors import ConfigError
from .rng import child_rng


@dataclass(frozen=True)
class SynthSpec:
    topics: int = 50
    pool_size: int = 200
    prevalence: tuple[float, ...] = (0.054,)
    signal_terms_per_topic: int = 16
    signal_terms_per_doc: int = 2
    background_terms: int = 60
    doc_length: int = 30
    signal_strength: float = 0.25
    background_signal: float = 0.02
    systems: int = 6
    quality_range: tuple[float, float] = (0.65, 0.95)
    rng_seed: int = 0

    def __post_init__(self):
        if self.topics < 1 or self.pool_size < 4:
            raise ConfigError("need at least 1 topic and 4 docs per pool")
        if not self.prevalence or any(not 0.0 < p < 1.0 for p in self.prevalence):
            raise ConfigError("prevalence values must lie in (0, 1)")
        if not 1 <= self.signal_terms_per_doc <= self.signal_terms_per_topic:
            raise ConfigError("signal_terms_per_doc must lie in [1, signal_terms_per_topic]")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError("signal_strength must lie in [0, 1]")
        if not 0.0 <= self.background_signal <= 1.0:
            raise ConfigError("background_signal must lie in [0, 1]")
        if self.systems < 2:
            raise ConfigError("need at least 2 systems for leaderboards")
        lo, hi = self.quality_range
        if not 0.5 < lo <= hi <= 1.0:
            raise ConfigError("quality range must lie in (0.5, 1.0]")


@dataclass
class SynthCollection:
    docs: list[Document]
    qrels: Qrels
    runs: list[SystemRun]
    topic_ids: list[str]
    meta: dict


def _noise_sigma(pairwise_accuracy: float) -> float:
    """Score-noise scale giving the requested P(correct pair order).

    Scores are label + N(0, sigma); a relevant/non-relevant pair is
    ordered correctly with probability Phi(1 / (sigma * sqrt(2))).
    """
    if pairwise_accuracy >= 1.0:
        return 0.0
    return 1.0 / (math.sqrt(2.0) * NormalDist().inv_cdf(pairwise_accuracy))


def _doc_text(rng: np.random.Generator, signal_terms, background, length, signal_prob) -> str:
    tokens = []
    for _ in range(length):
        if rng.random() < signal_prob:
            tokens.append(signal_terms[rng.integers(len(signal_terms))])
        else:
            tokens.append(background[rng.integers(len(background))])
    return " ".join(tokens)


def generate_collection(spec: SynthSpec) -> SynthCollection:
    """Deterministic synthetic collection for the given spec."""
    background = [f"bg{k:03d}" for k in range(spec.background_terms)]
    docs: list[Document] = []
    qrels = Qrels()
    topic_ids = []
    realized = {}
    for j in range(spec.topics):
        topic = f"T{j:03d}"
        topic_ids.append(topic)
        target = spec.prevalence[j % len(spec.prevalence)]
        n_rel = min(max(int(round(target * spec.pool_size)), 1), spec.pool_size - 1)
        signal = [f"{topic.lower()}w{k}" for k in range(spec.signal_terms_per_topic)]
        rng = child_rng(spec.rng_seed, "docs", topic)
        for i in range(spec.pool_size):
            relevant = i < n_rel
            if relevant:
                # each relevant doc draws from its own aspect subset, so
                # relevance evidence is spread thin across the topic terms
                picks = rng.choice(
                    spec.signal_terms_per_topic, size=spec.signal_terms_per_doc, replace=False
                )
                doc_signal = [signal[k] for k in picks]
                strength = spec.signal_strength * rng.uniform(0.8, 1.2)
            else:
                doc_signal = signal
                strength = spec.background_signal * rng.uniform(0.0, 2.0)
            text = _doc_text(rng, doc_signal, background, spec.doc_length, min(strength, 1.0))
            doc_id = f"{topic}-D{i:03d}"
            docs.append(Document(doc_id, text))
            qrels.add(topic, doc_id, 1 if relevant else 0)
        realized[topic] = n_rel / spec.pool_size

    lo, hi = spec.quality_range
    qualities = np.linspace(lo, hi, spec.systems)
    runs = []
    for s, q in enumerate(qualities):
        system_id = f"sys{s:02d}"
        sigma = _noise_sigma(float(q))
        run = SystemRun(system_id)
        rng = child_rng(spec.rng_seed, "run", system_id)
        for topic in topic_ids:
            pool = sorted(qrels.pool(topic))
            labels = np.array([qrels.label(topic, d) for d in pool], dtype=np.float64)
            scores = labels + sigma * rng.standard_normal(len(pool))
            order = sorted(range(len(pool)), key=lambda i: (-scores[i], pool[i]))
            run.rankings[topic] = [(pool[i], float(scores[i])) for i in order]
        runs.append(run)

    meta = {
        "topics": len(topic_ids),
        "pool_size": spec.pool_size,
        "prevalence_target": list(spec.prevalence),
        "prevalence_realized": realized,
        "prevalence_overall": float(np.mean(list(realized.values()))),
        "system_quality": {f"sys{s:02d}": float(q) for s, q in enumerate(qualities)},
        "rng_seed": spec.rng_seed,
    }
    return SynthCollection(docs, qrels, runs, topic_ids, meta)
