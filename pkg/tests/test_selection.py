import math

import numpy as np
import pytest

from poolforge.corpus import Qrels, SystemRun
from poolforge.errors import ConfigError, DomainError, NotFoundError
from poolforge.selection import (
    SeedConfig,
    SeedKind,
    Strategy,
    seed_is,
    seed_rds,
    select_batch,
    uncertainty,
)


def make_qrels(topic, n_rel, n_nonrel):
    qrels = Qrels()
    for i in range(n_rel):
        qrels.add(topic, f"rel{i:03d}", 1)
    for i in range(n_nonrel):
        qrels.add(topic, f"non{i:03d}", 0)
    return qrels


class TestUncertainty:
    def test_maximum_at_half(self):
        assert uncertainty(0.5) == pytest.approx(math.log(2), abs=1e-12)

    def test_degenerate_distribution(self):
        assert uncertainty(1.0) == 0.0
        assert uncertainty(0.0) == 0.0

    def test_hand_value(self):
        assert uncertainty(0.9) == pytest.approx(0.3250829734, abs=1e-9)

    def test_symmetry(self):
        for p in np.linspace(0.0, 1.0, 21):
            assert uncertainty(float(p)) == pytest.approx(uncertainty(float(1 - p)), abs=1e-12)

    @pytest.mark.parametrize("p", [-0.1, 1.0001, 2.0])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            uncertainty(p)


class TestSelectBatch:
    def test_cal_argmax(self):
        probs = {"a": 0.9, "b": 0.52, "c": 0.1}
        assert select_batch(Strategy.CAL, probs, {"a", "b", "c"}, 1, 0) == ["a"]

    def test_sal_argmin_distance_to_half(self):
        probs = {"a": 0.9, "b": 0.52, "c": 0.1}
        assert select_batch(Strategy.SAL, probs, {"a", "b", "c"}, 1, 0) == ["b"]

    def test_sal_tie_lexicographic(self):
        probs = {"a": 0.4, "b": 0.6}
        assert select_batch(Strategy.SAL, probs, {"a", "b"}, 1, 0) == ["a"]

    def test_empty_unlabeled_gives_empty(self):
        assert select_batch(Strategy.CAL, {}, set(), 3, 0) == []

    def test_batch_size_capped(self):
        probs = {"a": 0.9, "b": 0.5}
        assert len(select_batch(Strategy.CAL, probs, {"a", "b"}, 10, 0)) == 2

    def test_subset_and_duplicate_free(self):
        rng = np.random.default_rng(15)
        for strategy in Strategy:
            for _ in range(30):
                pool = {f"d{i}" for i in range(int(rng.integers(1, 20)))}
                probs = {d: float(rng.random()) for d in pool}
                u = int(rng.integers(1, 25))
                out = select_batch(strategy, probs, pool, u, int(rng.integers(1 << 30)))
                assert len(out) == len(set(out)) == min(u, len(pool))
                assert set(out) <= pool

    def test_cal_invariant_to_monotone_transform(self):
        rng = np.random.default_rng(16)
        pool = {f"d{i}" for i in range(12)}
        probs = {d: float(rng.random()) for d in pool}
        warped = {d: 1 / (1 + math.exp(-(3 * p - 1))) for d, p in probs.items()}
        assert select_batch(Strategy.CAL, probs, pool, 5, 0) == select_batch(
            Strategy.CAL, warped, pool, 5, 0
        )

    def test_sal_invariant_to_reflection(self):
        rng = np.random.default_rng(17)
        pool = {f"d{i}" for i in range(12)}
        probs = {d: float(rng.random()) for d in pool}
        reflected = {d: 1.0 - p for d, p in probs.items()}
        assert select_batch(Strategy.SAL, probs, pool, 5, 0) == select_batch(
            Strategy.SAL, reflected, pool, 5, 0
        )

    def test_spl_reproducible(self):
        pool = {f"d{i}" for i in range(30)}
        a = select_batch(Strategy.SPL, {}, pool, 10, 99)
        b = select_batch(Strategy.SPL, {}, pool, 10, 99)
        assert a == b

    def test_spl_uniform_within_binomial_bounds(self):
        pool = [f"d{i}" for i in range(10)]
        trials = 2000
        counts = {d: 0 for d in pool}
        for seed in range(trials):
            for d in select_batch(Strategy.SPL, {}, set(pool), 3, seed):
                counts[d] += 1
        p = 3 / 10
        sigma = math.sqrt(trials * p * (1 - p))
        for d in pool:
            assert abs(counts[d] - trials * p) < 3 * sigma

    def test_missing_prob_rejected(self):
        with pytest.raises(ConfigError):
            select_batch(Strategy.CAL, {"a": 0.5}, {"a", "b"}, 1, 0)

    def test_bad_batch_size(self):
        with pytest.raises(ConfigError):
            select_batch(Strategy.CAL, {"a": 0.5}, {"a"}, 0, 0)


class TestSeedIS:
    def test_default_cost_ten(self):
        qrels = make_qrels("t", 5, 200)
        result = seed_is(qrels, "t", SeedConfig(rng_seed=1))
        assert not result.discarded
        assert result.cost == 10
        assert len(result.judged) == 10

    def test_discard_when_too_few_relevant(self):
        qrels = make_qrels("t", 4, 200)
        result = seed_is(qrels, "t", SeedConfig(rng_seed=1))
        assert result.discarded
        assert result.judged == []

    def test_discard_when_too_few_nonrelevant(self):
        qrels = make_qrels("t", 20, 4)
        assert seed_is(qrels, "t", SeedConfig(rng_seed=1)).discarded

    def test_whole_pool_when_exact(self):
        qrels = make_qrels("t", 5, 5)
        result = seed_is(qrels, "t", SeedConfig(rng_seed=1))
        assert {d for d, _, _ in result.judged} == qrels.pool("t")

    def test_exact_relevant_count(self):
        qrels = make_qrels("t", 30, 60)
        for seed in range(20):
            result = seed_is(qrels, "t", SeedConfig(rng_seed=seed))
            assert sum(label for _, label, _ in result.judged) == 5

    def test_reproducible(self):
        qrels = make_qrels("t", 30, 60)
        a = seed_is(qrels, "t", SeedConfig(rng_seed=7))
        b = seed_is(qrels, "t", SeedConfig(rng_seed=7))
        assert a.judged == b.judged

    def test_labels_match_qrels(self):
        qrels = make_qrels("t", 8, 12)
        result = seed_is(qrels, "t", SeedConfig(rng_seed=3))
        for doc, label, _ in result.judged:
            assert qrels.label("t", doc) == label

    def test_unknown_topic(self):
        qrels = make_qrels("t", 5, 5)
        with pytest.raises(NotFoundError):
            seed_is(qrels, "missing", SeedConfig(rng_seed=0))

    def test_wrong_kind_rejected(self):
        qrels = make_qrels("t", 5, 5)
        with pytest.raises(ConfigError):
            seed_is(qrels, "t", SeedConfig(kind=SeedKind.RDS))


class TestSeedRDS:
    def run_over(self, docs):
        return SystemRun("base", {"t": [(d, float(len(docs) - i)) for i, d in enumerate(docs)]})

    def cfg(self, **kwargs):
        return SeedConfig(kind=SeedKind.RDS, **kwargs)

    def test_stops_after_one_of_each(self):
        qrels = Qrels()
        qrels.add("t", "d1", 0)
        qrels.add("t", "d2", 1)
        qrels.add("t", "d3", 1)
        run = self.run_over(["d1", "d2", "d3"])
        result = seed_rds(run, qrels, "t", self.cfg())
        assert not result.discarded
        assert result.cost == 2
        assert [d for d, _, _ in result.judged] == ["d1", "d2"]

    def test_walks_until_nonrelevant_found(self):
        qrels = Qrels()
        for i, label in enumerate([1, 1, 1, 0]):
            qrels.add("t", f"d{i}", label)
        run = self.run_over([f"d{i}" for i in range(4)])
        result = seed_rds(run, qrels, "t", self.cfg())
        assert result.cost == 4

    def test_max_effort_discards(self):
        qrels = Qrels()
        for i in range(150):
            qrels.add("t", f"d{i:03d}", 1)
        run = self.run_over([f"d{i:03d}" for i in range(150)])
        result = seed_rds(run, qrels, "t", self.cfg())
        assert result.discarded
        assert result.cost == 100

    def test_non_pool_docs_skipped_at_zero_cost(self):
        qrels = Qrels()
        qrels.add("t", "d5", 1)
        qrels.add("t", "d6", 0)
        run = self.run_over(["x1", "x2", "d5", "x3", "d6"])
        result = seed_rds(run, qrels, "t", self.cfg())
        assert result.cost == 2
        assert [d for d, _, _ in result.judged] == ["d5", "d6"]

    def test_ranking_exhausted_discards(self):
        qrels = Qrels()
        qrels.add("t", "d1", 1)
        qrels.add("t", "d2", 1)
        run = self.run_over(["d1", "d2"])
        assert seed_rds(run, qrels, "t", self.cfg()).discarded

    def test_configurable_minimums(self):
        qrels = Qrels()
        for i, label in enumerate([1, 0, 1, 0, 1]):
            qrels.add("t", f"d{i}", label)
        run = self.run_over([f"d{i}" for i in range(5)])
        result = seed_rds(run, qrels, "t", self.cfg(rds_min_rel=2, rds_min_nonrel=2))
        assert result.cost == 4

    def test_missing_ranking(self):
        qrels = make_qrels("t", 2, 2)
        run = SystemRun("base", {"other": [("d", 1.0)]})
        with pytest.raises(NotFoundError):
            seed_rds(run, qrels, "t", self.cfg())
