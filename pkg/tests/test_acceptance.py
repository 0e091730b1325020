"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Tolerances are pinned in the assertions.

Ordered cheap-to-expensive; the directional-reproduction test at the end
runs 50-topic simulations over five seeds and dominates the runtime (its
own budget: five minutes single-threaded).
"""

import itertools
import json
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from poolforge.cli import main
from poolforge.corpus import VectorStore
from poolforge.errors import UndefinedMetricError
from poolforge.evaluation import TauCurve, TauMode, beta_sweep, tau_curve
from poolforge.metrics import (
    ConfusionCounts,
    Leaderboard,
    auc_trapezoid,
    average_precision,
    bpref,
    f_beta,
    kendall_tau,
    pearson,
)
from poolforge.model import TrainConfig, loss_and_grad
from poolforge.selection import SeedConfig, SeedKind, Strategy, uncertainty
from poolforge.simulate import SimulationConfig, run_collection, run_live_topic
from poolforge.synth import SynthSpec, generate_collection

from test_metrics import ap_oracle, auc_oracle, bpref_oracle, tau_oracle
from test_service import TOPIC as SERVICE_TOPIC
from test_service import drive_to_exhaustion, make_context


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    assert ok, line


ACCEPT_TRAIN = TrainConfig(learning_rate=1.0, max_iters=100, grad_tolerance=1e-5)


def accept_cfg(strategy, rng_seed, oversample=True, betas=(0.25, 0.5, 1.0, 3.0, 5.0)):
    return SimulationConfig(
        strategy=strategy,
        seed_cfg=SeedConfig(kind=SeedKind.IS),
        train_cfg=TrainConfig(
            learning_rate=ACCEPT_TRAIN.learning_rate,
            max_iters=ACCEPT_TRAIN.max_iters,
            grad_tolerance=ACCEPT_TRAIN.grad_tolerance,
            oversample=oversample,
        ),
        betas=betas,
        rng_seed=rng_seed,
    )


class TestCriterionMetricOracles:
    """Every metric matches a direct-definition implementation on
    exhaustively enumerated instances, to 1e-9, in under a minute."""

    def test_metric_oracle_suite(self):
        start = time.time()
        tol = 1e-9
        checked = 0

        # rankings over <= 6 docs: every judged/unjudged/label combination,
        # plus unretrieved relevant / non-relevant docs in the qrels
        for n in range(0, 7):
            for labels in itertools.product((1, 0, None), repeat=n):
                ranking = [f"d{i}" for i in range(n)]
                base = {f"d{i}": l for i, l in enumerate(labels) if l is not None}
                for extra_rel in range(3):
                    for extra_nonrel in range(3):
                        judgments = dict(base)
                        judgments.update({f"r{k}": 1 for k in range(extra_rel)})
                        judgments.update({f"n{k}": 0 for k in range(extra_nonrel)})
                        has_rel = any(v == 1 for v in judgments.values())
                        if has_rel and ranking:
                            assert abs(
                                average_precision(ranking, judgments)
                                - ap_oracle(ranking, judgments)
                            ) < tol
                            checked += 1
                        if has_rel:
                            assert abs(
                                bpref(ranking, judgments) - bpref_oracle(ranking, judgments)
                            ) < tol
                            checked += 1

        # leaderboards of <= 5 systems: exhaustive tie-rich alphabets up to
        # 4 systems, all distinct-score permutation pairs at 5
        for n in range(2, 5):
            names = [f"s{i}" for i in range(n)]
            for va in itertools.product((0.0, 1.0, 2.0), repeat=n):
                for vb in itertools.product((0.0, 1.0, 2.0), repeat=n):
                    sa = dict(zip(names, va))
                    sb = dict(zip(names, vb))
                    la, lb = Leaderboard.from_scores(sa), Leaderboard.from_scores(sb)
                    if len(set(va)) == 1 or len(set(vb)) == 1:
                        with pytest.raises(UndefinedMetricError):
                            kendall_tau(la, lb)
                        continue
                    assert abs(kendall_tau(la, lb) - tau_oracle(sa, sb)) < tol
                    checked += 1
        names = [f"s{i}" for i in range(5)]
        for pa in itertools.permutations(range(5)):
            for pb in itertools.permutations(range(5)):
                sa = dict(zip(names, (float(x) for x in pa)))
                sb = dict(zip(names, (float(x) for x in pb)))
                got = kendall_tau(Leaderboard.from_scores(sa), Leaderboard.from_scores(sb))
                assert abs(got - tau_oracle(sa, sb)) < tol
                checked += 1

        # pearson over small exhaustive series
        for n in (3, 4):
            for xs in itertools.product((0.0, 1.0, 2.0), repeat=n):
                for ys in itertools.product((0.0, 1.0, 2.0), repeat=n):
                    if len(set(xs)) == 1 or len(set(ys)) == 1:
                        continue
                    expected = float(np.corrcoef(xs, ys)[0, 1])
                    assert abs(pearson(list(xs), list(ys)) - expected) < tol
                    checked += 1

        # f-beta over all confusion counts <= 6 against the plain formula
        for tp, fp, fn, tn in itertools.product(range(7), repeat=4):
            counts = ConfusionCounts(tp, fp, fn, tn)
            for beta in (0.25, 0.5, 1.0, 3.0, 5.0):
                if tp == 0 and fp == 0 and fn == 0:
                    expected = 1.0
                else:
                    precision = tp / (tp + fp) if tp + fp else 0.0
                    recall = tp / (tp + fn) if tp + fn else 0.0
                    denom = beta * beta * precision + recall
                    expected = (1 + beta * beta) * precision * recall / denom if denom else 0.0
                assert abs(f_beta(counts, beta) - expected) < tol
                checked += 1

        # trapezoid AUC over exhaustive small grids
        for n in (2, 3, 4):
            for xs in itertools.combinations((0.0, 1.0, 2.0, 3.0, 4.0, 5.0), n):
                for ys in itertools.product((0.0, 1.0, 2.0), repeat=n):
                    assert abs(
                        auc_trapezoid(list(xs), list(ys)) - auc_oracle(list(xs), list(ys))
                    ) < tol
                    checked += 1

        elapsed = time.time() - start
        report(
            "metric oracle suite",
            elapsed < 60.0,
            f"{checked} instances vs brute force, {elapsed:.1f}s",
        )


class TestCriterionHandChecked:
    def test_hand_checked_vectors(self):
        judgments = {"a": 1, "b": 0, "c": 1}
        checks = [
            abs(bpref(["a", "b", "c"], judgments) - 0.5) < 1e-12,
            abs(average_precision(["a", "b", "c"], judgments) - 5 / 6) < 1e-12,
            abs(
                kendall_tau(
                    Leaderboard.from_scores({"s1": 3.0, "s2": 2.0, "s3": 1.0}),
                    Leaderboard.from_scores({"s1": 3.0, "s2": 1.0, "s3": 2.0}),
                )
                - 1 / 3
            ) < 1e-12,
            abs(uncertainty(0.5) - math.log(2)) < 1e-12,
        ]
        report("hand-checked metric values", all(checks), "bpref, AP, tau, entropy")


class TestCriterionGradient:
    def test_gradient_matches_finite_differences(self):
        from scipy import sparse

        rng = np.random.default_rng(1234)
        h = 1e-5
        worst = 0.0
        for _ in range(20):
            n, d = 10, 20
            X = sparse.random(
                n, d, density=0.5, random_state=np.random.RandomState(rng.integers(1 << 30))
            ).tocsr()
            y = rng.integers(0, 2, size=n).astype(np.float64)
            w = rng.normal(size=d)
            b = float(rng.normal())
            lam = float(rng.uniform(0.0, 2.0))
            _, grad_w, grad_b = loss_and_grad(w, b, X, y, lam)
            num_w = np.zeros(d)
            for k in range(d):
                wp, wm = w.copy(), w.copy()
                wp[k] += h
                wm[k] -= h
                num_w[k] = (
                    loss_and_grad(wp, b, X, y, lam)[0] - loss_and_grad(wm, b, X, y, lam)[0]
                ) / (2 * h)
            num_b = (
                loss_and_grad(w, b + h, X, y, lam)[0] - loss_and_grad(w, b - h, X, y, lam)[0]
            ) / (2 * h)
            analytic = np.append(grad_w, grad_b)
            numeric = np.append(num_w, num_b)
            rel = float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12))
            worst = max(worst, rel)
        report("analytic gradient vs central differences", worst < 1e-4, f"max rel err {worst:.2e}")


class TestCriterionConvergence:
    def test_every_strategy_converges_at_full_judging(self):
        bad = []
        for prevalence in (0.054, 0.184, 0.287, 0.392):
            spec = SynthSpec(
                topics=12, pool_size=200, prevalence=(prevalence,), rng_seed=400
            )
            coll = generate_collection(spec)
            store = VectorStore.from_documents(coll.docs, max_features=15000)
            for strategy in Strategy:
                cfg = accept_cfg(strategy, rng_seed=500)
                res = run_collection(coll.topic_ids, coll.qrels, store, cfg)
                for topic in res.active_topics():
                    final = topic.snapshots[-1]
                    for beta, score in final.f_beta_scores.items():
                        if score != 1.0:
                            bad.append(f"{prevalence}/{strategy.value}/{topic.topic_id} F{beta}")
                for mode in TauMode:
                    curve = tau_curve(res, coll.runs, coll.qrels, mode)
                    if abs(curve.points[-1][1] - 1.0) > 1e-12:
                        bad.append(f"{prevalence}/{strategy.value}/{mode.value} tau")
        report(
            "convergence at 100% human judging",
            not bad,
            bad[0] if bad else "F=1 and tau=1 for 4 profiles x 3 strategies",
        )


class TestCriterionBetaSweep:
    def test_sweep_machinery(self):
        spec = SynthSpec(
            topics=10,
            pool_size=150,
            prevalence=(0.15,),
            systems=8,
            quality_range=(0.68, 0.78),
            rng_seed=31,
        )
        coll = generate_collection(spec)
        store = VectorStore.from_documents(coll.docs, max_features=15000)
        res = run_collection(coll.topic_ids, coll.qrels, store, accept_cfg(Strategy.CAL, 9))
        curve = tau_curve(res, coll.runs, coll.qrels, TauMode.HYBRID_MAP)
        grid = [0.25, 0.5, 1.0, 3.0, 5.0]
        sweep = beta_sweep(res, curve, grid)
        finite = all(sweep[b] is not None and np.isfinite(sweep[b]) for b in grid)

        # constructed instance: tau an affine image of the F1 curve
        f1 = res.avg_curve(1.0)
        affine = TauCurve(
            TauMode.HYBRID_MAP,
            "CAL",
            [(cp, 0.4 * f + 0.2) for cp, f in zip(res.cost_points, f1)],
            0.0,
        )
        exact = beta_sweep(res, affine, [1.0])[1.0]
        ok = finite and exact is not None and abs(exact - 1.0) <= 1e-9
        report(
            "beta sweep machinery",
            ok,
            f"finite over grid {grid}; affine pearson(beta=1) = {exact:.12f}",
        )


class TestCriterionDeterminism:
    def test_cmd_simulate_byte_identical(self, tmp_path):
        cfg = {
            "seed": 17,
            "synth": {"topics": 4, "pool_size": 40, "prevalence": [0.2], "systems": 3},
            "corpus": {"docs": str(tmp_path / "data" / "corpus.jsonl"), "max_features": 2000},
            "paths": {
                "qrels": str(tmp_path / "data" / "qrels.txt"),
                "runs": [],
                "vectors": str(tmp_path / "vectors"),
            },
            "simulation": {
                "strategies": ["CAL", "SPL"],
                "seed_judgments": {"kind": "IS", "is_rel": 2, "is_nonrel": 2},
                "train": {"learning_rate": 1.0, "max_iters": 60, "grad_tolerance": 1e-4},
            },
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["synth", "--config", str(cfg_path), "--out", str(tmp_path / "data")]) == 0
        assert main(["vectorize", "--config", str(cfg_path), "--out", str(tmp_path / "vectors")]) == 0
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main(
                ["simulate", "--config", str(cfg_path), "--out", str(out), "--no-figures"]
            )
            assert code == 0
            outs.append(out)
        same = all(
            (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
            for f in ("results.csv", "auc.csv")
        )
        report("simulate determinism", same, "results.csv and auc.csv byte-identical")


class TestCriterionSessionReplay:
    def test_scripted_session_replays_through_simulator(self, tmp_path):
        ctx, coll = make_context(tmp_path / "state", budget=30)
        oracle = coll.qrels.labels(SERVICE_TOPIC)
        client = TestClient(__import__("poolforge.service", fromlist=["create_app"]).create_app(ctx))
        sid = client.post("/v1/sessions", json={"topic_id": SERVICE_TOPIC}).json()["session_id"]
        state = drive_to_exhaustion(client, sid, oracle)
        service_export = client.get(
            f"/v1/sessions/{sid}/qrels", params={"mode": "hybrid"}
        ).text

        logged = {j["doc_id"]: j["label"] for j in state["judged"]}
        live = run_live_topic(
            SERVICE_TOPIC,
            list(ctx.vectors.doc_ids),
            ctx.vectors,
            ctx.rankings[SERVICE_TOPIC],
            lambda d: logged[d],
            ctx.cfg,
        )
        same_batches = [[d for d, _ in b] for b in live.batches] == state["batches"]
        human = dict(live.human)
        lines = [
            f"{SERVICE_TOPIC} 0 {doc} {live.hybrid[doc]} {'human' if doc in human else 'machine'}"
            for doc in sorted(live.hybrid)
        ]
        same_export = "\n".join(lines) + "\n" == service_export
        report(
            "session replay parity",
            same_batches and same_export,
            f"{len(state['batches'])} batches, {len(lines)} hybrid labels",
        )


class TestCriterionDirectional:
    """Directional reproduction on synthetic collections: 50 topics x
    200-doc pools, low-prevalence profiles from the collection-statistics
    table, 5 seeds. Clock budget: 5 minutes single-threaded."""

    def test_directional_reproduction(self):
        start = time.time()
        a54, a184, b_deltas, c_deltas = [], [], [], []
        for seed in range(5):
            aucs = {}
            for prevalence in (0.054, 0.184):
                spec = SynthSpec(
                    topics=50, pool_size=200, prevalence=(prevalence,), rng_seed=1000 + seed
                )
                coll = generate_collection(spec)
                store = VectorStore.from_documents(coll.docs, max_features=15000)
                for strategy in (Strategy.SPL, Strategy.SAL, Strategy.CAL):
                    variants = (True, False) if prevalence == 0.054 else (True,)
                    for oversample in variants:
                        cfg = accept_cfg(
                            strategy, rng_seed=2000 + seed, oversample=oversample, betas=(1.0,)
                        )
                        res = run_collection(coll.topic_ids, coll.qrels, store, cfg)
                        aucs[(prevalence, strategy, oversample)] = res.auc(1.0)
            a54.append(aucs[(0.054, Strategy.CAL, True)] - aucs[(0.054, Strategy.SPL, True)])
            a184.append(aucs[(0.184, Strategy.CAL, True)] - aucs[(0.184, Strategy.SPL, True)])
            strategies = (Strategy.SPL, Strategy.SAL, Strategy.CAL)
            b_deltas.append(
                float(np.mean([aucs[(0.054, s, True)] for s in strategies]))
                - float(np.mean([aucs[(0.054, s, False)] for s in strategies]))
            )
            c_deltas.append(
                float(
                    np.mean(
                        [
                            aucs[(p, Strategy.CAL, True)] - aucs[(p, Strategy.SAL, True)]
                            for p in (0.054, 0.184)
                        ]
                    )
                )
            )
        elapsed = time.time() - start

        a_ok = np.mean(a54) > 0.02 and np.mean(a184) > 0.02
        b_wins = sum(1 for d in b_deltas if d >= 0.0)
        b_ok = b_wins >= 4
        c_ok = float(np.mean(c_deltas)) >= 0.0
        time_ok = elapsed < 300.0
        report(
            "directional reproduction",
            a_ok and b_ok and c_ok and time_ok,
            f"CAL-SPL mean {np.mean(a54):+.3f}@5.4% {np.mean(a184):+.3f}@18.4%; "
            f"oversampling wins {b_wins}/5 seeds; CAL-SAL mean {np.mean(c_deltas):+.4f}; "
            f"{elapsed:.0f}s",
        )
