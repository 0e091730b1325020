import json
import os

import pytest

from poolforge.cli import DEFAULT_CONFIG, load_config, main
from poolforge.errors import ConfigError


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """Small end-to-end workspace: synth -> vectorize."""
    root = tmp_path_factory.mktemp("ws")
    cfg = {
        "seed": 5,
        "synth": {
            "topics": 5,
            "pool_size": 40,
            "prevalence": [0.2],
            "systems": 4,
            "quality_range": [0.7, 0.98],
        },
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    data = root / "data"
    assert main(["synth", "--config", str(cfg_path), "--out", str(data)]) == 0
    full = {
        "seed": 5,
        "corpus": {"docs": str(data / "corpus.jsonl"), "max_features": 2000},
        "paths": {
            "qrels": str(data / "qrels.txt"),
            "runs": sorted(str(p) for p in (data / "runs").glob("*.txt")),
            "vectors": str(root / "vectors"),
        },
        "simulation": {
            "strategies": ["CAL", "SPL"],
            "seed_judgments": {"kind": "IS", "is_rel": 2, "is_nonrel": 2},
            "train": {"learning_rate": 1.0, "max_iters": 60, "grad_tolerance": 1e-4, "oversample": True},
        },
    }
    full_path = root / "full.json"
    full_path.write_text(json.dumps(full))
    assert main(["vectorize", "--config", str(full_path), "--out", str(root / "vectors")]) == 0
    return root, full_path


class TestConfig:
    def test_defaults_fill_missing_sections(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"seed": 3}')
        cfg = load_config(str(path), [])
        assert cfg["seed"] == 3
        assert cfg["simulation"]["batch_fraction"] == DEFAULT_CONFIG["simulation"]["batch_fraction"]

    def test_set_overrides_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"simulation": {"batch_fraction": 0.2}}')
        cfg = load_config(str(path), ["simulation.batch_fraction=0.5", "seed=9"])
        assert cfg["simulation"]["batch_fraction"] == 0.5
        assert cfg["seed"] == 9

    def test_env_seed_wins(self, tmp_path, monkeypatch):
        path = tmp_path / "c.json"
        path.write_text('{"seed": 3}')
        monkeypatch.setenv("POOLFORGE_SEED", "77")
        assert load_config(str(path), ["seed=9"])["seed"] == 77

    def test_unknown_strategy_fails_schema(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"simulation": {"strategies": ["XAL"]}}')
        with pytest.raises(ConfigError):
            load_config(str(path), [])

    def test_unknown_key_fails_schema(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"simulations": {}}')
        with pytest.raises(ConfigError):
            load_config(str(path), [])

    def test_cli_reports_bad_config_as_nonzero(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text('{"simulation": {"strategies": ["XAL"]}}')
        assert main(["simulate", "--config", str(path)]) == 1
        assert "error:" in capsys.readouterr().err


class TestVectorize:
    def test_outputs_exist(self, synth_dir):
        root, _ = synth_dir
        for name in ("vocabulary.json", "vectors.jsonl", "stats.json"):
            assert (root / "vectors" / name).exists()

    def test_default_max_features_is_15000(self):
        assert DEFAULT_CONFIG["corpus"]["max_features"] == 15000

    def test_vocabulary_no_larger_than_distinct_terms(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        corpus.write_text(
            '{"doc_id": "a", "text": "red fish"}\n{"doc_id": "b", "text": "blue fish"}\n'
        )
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"corpus": {"docs": str(corpus)}}))
        out = tmp_path / "v"
        assert main(["vectorize", "--config", str(cfg), "--out", str(out)]) == 0
        vocab = json.loads((out / "vocabulary.json").read_text())
        assert len(vocab["terms"]) <= 3

    def test_rerun_byte_identical(self, synth_dir, tmp_path):
        root, full_path = synth_dir
        out2 = tmp_path / "v2"
        assert main(["vectorize", "--config", str(full_path), "--out", str(out2)]) == 0
        for name in ("vocabulary.json", "vectors.jsonl", "stats.json"):
            assert (out2 / name).read_bytes() == (root / "vectors" / name).read_bytes()


class TestSimulateCommand:
    def test_writes_curves_for_all_strategies(self, synth_dir, tmp_path):
        _, full_path = synth_dir
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(full_path), "--out", str(out)]) == 0
        text = (out / "results.csv").read_text()
        for strategy in ("CAL", "SPL"):
            assert f"AVG,{strategy}" in text
        assert (out / "auc.csv").exists()
        assert (out / "learning_curves.png").exists()

    def test_no_figures_flag(self, synth_dir, tmp_path):
        _, full_path = synth_dir
        out = tmp_path / "sim_nofig"
        assert main(
            ["simulate", "--config", str(full_path), "--out", str(out), "--no-figures"]
        ) == 0
        assert not (out / "learning_curves.png").exists()

    def test_byte_identical_reruns(self, synth_dir, tmp_path):
        _, full_path = synth_dir
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["simulate", "--config", str(full_path), "--out", str(out1), "--no-figures"]) == 0
        assert main(["simulate", "--config", str(full_path), "--out", str(out2), "--no-figures"]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
        assert (out1 / "auc.csv").read_bytes() == (out2 / "auc.csv").read_bytes()

    def test_missing_vectors_is_error(self, synth_dir, tmp_path, capsys):
        _, full_path = synth_dir
        assert main(
            [
                "simulate",
                "--config",
                str(full_path),
                "--out",
                str(tmp_path / "x"),
                "--set",
                'paths.vectors="/nonexistent"',
            ]
        ) == 1
        assert "error:" in capsys.readouterr().err


class TestEvaluateAndSweep:
    def test_evaluate_writes_both_modes(self, synth_dir, tmp_path):
        _, full_path = synth_dir
        out = tmp_path / "eval"
        assert main(
            [
                "evaluate", "--config", str(full_path), "--out", str(out),
                "--set", "evaluate.export_qrels_at=[0.5]",
            ]
        ) == 0
        text = (out / "tau_curves.csv").read_text()
        assert "human_only_bpref" in text
        assert "hybrid_map" in text
        assert (out / "tau_curves.png").exists()
        assert (out / "qrels_CAL_hybrid_cp0.5.txt").exists()
        assert (out / "qrels_CAL_human_cp0.5.txt").exists()

    def test_exported_hybrid_qrels_cover_pool(self, synth_dir, tmp_path):
        from poolforge.corpus import load_qrels

        _, full_path = synth_dir
        out = tmp_path / "eval2"
        assert main(
            [
                "evaluate", "--config", str(full_path), "--out", str(out),
                "--set", "evaluate.export_qrels_at=[0.5]",
                "--set", 'simulation.strategies=["CAL"]',
            ]
        ) == 0
        hybrid = load_qrels(out / "qrels_CAL_hybrid_cp0.5.txt")
        root, _ = synth_dir
        oracle = load_qrels(root / "data" / "qrels.txt")
        for topic in oracle.topics():
            assert hybrid.pool(topic) == oracle.pool(topic)

    def test_sweep_writes_grid(self, synth_dir, tmp_path):
        _, full_path = synth_dir
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(full_path), "--out", str(out)]) == 0
        lines = (out / "beta_sweep.csv").read_text().splitlines()
        assert lines[0] == "mode,strategy,beta,pearson"
        betas = {line.split(",")[2] for line in lines[1:]}
        assert betas == {"0.25", "0.5", "1", "3", "5"}


class TestServeWiring:
    def test_service_context_from_config(self, synth_dir):
        from fastapi.testclient import TestClient

        from poolforge.cli import build_service_context, load_config
        from poolforge.service import create_app

        root, full_path = synth_dir
        run_path = sorted((root / "data" / "runs").glob("*.txt"))[0]
        cfg = load_config(
            str(full_path),
            [f'serve.baseline_run="{run_path}"', "serve.budget=12"],
        )
        ctx = build_service_context(cfg)
        client = TestClient(create_app(ctx))
        topics = client.get("/v1/topics").json()["topics"]
        assert len(topics) == 5  # one per synthetic topic in the run
        state = client.post("/v1/sessions", json={"topic_id": topics[0]["topic_id"]}).json()
        assert state["phase"] == "seeding"
        assert state["budget_remaining"] == 12

    def test_missing_baseline_run_rejected(self, synth_dir):
        from poolforge.cli import build_service_context, load_config

        _, full_path = synth_dir
        cfg = load_config(str(full_path), [])
        with pytest.raises(ConfigError):
            build_service_context(cfg)

    def test_static_mount_serves_ui(self, synth_dir, tmp_path):
        from fastapi.testclient import TestClient

        from poolforge.cli import build_service_context, load_config
        from poolforge.service import create_app, mount_static

        root, full_path = synth_dir
        run_path = sorted((root / "data" / "runs").glob("*.txt"))[0]
        static = tmp_path / "ui"
        static.mkdir()
        (static / "index.html").write_text("<html><body>assessor</body></html>")
        cfg = load_config(str(full_path), [f'serve.baseline_run="{run_path}"'])
        app = create_app(build_service_context(cfg))
        mount_static(app, static)
        client = TestClient(app)
        assert client.get("/v1/topics").status_code == 200
        page = client.get("/")
        assert page.status_code == 200
        assert "assessor" in page.text
