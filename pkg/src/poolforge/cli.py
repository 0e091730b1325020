"""Command-line entry point.

One JSON config file drives every command; ``--set key.path=value``
overrides individual entries and the POOLFORGE_SEED environment variable
overrides the master seed. Precedence: CLI > file > defaults. All output
files are written atomically and are byte-stable for fixed inputs.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from . import figures, reports
from .corpus import (
    STEMMERS,
    VectorStore,
    default_stopwords,
    load_corpus,
    load_qrels,
    load_run,
    load_stopwords,
    write_corpus,
    write_qrels,
    write_run,
)
from .errors import ConfigError, PoolforgeError
from .evaluation import TauMode, beta_sweep, hybrid_qrels_at, human_qrels_at, tau_curve
from .model import TrainConfig
from .selection import SeedConfig, SeedKind, Strategy
from .simulate import SimulationConfig, run_collection
from .synth import SynthSpec, generate_collection

DEFAULT_CONFIG = {
    "seed": 0,
    "corpus": {
        "docs": "corpus.jsonl",
        "stopwords": None,
        "stemmer": "s",
        "max_features": 15000,
    },
    "paths": {"qrels": "qrels.txt", "runs": [], "vectors": "vectors"},
    "simulation": {
        "strategies": ["SPL", "SAL", "CAL"],
        "topics": None,
        "batch_fraction": 0.10,
        "cost_points": [round(0.1 * i, 1) for i in range(11)],
        "betas": [0.25, 0.5, 1.0, 3.0, 5.0],
        "budget": None,
        "prevalence_bins": 0,
        "seed_judgments": {
            "kind": "IS",
            "is_rel": 5,
            "is_nonrel": 5,
            "rds_min_rel": 1,
            "rds_min_nonrel": 1,
            "rds_max_effort": 100,
        },
        "train": {
            "l2_lambda": 1.0,
            "learning_rate": 0.1,
            "max_iters": 500,
            "grad_tolerance": 1e-6,
            "oversample": True,
        },
    },
    "evaluate": {"modes": ["human_only_bpref", "hybrid_map"], "export_qrels_at": []},
    "sweep": {"betas": [0.25, 0.5, 1.0, 3.0, 5.0], "mode": "hybrid_map"},
    "synth": {
        "topics": 50,
        "pool_size": 200,
        "prevalence": [0.054],
        "signal_terms_per_topic": 16,
        "signal_terms_per_doc": 2,
        "background_terms": 60,
        "doc_length": 30,
        "signal_strength": 0.25,
        "background_signal": 0.02,
        "systems": 6,
        "quality_range": [0.65, 0.95],
    },
    "serve": {
        "host": "127.0.0.1",
        "port": 8008,
        "state_dir": None,
        "baseline_run": "",
        "topics": None,
        "budget": 100,
        "strategy": "CAL",
        "static_dir": None,
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise ConfigError(f"--set expects key.path=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _apply_override(cfg: dict, path: list[str], value) -> None:
    node = cfg
    for part in path[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override through non-object key {part!r}")
    node[path[-1]] = value


def config_schema() -> dict:
    text = resources.files("poolforge").joinpath("config_schema.json").read_text("utf-8")
    return json.loads(text)


def load_config(path: str | None, overrides: list[str], base_dir: Path | None = None) -> dict:
    """Merge defaults, the config file, --set overrides, and the env seed."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    cfg["_base_dir"] = str(base_dir or Path.cwd())
    if path is not None:
        cfg_path = Path(path)
        with open(cfg_path, "r", encoding="utf-8") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        cfg = _deep_merge(cfg, file_cfg)
        cfg["_base_dir"] = str(cfg_path.resolve().parent)
    for item in overrides:
        key_path, value = _parse_override(item)
        _apply_override(cfg, key_path, value)
    env_seed = os.environ.get("POOLFORGE_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"POOLFORGE_SEED must be an integer, got {env_seed!r}") from None
    base = cfg.pop("_base_dir")
    try:
        jsonschema.validate(cfg, config_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config validation failed at {'/'.join(map(str, exc.path))}: {exc.message}") from None
    cfg["_base_dir"] = base
    return cfg


def _resolve(cfg: dict, path_str: str) -> Path:
    p = Path(path_str)
    return p if p.is_absolute() else Path(cfg["_base_dir"]) / p


def build_sim_config(cfg: dict, strategy: str) -> SimulationConfig:
    sim = cfg["simulation"]
    seed_j = sim["seed_judgments"]
    return SimulationConfig(
        strategy=Strategy(strategy),
        seed_cfg=SeedConfig(
            kind=SeedKind(seed_j["kind"]),
            is_rel=seed_j["is_rel"],
            is_nonrel=seed_j["is_nonrel"],
            rds_min_rel=seed_j["rds_min_rel"],
            rds_min_nonrel=seed_j["rds_min_nonrel"],
            rds_max_effort=seed_j["rds_max_effort"],
        ),
        train_cfg=TrainConfig(**sim["train"]),
        batch_fraction=sim["batch_fraction"],
        cost_points=tuple(sim["cost_points"]),
        betas=tuple(sim["betas"]),
        budget=sim["budget"],
        rng_seed=cfg["seed"],
    )


def _stopwords_for(cfg: dict):
    sw_path = cfg["corpus"]["stopwords"]
    return default_stopwords() if sw_path is None else load_stopwords(_resolve(cfg, sw_path))


def _load_sim_inputs(cfg: dict):
    qrels = load_qrels(_resolve(cfg, cfg["paths"]["qrels"]))
    store = VectorStore.load(_resolve(cfg, cfg["paths"]["vectors"]))
    runs = [load_run(_resolve(cfg, p)) for p in cfg["paths"]["runs"]]
    topics = cfg["simulation"]["topics"] or qrels.topics()
    return qrels, store, runs, topics


def _run_simulations(cfg: dict, threads: int):
    qrels, store, runs, topics = _load_sim_inputs(cfg)
    results = []
    for strategy in cfg["simulation"]["strategies"]:
        sim_cfg = build_sim_config(cfg, strategy)
        results.append(run_collection(topics, qrels, store, sim_cfg, runs, threads))
    return qrels, store, runs, results


def cmd_vectorize(cfg: dict, out_dir: Path, args) -> int:
    docs = load_corpus(_resolve(cfg, cfg["corpus"]["docs"]))
    stemmer = STEMMERS[cfg["corpus"]["stemmer"]]
    store = VectorStore.from_documents(
        docs, cfg["corpus"]["max_features"], _stopwords_for(cfg), stemmer
    )
    store.save(out_dir)
    stats = {
        "documents": len(docs),
        "vocabulary": len(store.vocab),
        "max_features": cfg["corpus"]["max_features"],
        "nonzeros": int(store.matrix.nnz),
        "empty_vectors": int(sum(1 for i in range(store.matrix.shape[0]) if store.matrix.indptr[i] == store.matrix.indptr[i + 1])),
    }
    reports.atomic_write_text(out_dir / "stats.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
    print(f"vectorized {stats['documents']} docs into {stats['vocabulary']}-term space -> {out_dir}")
    return 0


def cmd_synth(cfg: dict, out_dir: Path, args) -> int:
    s = cfg["synth"]
    spec = SynthSpec(
        topics=s["topics"],
        pool_size=s["pool_size"],
        prevalence=tuple(s["prevalence"]),
        signal_terms_per_topic=s["signal_terms_per_topic"],
        signal_terms_per_doc=s["signal_terms_per_doc"],
        background_terms=s["background_terms"],
        doc_length=s["doc_length"],
        signal_strength=s["signal_strength"],
        background_signal=s["background_signal"],
        systems=s["systems"],
        quality_range=tuple(s["quality_range"]),
        rng_seed=cfg["seed"],
    )
    coll = generate_collection(spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_corpus(coll.docs, out_dir / "corpus.jsonl")
    write_qrels(coll.qrels, out_dir / "qrels.txt")
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(exist_ok=True)
    for run in coll.runs:
        write_run(run, runs_dir / f"{run.system_id}.txt")
    reports.atomic_write_text(
        out_dir / "meta.json", json.dumps(coll.meta, indent=2, sort_keys=True) + "\n"
    )
    print(
        f"synthesized {len(coll.topic_ids)} topics x {spec.pool_size} docs, "
        f"{len(coll.runs)} systems -> {out_dir}"
    )
    return 0


def cmd_simulate(cfg: dict, out_dir: Path, args) -> int:
    _, _, _, results = _run_simulations(cfg, args.threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports.atomic_write_text(out_dir / "results.csv", reports.results_csv(results))
    reports.atomic_write_text(out_dir / "auc.csv", reports.auc_csv(results))
    n_bins = cfg["simulation"]["prevalence_bins"]
    if n_bins > 0:
        binned = [(res, bin_by_prevalence(res, n_bins)) for res in results]
        reports.atomic_write_text(
            out_dir / "results_by_prevalence.csv", reports.prevalence_bins_csv(binned)
        )
    if not args.no_figures:
        figures.plot_learning_curves(results, 1.0, out_dir / "learning_curves.png")
    for res in results:
        dropped = res.discarded_topics()
        note = f" ({len(dropped)} discarded)" if dropped else ""
        print(f"{res.strategy.value}: F1 AUC {res.auc(1.0):.4f}{note}")
    print(f"wrote {out_dir / 'results.csv'} and {out_dir / 'auc.csv'}")
    return 0


def cmd_evaluate(cfg: dict, out_dir: Path, args) -> int:
    qrels, _, runs, results = _run_simulations(cfg, args.threads)
    if len(runs) < 2:
        raise ConfigError("evaluate needs at least 2 runs in paths.runs")
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = []
    for res in results:
        for mode in cfg["evaluate"]["modes"]:
            curves.append(tau_curve(res, runs, qrels, TauMode(mode)))
    reports.atomic_write_text(out_dir / "tau_curves.csv", reports.tau_csv(curves))
    if not args.no_figures:
        figures.plot_tau_curves(curves, out_dir / "tau_curves.png")
    for cp in cfg["evaluate"]["export_qrels_at"]:
        for res in results:
            if cp not in res.cost_points:
                raise ConfigError(f"export point {cp} is not a simulation cost point")
            idx = list(res.cost_points).index(cp)
            strat = res.strategy.value
            write_qrels(
                human_qrels_at(res, idx),
                out_dir / f"qrels_{strat}_human_cp{cp:g}.txt",
                with_source=True,
            )
            write_qrels(
                hybrid_qrels_at(res, idx),
                out_dir / f"qrels_{strat}_hybrid_cp{cp:g}.txt",
                with_source=True,
            )
    for curve in curves:
        print(f"{curve.strategy} {curve.mode.value}: tau AUC {curve.auc:.4f}")
    print(f"wrote {out_dir / 'tau_curves.csv'}")
    return 0


def cmd_sweep(cfg: dict, out_dir: Path, args) -> int:
    qrels, _, runs, results = _run_simulations(cfg, args.threads)
    if len(runs) < 2:
        raise ConfigError("sweep needs at least 2 runs in paths.runs")
    out_dir.mkdir(parents=True, exist_ok=True)
    mode = TauMode(cfg["sweep"]["mode"])
    betas = cfg["sweep"]["betas"]
    sweeps = {}
    last = None
    for res in results:
        curve = tau_curve(res, runs, qrels, mode)
        last = beta_sweep(res, curve, betas)
        sweeps[f"{mode.value}/{res.strategy.value}"] = last
    reports.atomic_write_text(out_dir / "beta_sweep.csv", reports.sweep_csv(sweeps))
    if not args.no_figures and last is not None:
        figures.plot_beta_sweep(last, out_dir / "beta_sweep.png")
    print(f"wrote {out_dir / 'beta_sweep.csv'}")
    return 0


def build_service_context(cfg: dict):
    from .service import ServiceContext

    serve = cfg["serve"]
    store = VectorStore.load(_resolve(cfg, cfg["paths"]["vectors"]))
    docs = load_corpus(_resolve(cfg, cfg["corpus"]["docs"]))
    texts = {d.doc_id: d.text for d in docs}
    if not serve["baseline_run"]:
        raise ConfigError("serve.baseline_run is required")
    run = load_run(_resolve(cfg, serve["baseline_run"]))
    topics = serve["topics"] or run.topics()
    rankings = {t: run.ranked_docs(t) for t in topics}
    sim = cfg["simulation"]
    seed_j = sim["seed_judgments"]
    live_cfg = SimulationConfig(
        strategy=Strategy(serve["strategy"]),
        seed_cfg=SeedConfig(
            kind=SeedKind.RDS,
            rds_min_rel=seed_j["rds_min_rel"],
            rds_min_nonrel=seed_j["rds_min_nonrel"],
            rds_max_effort=seed_j["rds_max_effort"],
        ),
        train_cfg=TrainConfig(**sim["train"]),
        batch_fraction=sim["batch_fraction"],
        budget=serve["budget"],
        rng_seed=cfg["seed"],
    )
    state_dir = serve["state_dir"]
    return ServiceContext(
        vectors=store,
        texts=texts,
        rankings=rankings,
        cfg=live_cfg,
        state_dir=_resolve(cfg, state_dir) if state_dir else None,
    )


def cmd_serve(cfg: dict, out_dir: Path, args) -> int:
    import uvicorn

    from .service import create_app, mount_static

    serve = cfg["serve"]
    ctx = build_service_context(cfg)
    app = create_app(ctx)
    if serve["static_dir"]:
        mount_static(app, _resolve(cfg, serve["static_dir"]))
    print(f"serving {len(ctx.topics())} topics on {serve['host']}:{serve['port']}")
    uvicorn.run(app, host=serve["host"], port=serve["port"], log_level="warning")
    return 0


COMMANDS = {
    "vectorize": cmd_vectorize,
    "synth": cmd_synth,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poolforge",
        description="Build and evaluate IR test collections with per-topic active learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("vectorize", "build vocabulary and TF-IDF vectors from a JSONL corpus"),
        ("synth", "generate a synthetic corpus, qrels, and system runs"),
        ("simulate", "run judging simulations and write F-measure curves"),
        ("evaluate", "score leaderboards and write rank-correlation curves"),
        ("sweep", "correlate F-beta curves with tau curves over a beta grid"),
        ("serve", "run the live judging HTTP service"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry (repeatable), e.g. simulation.budget=500",
        )
        p.add_argument("--threads", type=int, default=1, help="topic-level parallelism")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg, Path(args.out), args)
    except PoolforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
