"""HTTP service for live judging sessions.

A session walks a baseline ranking to collect seed judgments from the
human assessor (who is the oracle here), then serves strategy-selected
batches, retraining after every submission. Budget is charged when a
document is served: every shown document costs one judgment.

State is held in memory with an append-only judgment log plus a JSON
snapshot per session; recovery replays the log through the same state
machine that produced it.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .corpus import HUMAN, VectorStore
from .errors import (
    ConfigError,
    ConflictError,
    NotFoundError,
    PoolforgeError,
    ValidationError,
)
from .model import classify
from .selection import RdsWalk, SeedKind, Strategy
from .simulate import (
    SimulationConfig,
    _PoolView,
    batch_size_for_pool,
    select_batch_for_round,
)

PHASE_SEEDING = "seeding"
PHASE_ACTIVE = "active"
PHASE_EXHAUSTED = "exhausted"
PHASE_DISCARDED = "discarded"

MODE_HUMAN_ONLY = "human_only"
MODE_HYBRID = "hybrid"


@dataclass
class ServiceContext:
    """Shared read-only resources behind all sessions."""

    vectors: VectorStore
    texts: dict[str, str]
    rankings: dict[str, list[str]]  # topic -> baseline ranking for seeding
    cfg: SimulationConfig
    state_dir: Path | None = None

    def __post_init__(self):
        if self.cfg.seed_cfg.kind != SeedKind.RDS:
            # live sessions have no pre-judged pool to sample seeds from
            raise ConfigError("live sessions seed by ranked walk (RDS) only")
        if self.state_dir is not None:
            self.state_dir = Path(self.state_dir)
            self.state_dir.mkdir(parents=True, exist_ok=True)

    def topics(self) -> list[str]:
        return sorted(self.rankings)


class Session:
    """One assessor's judging campaign on one topic.

    All mutation happens under the session lock; reads of a consistent
    snapshot go through :meth:`state`.
    """

    def __init__(self, ctx: ServiceContext, topic_id: str, budget: int | None = None):
        if topic_id not in ctx.rankings:
            raise NotFoundError(f"topic {topic_id!r} is not registered")
        self.ctx = ctx
        self.lock = threading.Lock()
        self.session_id = uuid.uuid4().hex[:12]
        self.topic_id = topic_id
        self.created_at = time.time()
        self.pool = sorted(ctx.vectors.doc_ids)
        self.view = _PoolView(ctx.vectors, self.pool)
        self.u = batch_size_for_pool(ctx.cfg.batch_fraction, len(self.pool))
        cfg_budget = ctx.cfg.budget if ctx.cfg.budget is not None else len(self.pool)
        self.budget_remaining = budget if budget is not None else cfg_budget
        self.initial_budget = self.budget_remaining
        seed_cfg = ctx.cfg.seed_cfg
        self.walk = RdsWalk(
            ctx.rankings[topic_id],
            set(self.pool),
            seed_cfg.rds_min_rel,
            seed_cfg.rds_min_nonrel,
            seed_cfg.rds_max_effort,
        )
        self.phase = PHASE_SEEDING
        self.labeled: list[tuple[str, int]] = []
        self.batches: list[list[str]] = [[]]  # [0] accumulates the seed walk
        self.pending: list[str] = []
        self.pending_labels: dict[str, int] = {}
        self.pending_charged = False
        self.al_batches = 0
        self.model = None
        self.judged_log: list[dict] = []
        head = self.walk.next_doc()
        if head is None:
            self.phase = PHASE_DISCARDED
        else:
            self.pending = [head]

    # -- internals ---------------------------------------------------------

    def _charge_pending(self) -> None:
        if self.pending and not self.pending_charged:
            self.budget_remaining -= len(self.pending)
            self.pending_charged = True

    def _unlabeled(self) -> set[str]:
        seen = {d for d, _ in self.labeled} | set(self.pending)
        return set(self.pool) - seen

    def _canonical_labeled(self) -> list[tuple[str, int]]:
        """Committed judgments plus the current batch's, in batch order."""
        extra = [(d, self.pending_labels[d]) for d in self.pending if d in self.pending_labels]
        return self.labeled + extra

    def _train(self, stage: int) -> None:
        data = self._canonical_labeled()
        labels = {l for _, l in data}
        if labels == {0, 1}:
            self.model = self.view.fit(
                data, self.ctx.cfg.train_cfg, self.ctx.cfg.rng_seed, self.topic_id, stage
            )

    def _maybe_exhaust(self) -> None:
        if self.phase == PHASE_ACTIVE and not self.pending:
            if self.budget_remaining <= 0 or not self._unlabeled():
                self.phase = PHASE_EXHAUSTED

    # -- operations --------------------------------------------------------

    def next_batch(self) -> list[dict]:
        with self.lock:
            if self.phase in (PHASE_EXHAUSTED, PHASE_DISCARDED):
                raise ConflictError(f"session is {self.phase}")
            remaining = [d for d in self.pending if d not in self.pending_labels]
            if remaining:
                self._charge_pending()
                return [{"doc_id": d, "text": self.ctx.texts.get(d, "")} for d in remaining]
            if self.phase == PHASE_SEEDING:
                # submit() pre-plans the next walk doc; an empty pending
                # here means the budget died mid-seed
                self.phase = PHASE_EXHAUSTED
                raise ConflictError("budget exhausted during seeding")
            u_round = min(self.u, self.budget_remaining, len(self._unlabeled()))
            if u_round <= 0:
                self.phase = PHASE_EXHAUSTED
                raise ConflictError("budget or pool exhausted")
            unlabeled = self._unlabeled()
            if self.ctx.cfg.strategy == Strategy.SPL:
                probs: dict[str, float] = {}
            else:
                all_probs = self.view.probs(self.model)
                probs = {d: float(all_probs[self.view.row[d]]) for d in unlabeled}
            batch = select_batch_for_round(
                self.ctx.cfg, self.topic_id, self.al_batches + 1, probs, unlabeled, u_round
            )
            self.pending = batch
            self.pending_charged = False
            self._charge_pending()
            return [{"doc_id": d, "text": self.ctx.texts.get(d, "")} for d in batch]

    def submit(self, judgments: list[tuple[str, int]]) -> None:
        with self.lock:
            if self.phase not in (PHASE_SEEDING, PHASE_ACTIVE):
                raise ConflictError(f"session is {self.phase}")
            if not judgments:
                raise ValidationError("empty judgment list")
            docs = [d for d, _ in judgments]
            if len(set(docs)) != len(docs):
                raise ValidationError("duplicate doc in submission")
            pending_set = set(self.pending)
            for doc, label in judgments:
                if label not in (0, 1):
                    raise ValidationError(f"label must be 0 or 1, got {label!r}")
                if doc not in pending_set:
                    raise ValidationError(f"doc {doc!r} is not pending judgment")
                if doc in self.pending_labels:
                    raise ValidationError(f"doc {doc!r} was already judged")
            self._charge_pending()
            now = time.time()
            batch_index = len(self.batches) - 1 if self.phase == PHASE_SEEDING else len(self.batches)
            for doc, label in judgments:
                self.pending_labels[doc] = int(label)
                self.judged_log.append(
                    {
                        "doc_id": doc,
                        "label": int(label),
                        "source": HUMAN,
                        "timestamp": now,
                        "batch": batch_index,
                    }
                )
            if self.phase == PHASE_SEEDING:
                self._advance_seeding()
            else:
                self._advance_active()
            self._persist()

    def _advance_seeding(self) -> None:
        doc = self.pending[0]
        label = self.pending_labels[doc]
        self.walk.record(doc, label)
        self.labeled.append((doc, label))
        self.batches[0].append(doc)
        self.pending = []
        self.pending_labels = {}
        self.pending_charged = False
        if self.walk.satisfied:
            self.phase = PHASE_ACTIVE
            self._train(stage=0)
            self._maybe_exhaust()
        elif self.walk.discarded:
            self.phase = PHASE_DISCARDED
        else:
            nxt = self.walk.next_doc()
            if nxt is None:
                self.phase = PHASE_DISCARDED
            else:
                self.pending = [nxt]

    def _advance_active(self) -> None:
        if len(self.pending_labels) == len(self.pending):
            self.labeled.extend((d, self.pending_labels[d]) for d in self.pending)
            self.batches.append(list(self.pending))
            self.pending = []
            self.pending_labels = {}
            self.pending_charged = False
            self.al_batches += 1
            self._train(stage=self.al_batches)
            self._maybe_exhaust()
        else:
            self._train(stage=self.al_batches + 1)

    def export_qrels(self, mode: str) -> str:
        with self.lock:
            if mode == MODE_HUMAN_ONLY:
                rows = self._canonical_labeled()
                if not rows:
                    raise ConflictError("no judgments to export")
                lines = [
                    f"{self.topic_id} 0 {doc} {label} {HUMAN}"
                    for doc, label in sorted(rows)
                ]
            elif mode == MODE_HYBRID:
                if self.model is None:
                    raise ConflictError("no trained model for hybrid export")
                human = dict(self._canonical_labeled())
                probs = self.view.probs(self.model)
                lines = []
                for doc in self.pool:
                    if doc in human:
                        lines.append(f"{self.topic_id} 0 {doc} {human[doc]} {HUMAN}")
                    else:
                        label = classify(float(probs[self.view.row[doc]]))
                        lines.append(f"{self.topic_id} 0 {doc} {label} machine")
            else:
                raise ValidationError(f"unknown export mode {mode!r}")
            return "\n".join(lines) + "\n"

    def state(self) -> dict:
        with self.lock:
            return self._state_locked()

    def _state_locked(self) -> dict:
        judged = self._canonical_labeled()
        rel = sum(1 for _, l in judged if l == 1)
        return {
            "session_id": self.session_id,
            "topic_id": self.topic_id,
            "phase": self.phase,
            "budget_remaining": self.budget_remaining,
            "initial_budget": self.initial_budget,
            "batch_size": self.u,
            "pool_size": len(self.pool),
            "strategy": self.ctx.cfg.strategy.value,
            "created_at": self.created_at,
            "judged": list(self.judged_log),
            "pending": [d for d in self.pending if d not in self.pending_labels],
            "pending_charged": self.pending_charged,
            "counts": {"relevant": rel, "nonrelevant": len(judged) - rel},
            "batches": [list(b) for b in self.batches if b],
            "has_model": self.model is not None,
        }

    # -- persistence -------------------------------------------------------

    def _log_path(self) -> Path | None:
        if self.ctx.state_dir is None:
            return None
        return self.ctx.state_dir / f"{self.session_id}.log"

    def log_create(self, client_token: str | None) -> None:
        path = self._log_path()
        if path is None:
            return
        header = {
            "type": "create",
            "session_id": self.session_id,
            "topic_id": self.topic_id,
            "client_token": client_token,
            "budget": self.initial_budget,
            "created_at": self.created_at,
        }
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")

    def _persist(self) -> None:
        path = self._log_path()
        if path is None:
            return
        n_logged = 0
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                n_logged = sum(1 for line in fh if '"judgment"' in line)
        with open(path, "a", encoding="utf-8") as fh:
            for rec in self.judged_log[n_logged:]:
                fh.write(json.dumps({"type": "judgment", **rec}) + "\n")
        snap = self.ctx.state_dir / f"{self.session_id}.json"
        with open(snap, "w", encoding="utf-8") as fh:
            json.dump(self._state_locked(), fh)
            fh.write("\n")


class SessionService:
    """Session registry with idempotent creation per (topic, client token)."""

    def __init__(self, ctx: ServiceContext):
        self.ctx = ctx
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._by_token: dict[tuple[str, str], str] = {}

    def create(
        self, topic_id: str, client_token: str | None = None, budget: int | None = None
    ) -> Session:
        with self._lock:
            if client_token is not None:
                sid = self._by_token.get((topic_id, client_token))
                if sid is not None:
                    return self._sessions[sid]
            session = Session(self.ctx, topic_id, budget)
            self._sessions[session.session_id] = session
            if client_token is not None:
                self._by_token[(topic_id, client_token)] = session.session_id
            session.log_create(client_token)
            return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise NotFoundError(f"no session {session_id!r}") from None

    def recover(self) -> int:
        """Rebuild sessions by replaying judgment logs from the state dir."""
        if self.ctx.state_dir is None:
            return 0
        count = 0
        for log_path in sorted(self.ctx.state_dir.glob("*.log")):
            with open(log_path, "r", encoding="utf-8") as fh:
                lines = [json.loads(line) for line in fh if line.strip()]
            if not lines or lines[0].get("type") != "create":
                continue
            header = lines[0]
            session = Session(self.ctx, header["topic_id"], header.get("budget"))
            session.session_id = header["session_id"]
            session.created_at = header["created_at"]
            for rec in lines[1:]:
                if rec.get("type") != "judgment":
                    continue
                if rec["doc_id"] not in session.pending:
                    # deterministic selection re-creates the original batch
                    session.next_batch()
                session.submit([(rec["doc_id"], rec["label"])])
            with self._lock:
                self._sessions[session.session_id] = session
                token = header.get("client_token")
                if token is not None:
                    self._by_token[(header["topic_id"], token)] = session.session_id
            count += 1
        return count


# ---------------------------------------------------------------------------
# HTTP wiring
# ---------------------------------------------------------------------------


class CreateBody(BaseModel):
    topic_id: str
    client_token: str | None = None
    budget: int | None = None


class JudgmentIn(BaseModel):
    doc_id: str
    label: int


class SubmitBody(BaseModel):
    judgments: list[JudgmentIn]


_ERROR_STATUS = [
    (NotFoundError, 404, "not_found"),
    (ConflictError, 409, "conflict"),
    (ValidationError, 422, "validation"),
    (ConfigError, 400, "bad_request"),
]


def create_app(ctx: ServiceContext, recover: bool = True) -> FastAPI:
    app = FastAPI(title="poolforge judging service", version="1")
    service = SessionService(ctx)
    if recover:
        service.recover()
    app.state.service = service

    @app.exception_handler(PoolforgeError)
    async def _handle(request: Request, exc: PoolforgeError):
        for klass, status, code in _ERROR_STATUS:
            if isinstance(exc, klass):
                return JSONResponse({"code": code, "message": str(exc)}, status_code=status)
        return JSONResponse({"code": "error", "message": str(exc)}, status_code=500)

    @app.get("/v1/topics")
    def topics():
        return {
            "topics": [
                {
                    "topic_id": t,
                    "pool_size": len(ctx.vectors.doc_ids),
                    "ranking_depth": len(ctx.rankings[t]),
                }
                for t in ctx.topics()
            ]
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateBody):
        session = service.create(body.topic_id, body.client_token, body.budget)
        return session.state()

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get(session_id).state()

    @app.get("/v1/sessions/{session_id}/next-batch")
    def next_batch(session_id: str):
        return {"docs": service.get(session_id).next_batch()}

    @app.post("/v1/sessions/{session_id}/judgments")
    def submit(session_id: str, body: SubmitBody):
        session = service.get(session_id)
        session.submit([(j.doc_id, j.label) for j in body.judgments])
        return session.state()

    @app.get("/v1/sessions/{session_id}/qrels")
    def qrels(session_id: str, mode: str = Query(default=MODE_HUMAN_ONLY)):
        return PlainTextResponse(service.get(session_id).export_qrels(mode))

    return app


def mount_static(app: FastAPI, static_dir) -> None:
    from fastapi.staticfiles import StaticFiles

    app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
