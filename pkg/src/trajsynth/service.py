"""HTTP JSON service hosting one interactive labeling session.

A single worker thread drives the active-learning loop; requests talk to it
through the blocking label channel. Shared state sits behind one lock, and a
JSON checkpoint is rewritten after every completed round so a killed service
resumes with no lost or duplicated rounds.
"""

from __future__ import annotations

import json
import os
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .active import (
    FixedLabelsOracle, InteractiveOracle, LoopConfig, LoopResult, OracleClosed,
    RoundUpdate, run_loop,
)
from .enumeration import EnumConfig, result_from_json_obj, result_to_json_obj
from .parser import QuerySyntaxError, format_query, parse_query
from .predicates import Region, regions_to_json_obj
from .query import Query
from .semantics import Convention, check_sat
from .trajectory import Dataset, dataset_to_json_obj, split_dataset

STATIC_DIR = Path(__file__).parent / "static"


class LabelRequest(BaseModel):
    trajectory_id: str
    label: int


class Session:
    """Owns the dataset, the loop worker, and the status snapshot."""

    def __init__(self, dataset: Dataset, enum_cfg: EnumConfig, loop_cfg: LoopConfig,
                 convention: Convention, split: float = 0.5,
                 checkpoint_path: str | None = None, regions: list[Region] | None = None):
        self.dataset = dataset
        self.enum_cfg = enum_cfg
        self.loop_cfg = loop_cfg
        self.convention = convention
        self.regions = regions or []
        self.train, self.test = split_dataset(dataset, split)
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.oracle = InteractiveOracle()
        self.oracle.on_question = self._on_question
        self._lock = threading.Lock()
        self._state = "synthesizing"
        self._pending_id: str | None = None
        self._transcript: list[dict] = []
        self._labeled: list = []
        self._queries: list[Query] = []
        self._worker: threading.Thread | None = None

    # ---- worker side

    def start(self) -> None:
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def _run(self) -> None:
        resume = self._load_checkpoint()
        seed_oracle = FixedLabelsOracle(self.dataset.labels) if self.dataset.labels else None
        try:
            result = run_loop(
                self.train, self.test, self.oracle, self.enum_cfg, self.loop_cfg,
                self.convention, on_round=self._on_round, resume=resume,
                seed_oracle=seed_oracle,
            )
            with self._lock:
                self._state = "done"
                self._pending_id = None
                self._queries = list(result.consistent)
                self._labeled = list(result.labeled)
        except OracleClosed:
            with self._lock:
                self._state = "aborted"
                self._pending_id = None

    def _on_question(self, trajectory_id: str) -> None:
        with self._lock:
            self._pending_id = trajectory_id
            self._state = "idle"

    def _on_round(self, update: RoundUpdate) -> None:
        with self._lock:
            self._transcript.append(update.record)
            self._labeled = list(update.labeled)
            self._queries = list(update.queries)
        self._write_checkpoint(update)

    # ---- request side

    def status(self) -> dict:
        with self._lock:
            rec = self._transcript[-1] if self._transcript else None
            return {
                "round": rec["round"] if rec else 0,
                "pending_id": self._pending_id,
                "num_consistent": rec["num_consistent"] if rec else 0,
                "median_f1": rec["median_f1"] if rec else None,
                "state": self._state,
            }

    def transcript(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in self._transcript]

    def queries(self) -> list[Query]:
        with self._lock:
            return list(self._queries)

    def labeled(self) -> list:
        with self._lock:
            return list(self._labeled)

    def pending(self) -> str | None:
        with self._lock:
            return self._pending_id

    def provide_label(self, trajectory_id: str, label: int) -> None:
        with self._lock:
            if self._pending_id != trajectory_id:
                raise KeyError("no such pending question")
            self._pending_id = None
            self._state = "synthesizing"
        try:
            self.oracle.provide(trajectory_id, label)
        except ValueError:
            raise KeyError("no such pending question")

    def scene(self, trajectory_id: str) -> dict:
        z = self.dataset.by_id(trajectory_id)
        labels = None
        if self.dataset.labels and z.id in self.dataset.labels:
            labels = {z.id: self.dataset.labels[z.id]}
        sub = Dataset([z], self.dataset.object_count, labels, self.dataset.frame_rate)
        obj = dataset_to_json_obj(sub)
        obj["regions"] = regions_to_json_obj(self.regions)["regions"]
        return obj

    def close(self) -> None:
        self.oracle.close()
        if self._worker is not None and self._worker.is_alive():
            self._worker.join(timeout=10)

    # ---- checkpointing

    def _write_checkpoint(self, update: RoundUpdate) -> None:
        if self.checkpoint_path is None:
            return
        obj = {
            "transcript": self.transcript(),
            "labeled": [[z.id, int(y)] for z, y in update.labeled],
            "synthesis": result_to_json_obj(update.synthesis),
        }
        tmp = self.checkpoint_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
        os.replace(tmp, self.checkpoint_path)

    def _load_checkpoint(self) -> LoopResult | None:
        if self.checkpoint_path is None or not self.checkpoint_path.exists():
            return None
        obj = json.loads(self.checkpoint_path.read_text())
        if not obj.get("transcript"):
            return None
        synthesis = result_from_json_obj(obj["synthesis"])
        labeled = [(self.dataset.by_id(tid), int(y)) for tid, y in obj["labeled"]]
        result = LoopResult(list(obj["transcript"]), synthesis, labeled)
        with self._lock:
            self._transcript = list(obj["transcript"])
            self._labeled = list(labeled)
            self._queries = synthesis.consistent_queries()
        return result


def create_app(session: Session) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        session.start()
        yield
        session.close()

    app = FastAPI(title="trajsynth labeling service", lifespan=lifespan)

    @app.get("/api/status")
    def status():
        return session.status()

    @app.get("/api/transcript")
    def transcript():
        return session.transcript()

    @app.get("/api/next")
    def next_question():
        tid = session.pending()
        if tid is None:
            raise HTTPException(status_code=404, detail="no pending question")
        queries = session.queries()
        j = 0.5
        if queries:
            z = session.dataset.by_id(tid)
            votes = [check_sat(q, z, session.enum_cfg.registry, session.convention)
                     for q in queries]
            j = sum(votes) / len(votes)
        return {"trajectory_id": tid, "frames": session.scene(tid), "J": j}

    @app.post("/api/label")
    def label(req: LabelRequest):
        if req.label not in (0, 1):
            raise HTTPException(status_code=422, detail="label must be 0 or 1")
        try:
            session.provide_label(req.trajectory_id, req.label)
        except KeyError:
            return JSONResponse(status_code=409, content={"accepted": False})
        return {"accepted": True}

    @app.get("/api/trajectory/{trajectory_id}")
    def trajectory(trajectory_id: str):
        try:
            return session.scene(trajectory_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown trajectory")

    @app.get("/api/queries")
    def queries():
        registry = session.enum_cfg.registry
        labeled = session.labeled()
        out = []
        for q in session.queries():
            correct = sum(
                1 for z, y in labeled
                if check_sat(q, z, registry, session.convention) == y)
            out.append({
                "query": format_query(q),
                "train_accuracy": correct / len(labeled) if labeled else None,
            })
        return out

    @app.get("/api/predictions")
    def predictions(query: str):
        try:
            q = parse_query(query)
        except QuerySyntaxError as e:
            raise HTTPException(status_code=422, detail=str(e))
        matched = [
            z.id for z in session.dataset.trajectories
            if check_sat(q, z, session.enum_cfg.registry, session.convention) == 1
        ]
        return {"query": format_query(q), "matched": matched}

    if STATIC_DIR.exists():
        app.mount("/", StaticFiles(directory=str(STATIC_DIR), html=True), name="ui")
    return app
