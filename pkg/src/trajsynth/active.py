"""Disagreement-driven example selection and the label-resynthesize loop."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .enumeration import EnumConfig, SynthesisResult, synthesize_query
from .parser import format_query
from .predicates import Registry
from .query import Query
from .semantics import Convention, check_sat, parallel_map
from .trajectory import Dataset, Trajectory

Transcript = list[dict]


class OracleClosed(RuntimeError):
    """The interactive label channel was shut before an answer arrived."""


class SeedingError(ValueError):
    """The training pool cannot supply the requested initial label counts."""


class GroundTruthOracle:
    """Labels by evaluating a complete query under a convention."""

    def __init__(self, query: Query, registry: Registry,
                 convention: Convention = Convention.SAT,
                 var_map: dict[str, int] | None = None):
        self.query = query
        self.registry = registry
        self.convention = convention
        self.var_map = var_map

    def label(self, z: Trajectory) -> int:
        return check_sat(self.query, z, self.registry, self.convention, self.var_map)


class FixedLabelsOracle:
    """Labels from a fixed id -> {0,1} map (e.g. a dataset's labels)."""

    def __init__(self, labels: dict[str, int]):
        self.labels = dict(labels)

    def label(self, z: Trajectory) -> int:
        try:
            return int(self.labels[z.id])
        except KeyError:
            raise SeedingError(f"no label available for trajectory {z.id!r}")


class InteractiveOracle:
    """Blocking single-question channel between the loop and a human.

    The loop thread calls label(); a UI thread answers via provide(). At most
    one question is pending at a time.
    """

    def __init__(self):
        self._cv = threading.Condition()
        self._pending: str | None = None
        self._answer: int | None = None
        self._closed = False
        self.on_question: Callable[[str], None] | None = None

    @property
    def pending(self) -> str | None:
        with self._cv:
            return self._pending

    def label(self, z: Trajectory) -> int:
        with self._cv:
            if self._closed:
                raise OracleClosed()
            self._pending = z.id
            self._answer = None
        if self.on_question:
            self.on_question(z.id)
        with self._cv:
            while self._answer is None and not self._closed:
                self._cv.wait()
            if self._answer is None:
                raise OracleClosed()
            ans, self._pending, self._answer = self._answer, None, None
            return ans

    def provide(self, trajectory_id: str, label: int) -> None:
        with self._cv:
            if self._closed or self._pending != trajectory_id or self._answer is not None:
                raise ValueError("no such pending question")
            self._answer = int(label)
            self._cv.notify_all()

    def close(self) -> None:
        with self._cv:
            self._closed = True
            self._cv.notify_all()


@dataclass
class LoopConfig:
    initial_positives: int = 2
    initial_negatives: int = 10
    steps: int = 25
    seed: int = 0
    selector: str = "disagreement"  # or "random"

    def __post_init__(self):
        if self.initial_positives < 0 or self.initial_negatives < 0 or self.steps < 0:
            raise ValueError("counts must be nonnegative")
        if self.selector not in ("disagreement", "random"):
            raise ValueError(f"unknown selector {self.selector!r}")


class PredictionCache:
    """Per-query 0/1 predictions over a fixed trajectory list, keyed by the
    query's canonical text (stable across resynthesis rounds)."""

    def __init__(self, trajectories: Sequence[Trajectory], registry: Registry,
                 convention: Convention, var_map: dict[str, int] | None = None):
        self.trajectories = list(trajectories)
        self.index = {z.id: i for i, z in enumerate(self.trajectories)}
        self.registry = registry
        self.convention = convention
        self.var_map = var_map
        self._cache: dict[str, np.ndarray] = {}

    def predictions(self, q: Query) -> np.ndarray:
        key = format_query(q)
        got = self._cache.get(key)
        if got is None:
            got = np.array(parallel_map(
                lambda z: check_sat(q, z, self.registry, self.convention, self.var_map),
                self.trajectories), dtype=np.int8)
            got.flags.writeable = False
            self._cache[key] = got
        return got


def disagreement(z: Trajectory, queries: Sequence[Query], registry: Registry,
                 convention: Convention = Convention.SAT,
                 var_map: dict[str, int] | None = None) -> float:
    """Fraction of the consistent queries that label z positive."""
    if not queries:
        raise ValueError("the consistent set is empty")
    votes = sum(check_sat(q, z, registry, convention, var_map) for q in queries)
    return votes / len(queries)


def select_next(unlabeled: Sequence[Trajectory], queries: Sequence[Query],
                registry: Registry, convention: Convention = Convention.SAT,
                var_map: dict[str, int] | None = None) -> Trajectory:
    """The trajectory the consistent set disagrees on most (J closest to 1/2),
    first index on ties."""
    if not unlabeled:
        raise ValueError("no unlabeled trajectories remain")
    best, best_gap = None, None
    for z in unlabeled:
        gap = abs(disagreement(z, queries, registry, convention, var_map) - 0.5)
        if best_gap is None or gap < best_gap:
            best, best_gap = z, gap
    return best


def _precision_recall_f1(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate_f1(queries: Sequence[Query], test: Sequence[tuple[Trajectory, int]],
                registry: Registry, convention: Convention = Convention.SAT,
                var_map: dict[str, int] | None = None,
                cache: PredictionCache | None = None) -> tuple[float | None, list[float]]:
    """Per-query F1 on a labeled set and the median (lower-middle for even
    counts); the median is None when there are no queries."""
    if not queries:
        return None, []
    truth = np.array([y for _, y in test], dtype=np.int8)
    scores = []
    for q in queries:
        if cache is not None:
            idx = [cache.index[z.id] for z, _ in test]
            pred = cache.predictions(q)[idx]
        else:
            pred = np.array([check_sat(q, z, registry, convention, var_map) for z, _ in test],
                            dtype=np.int8)
        scores.append(_precision_recall_f1(pred, truth)[2])
    ordered = sorted(scores)
    return ordered[(len(ordered) - 1) // 2], scores


@dataclass
class LoopResult:
    transcript: Transcript
    synthesis: SynthesisResult
    labeled: list[tuple[Trajectory, int]]
    consistent: list[Query] = field(default_factory=list)


@dataclass
class RoundUpdate:
    """Snapshot handed to run_loop's on_round callback after each round."""

    record: dict
    labeled: list[tuple[Trajectory, int]]
    synthesis: SynthesisResult
    queries: list[Query]


def seed_examples(train: Dataset, oracle, cfg: LoopConfig) -> list[tuple[Trajectory, int]]:
    """Sample the initial labeled set: walk a seeded permutation of the train
    pool, asking the oracle, until the configured counts are met."""
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(train.trajectories))
    need_pos, need_neg = cfg.initial_positives, cfg.initial_negatives
    out: list[tuple[Trajectory, int]] = []
    for i in order:
        if need_pos == 0 and need_neg == 0:
            break
        z = train.trajectories[int(i)]
        y = int(oracle.label(z))
        if y == 1 and need_pos > 0:
            out.append((z, 1))
            need_pos -= 1
        elif y == 0 and need_neg > 0:
            out.append((z, 0))
            need_neg -= 1
    if need_pos or need_neg:
        raise SeedingError(
            f"train pool lacks {need_pos} positive(s) and {need_neg} negative(s)")
    return out


def run_loop(
    train: Dataset,
    test: Dataset,
    oracle,
    enum_cfg: EnumConfig,
    loop_cfg: LoopConfig,
    convention: Convention = Convention.SAT,
    per_sketch_budget: int = 25,
    var_map: dict[str, int] | None = None,
    on_round: Callable[[dict], None] | None = None,
    resume: "LoopResult | None" = None,
    seed_oracle=None,
) -> LoopResult:
    """Label-resynthesize loop: seed, then per round pick the most contested
    trajectory, ask the oracle, and resynthesize with resumed search states.

    Stops early once the consistent set agrees on every unlabeled training
    trajectory; always stops after loop_cfg.steps rounds.
    """
    registry = enum_cfg.registry
    test_pairs = test.labeled_pairs()
    cache = PredictionCache(
        list(train.trajectories) + [z for z, _ in test_pairs if z.id not in
                                    {t.id for t in train.trajectories}],
        registry, convention, var_map)

    if resume is not None:
        labeled = list(resume.labeled)
        transcript = list(resume.transcript)
        synthesis = resume.synthesis
        start_round = len(transcript)
    else:
        labeled = seed_examples(train, seed_oracle or oracle, loop_cfg)
        transcript = []
        synthesis = None
        start_round = 0

    labeled_ids = {z.id for z, _ in labeled}
    rng = np.random.default_rng(loop_cfg.seed + 1)

    def round_record(rnd: int, labeled_id, label, queries, synthesis) -> dict:
        median, _ = evaluate_f1(queries, test_pairs, registry, convention, var_map, cache)
        rec = {
            "round": rnd,
            "labeled_id": labeled_id,
            "label": label,
            "num_consistent": len(queries),
            "median_f1": median,
        }
        transcript.append(rec)
        if on_round:
            on_round(RoundUpdate(rec, list(labeled), synthesis, list(queries)))
        return rec

    def agreement_reached(queries) -> bool:
        if not queries:
            return False
        pool = [z for z in train.trajectories if z.id not in labeled_ids]
        for z in pool:
            votes = {int(cache.predictions(q)[cache.index[z.id]]) for q in queries}
            if len(votes) > 1:
                return False
        return True

    if start_round == 0:
        synthesis = synthesize_query(labeled, enum_cfg, per_sketch_budget, None,
                                     convention, var_map)
        queries = synthesis.consistent_queries()
        round_record(0, None, None, queries, synthesis)
    else:
        queries = synthesis.consistent_queries()

    for rnd in range(start_round if start_round > 0 else 1, loop_cfg.steps + 1):
        pool = [z for z in train.trajectories if z.id not in labeled_ids]
        if not pool or agreement_reached(queries):
            break
        if loop_cfg.selector == "random" or not queries:
            z_star = pool[int(rng.integers(len(pool)))] if loop_cfg.selector == "random" else pool[0]
        else:
            best, best_gap = None, None
            for z in pool:
                votes = [int(cache.predictions(q)[cache.index[z.id]]) for q in queries]
                gap = abs(sum(votes) / len(votes) - 0.5)
                if best_gap is None or gap < best_gap:
                    best, best_gap = z, gap
            z_star = best
        y = int(oracle.label(z_star))
        labeled.append((z_star, y))
        labeled_ids.add(z_star.id)
        synthesis = synthesize_query(labeled, enum_cfg, per_sketch_budget, synthesis,
                                     convention, var_map)
        queries = synthesis.consistent_queries()
        round_record(rnd, z_star.id, y, queries, synthesis)

    return LoopResult(transcript, synthesis, labeled, synthesis.consistent_queries())
