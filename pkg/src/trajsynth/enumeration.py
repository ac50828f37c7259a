"""Sketch enumeration under size limits and the outer synthesis loop."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .parser import format_query, parse_query
from .predicates import Registry
from .query import And, Hole, Iterate, Or, Pred, Query, Seq, Sketch, renumber, substitute
from .search import (
    LabeledExample, SearchState, midpoint, state_from_json_obj,
    state_to_json_obj, synthesize_parameters,
)
from .semantics import Convention

EXCLUDED_FROM_ENUMERATION = ("None",)


@dataclass
class EnumConfig:
    """Structural limits and operator set for the sketch space."""

    registry: Registry
    max_predicates: int = 3
    max_parameterized: int = 2
    operators: tuple[str, ...] = ("seq", "and")
    iterate_ks: tuple[int, ...] = (2, 3)
    variables: tuple[str, ...] = ("A",)
    predicate_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.max_predicates < 1:
            raise ValueError("max_predicates must be >= 1")
        if self.max_parameterized > self.max_predicates:
            raise ValueError("max_parameterized cannot exceed max_predicates")
        bad = set(self.operators) - {"seq", "and", "or", "iterate"}
        if bad:
            raise ValueError(f"unknown operators: {sorted(bad)}")


def predicate_instances(cfg: EnumConfig) -> list[Pred]:
    """Each registry predicate instantiated over the configured variables."""
    names = cfg.predicate_names if cfg.predicate_names is not None else cfg.registry.names()
    out: list[Pred] = []
    for name in names:
        if name in EXCLUDED_FROM_ENUMERATION:
            continue
        pdef = cfg.registry[name]
        param = Hole(0) if pdef.parameterized else None
        if pdef.arity == 0:
            out.append(Pred(name, (), param))
        else:
            for combo in itertools.permutations(cfg.variables, pdef.arity):
                out.append(Pred(name, combo, param))
    return out


def _param_leaves(q: Query) -> int:
    if isinstance(q, Pred):
        return int(q.param is not None)
    if isinstance(q, (Seq, And, Or)):
        return _param_leaves(q.left) + _param_leaves(q.right)
    if isinstance(q, Iterate):
        return _param_leaves(q.child) * q.count
    raise TypeError(f"unexpected node in enumeration: {q!r}")


def _canonical_key(q: Query) -> str:
    """Print-based dedup key: conjunction/disjunction operands sorted
    (commutativity), sequencing chains flattened (associativity)."""
    if isinstance(q, (And, Or)):
        op = "&" if isinstance(q, And) else "|"
        parts = sorted(_flatten(q, type(q)))
        return "(" + f" {op} ".join(parts) + ")"
    if isinstance(q, Seq):
        return "(" + " ; ".join(_flatten(q, Seq)) + ")"
    if isinstance(q, Iterate):
        return f"{_canonical_key(q.child)}^{q.count}"
    return format_query(q)


def _flatten(q: Query, op: type) -> list[str]:
    if isinstance(q, op):
        return _flatten(q.left, op) + _flatten(q.right, op)
    return [_canonical_key(q)]


def enumerate_sketches(cfg: EnumConfig) -> list[Sketch]:
    """All sketches up to the structural limits, in nondecreasing predicate
    count with a deterministic canonical-text tie-break; commutative
    duplicates removed."""
    leaves = predicate_instances(cfg)
    by_count: dict[int, list[Query]] = {}

    def trees(count: int) -> list[Query]:
        got = by_count.get(count)
        if got is not None:
            return got
        out: list[Query] = list(leaves) if count == 1 else []
        if count > 1:
            # left-heavy shapes first so the flat form survives deduplication
            for left_n in range(count - 1, 0, -1):
                for left in trees(left_n):
                    for right in trees(count - left_n):
                        if "seq" in cfg.operators:
                            out.append(Seq(left, right))
                        if "and" in cfg.operators:
                            out.append(And(left, right))
                        if "or" in cfg.operators:
                            out.append(Or(left, right))
        if "iterate" in cfg.operators:
            for k in cfg.iterate_ks:
                if count % k == 0 and count // k >= 1 and count != count // k:
                    for body in trees(count // k):
                        out.append(Iterate(body, k))
        by_count[count] = out
        return out

    seen: set[str] = set()
    result: list[Sketch] = []
    for count in range(1, cfg.max_predicates + 1):
        bucket = []
        for q in trees(count):
            if _param_leaves(q) > cfg.max_parameterized:
                continue
            key = _canonical_key(q)
            if key in seen:
                continue
            seen.add(key)
            bucket.append((format_query(q), q))
        bucket.sort(key=lambda kv: kv[0])
        result.extend(Sketch(renumber(q)) for _, q in bucket)
    return result


@dataclass
class SynthesisEntry:
    sketch: Sketch
    state: SearchState
    representative: Query | None = None


@dataclass
class SynthesisResult:
    """One entry per enumerated sketch; entries with a known-consistent box
    contribute one representative complete query (midpoint parameters)."""

    entries: list[SynthesisEntry] = field(default_factory=list)

    def consistent_queries(self) -> list[Query]:
        return [e.representative for e in self.entries if e.representative is not None]

    def by_sketch_text(self) -> dict[str, SynthesisEntry]:
        return {format_query(e.sketch.query): e for e in self.entries}


def _representative(entry: SynthesisEntry) -> Query | None:
    if not entry.state.b_con:
        return None
    return substitute(entry.sketch, midpoint(entry.state.b_con[0]))


def synthesize_query(
    W: Sequence[LabeledExample],
    cfg: EnumConfig,
    per_sketch_budget: int = 25,
    resume: SynthesisResult | None = None,
    convention: Convention = Convention.SAT,
    var_map: dict[str, int] | None = None,
) -> SynthesisResult:
    """Run the parameter search for every enumerated sketch, resuming any
    prior states, and collect representatives for consistent sketches."""
    prior = resume.by_sketch_text() if resume is not None else {}
    result = SynthesisResult()
    for sketch in enumerate_sketches(cfg):
        key = format_query(sketch.query)
        old = prior.get(key)
        state = synthesize_parameters(
            W, sketch, cfg.registry,
            budget=per_sketch_budget,
            resume=old.state if old is not None else None,
            convention=convention,
            var_map=var_map,
        )
        entry = SynthesisEntry(sketch, state)
        entry.representative = _representative(entry)
        result.entries.append(entry)
    return result


def result_to_json_obj(result: SynthesisResult) -> list:
    out = []
    for e in result.entries:
        out.append({
            "sketch": format_query(e.sketch.query),
            "state": state_to_json_obj(e.state),
            "representative": None if e.representative is None else format_query(e.representative),
        })
    return out


def result_from_json_obj(obj: list) -> SynthesisResult:
    result = SynthesisResult()
    for rec in obj:
        state = state_from_json_obj(rec["state"])
        rep = None if rec.get("representative") is None else parse_query(rec["representative"])
        result.entries.append(SynthesisEntry(state.sketch, state, rep))
    return result
