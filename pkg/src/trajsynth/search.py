"""Parameter-space search for one sketch: half-open boxes, diagonal pruning
pairs, 3^d splitting, and the resumable FIFO work-list."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .parser import format_query, parse_query
from .predicates import NEG_INF, POS_INF, Registry
from .query import Hole, Pred, Sketch, substitute, walk
from .semantics import (
    Convention, DirectionFrame, check_sat, eval_quant_fast, parallel_map, wrap_sub,
)
from .trajectory import Trajectory

LabeledExample = tuple[Trajectory, int]


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open hyper-rectangle: lo_i < theta_i <= hi_i."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    depth: int = 0

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("corner dimensions differ")
        if any(not (a < b) for a, b in zip(self.lo, self.hi)):
            raise ValueError("box must have positive width in every dimension")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def contains(self, theta: Sequence[float]) -> bool:
        return all(a < t <= b for a, t, b in zip(self.lo, theta, self.hi))

    def volume(self) -> float:
        out = 1.0
        for a, b in zip(self.lo, self.hi):
            out *= b - a
        return out

    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))


def midpoint(box: Box) -> tuple[float, ...]:
    if any(not math.isfinite(v) for v in box.lo + box.hi):
        raise ValueError("midpoint of an unbounded box")
    return tuple((a + b) / 2.0 for a, b in zip(box.lo, box.hi))


@dataclass(frozen=True)
class Point:
    theta: tuple[float, ...]


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Top:
    pass


BOTTOM = Bottom()
TOP = Top()
BoundaryParam = Union[Point, Bottom, Top]


def _strictly_less(a: BoundaryParam, b: BoundaryParam) -> bool:
    if isinstance(a, Bottom):
        return not isinstance(b, Bottom)
    if isinstance(b, Top):
        return not isinstance(a, Top)
    if isinstance(a, Point) and isinstance(b, Point):
        return all(x < y for x, y in zip(a.theta, b.theta))
    return False


@dataclass(frozen=True)
class PruningPair:
    """Boundary parameters aggregated over negatives (minus) and positives (plus)."""

    minus: BoundaryParam
    plus: BoundaryParam

    @property
    def consistent(self) -> bool:
        return _strictly_less(self.minus, self.plus)


def corner_point(bp: BoundaryParam, box: Box) -> tuple[float, ...]:
    if isinstance(bp, Bottom):
        return box.lo
    if isinstance(bp, Top):
        return box.hi
    return tuple(min(max(t, a), b) for t, a, b in zip(bp.theta, box.lo, box.hi))


@dataclass
class SplitResult:
    center: Box | None
    lower: Box | None
    upper: Box | None
    incomp: list[Box]
    extra: list[Box]

    def all_boxes(self) -> list[Box]:
        out = [b for b in (self.center, self.lower, self.upper) if b is not None]
        return out + self.incomp + self.extra


def split_box(box: Box, minus: BoundaryParam, plus: BoundaryParam) -> SplitResult:
    """Cut the box at the pair's component-wise min/max into up to 3^d pieces.

    Pieces with zero width in any dimension are dropped; the remainder
    partitions the box exactly.
    """
    p_minus = corner_point(minus, box)
    p_plus = corner_point(plus, box)
    a = tuple(min(x, y) for x, y in zip(p_minus, p_plus))
    c = tuple(max(x, y) for x, y in zip(p_minus, p_plus))
    d = box.dimension
    depth = box.depth + 1
    result = SplitResult(None, None, None, [], [])
    for signs in itertools.product((-1, 0, 1), repeat=d):
        lo, hi = [], []
        ok = True
        for s, bl, bh, ai, ci in zip(signs, box.lo, box.hi, a, c):
            l, h = ((bl, ai) if s < 0 else (ai, ci) if s == 0 else (ci, bh))
            if not (l < h):
                ok = False
                break
            lo.append(l)
            hi.append(h)
        if not ok:
            continue
        piece = Box(tuple(lo), tuple(hi), depth)
        if all(s == 0 for s in signs):
            result.center = piece
        elif all(s == -1 for s in signs):
            result.lower = piece
        elif all(s == 1 for s in signs):
            result.upper = piece
        elif 0 not in signs:
            result.incomp.append(piece)
        else:
            result.extra.append(piece)
    return result


def initial_box(sketch: Sketch, registry: Registry) -> Box:
    """Per-dimension interval from each hole's declared score range, widened
    one representable step below the bottom so the half-open box contains it."""
    ranges: dict[int, tuple[float, float]] = {}
    for node in walk(sketch.query):
        if isinstance(node, Pred) and isinstance(node.param, Hole):
            ranges[node.param.id] = registry[node.name].score_range
    lo = tuple(float(np.nextafter(ranges[h][0], NEG_INF)) for h in sketch.hole_order)
    hi = tuple(float(ranges[h][1]) for h in sketch.hole_order)
    return Box(lo, hi)


def box_frame(box: Box) -> DirectionFrame:
    return DirectionFrame(box.lo, tuple(b - a for a, b in zip(box.lo, box.hi)))


def _eval_query(sketch: Sketch, convention: Convention) -> Sketch:
    if convention is Convention.SAT_SUB:
        return Sketch(wrap_sub(sketch.query))
    return sketch


def _diag_point(box: Box, t: float) -> tuple[float, ...]:
    return tuple(a + t * (b - a) for a, b in zip(box.lo, box.hi))


def _clamp_boundary(t: float, box: Box) -> BoundaryParam:
    if t >= 1.0:
        return Point(box.hi)
    if t <= 0.0:
        return Point(box.lo)
    return Point(_diag_point(box, t))


def compute_pruning_pair(W: Sequence[LabeledExample], sketch: Sketch, box: Box,
                         registry: Registry, convention: Convention = Convention.SAT,
                         var_map: dict[str, int] | None = None) -> PruningPair:
    """One quantitative sweep per example; aggregates min over positives and
    max over negatives along the box diagonal."""
    ev = _eval_query(sketch, convention)
    frame = box_frame(box)
    positives = [z for z, y in W if y == 1]
    negatives = [z for z, y in W if y == 0]
    pos_vals = parallel_map(lambda z: eval_quant_fast(ev, frame, z, registry, var_map), positives)
    neg_vals = parallel_map(lambda z: eval_quant_fast(ev, frame, z, registry, var_map), negatives)
    t_plus = min(pos_vals) if pos_vals else POS_INF
    t_minus = max(neg_vals) if neg_vals else NEG_INF
    plus = TOP if not pos_vals else _clamp_boundary(t_plus, box)
    minus = BOTTOM if not neg_vals else _clamp_boundary(t_minus, box)
    return PruningPair(minus, plus)


def binary_search_pair(W: Sequence[LabeledExample], sketch: Sketch, box: Box,
                       registry: Registry, eps: float = 1e-6,
                       convention: Convention = Convention.SAT,
                       var_map: dict[str, int] | None = None) -> PruningPair:
    """Bisection baseline: locates each transition along the diagonal with
    O(log 1/eps) whole-dataset satisfaction sweeps, then returns the
    conservative inner endpoints."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ev = _eval_query(sketch, convention)
    positives = [z for z, y in W if y == 1]
    negatives = [z for z, y in W if y == 0]

    def sat_all(examples: list[Trajectory], t: float, want: int) -> bool:
        q = substitute(ev, _diag_point(box, t))
        res = parallel_map(lambda z: check_sat(q, z, registry, Convention.SAT, var_map), examples)
        return all(r == want for r in res)

    def locate(examples: list[Trajectory], want: int, increasing: bool) -> BoundaryParam:
        # g(t) = "every example has the wanted label at diag(t)"; monotone.
        g0 = sat_all(examples, 0.0, want)
        g1 = sat_all(examples, 1.0, want)
        if increasing:
            if g0:
                return Point(box.lo)
            if not g1:
                return Point(box.hi)
            lo_t, hi_t = 0.0, 1.0  # g(lo)=False, g(hi)=True
            while hi_t - lo_t > eps:
                mid = (lo_t + hi_t) / 2.0
                if sat_all(examples, mid, want):
                    hi_t = mid
                else:
                    lo_t = mid
            return Point(_diag_point(box, hi_t))
        if g1:
            return Point(box.hi)
        if not g0:
            return Point(box.lo)
        lo_t, hi_t = 0.0, 1.0  # g(lo)=True, g(hi)=False
        while hi_t - lo_t > eps:
            mid = (lo_t + hi_t) / 2.0
            if sat_all(examples, mid, want):
                lo_t = mid
            else:
                hi_t = mid
        return Point(_diag_point(box, lo_t))

    plus = TOP if not positives else locate(positives, 1, increasing=False)
    minus = BOTTOM if not negatives else locate(negatives, 0, increasing=True)
    return PruningPair(minus, plus)


def w_fingerprint(W: Sequence[LabeledExample]) -> tuple:
    return tuple(sorted((z.id, int(y)) for z, y in W))


@dataclass
class SearchState:
    """Resumable partition of the initial box into consistent / inconsistent /
    unknown regions; the unknown set is a FIFO queue."""

    sketch: Sketch
    initial: Box
    b_con: list[Box] = field(default_factory=list)
    b_inc: list[Box] = field(default_factory=list)
    b_unk: deque = field(default_factory=deque)
    steps: int = 0
    w_token: tuple = ()

    def requeue_consistent(self) -> None:
        for b in reversed(self.b_con):
            self.b_unk.appendleft(b)
        self.b_con.clear()

    def exhausted(self) -> bool:
        return not self.b_unk


PairFn = Callable[..., PruningPair]


def synthesize_parameters(
    W: Sequence[LabeledExample],
    sketch: Sketch,
    registry: Registry,
    budget: int = 25,
    resume: SearchState | None = None,
    convention: Convention = Convention.SAT,
    var_map: dict[str, int] | None = None,
    method: str = "quant",
    eps: float = 1e-3,
    on_step: Callable | None = None,
) -> SearchState:
    """Work-list search: pop FIFO, compute a pruning pair, split, route.

    Pauses as soon as a consistent box lands in b_con or the step budget for
    this call is spent. Resuming after W changed first re-queues previously
    consistent boxes (at the front, so they are re-checked first).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    token = w_fingerprint(W)
    if resume is not None:
        state = resume
        if state.w_token != token:
            state.requeue_consistent()
            state.w_token = token
    else:
        box0 = initial_box(sketch, registry)
        state = SearchState(sketch, box0, b_unk=deque([box0]), w_token=token)

    if sketch.dimension == 0:
        if state.b_unk:
            box = state.b_unk.popleft()
            ok = all(
                check_sat(sketch.query, z, registry, convention, var_map) == y
                for z, y in W
            )
            (state.b_con if ok else state.b_inc).append(box)
            state.steps += 1
            if on_step:
                on_step(box, None, None)
        return state

    for _ in range(budget):
        if not state.b_unk:
            break
        box = state.b_unk.popleft()
        if method == "quant":
            pair = compute_pruning_pair(W, sketch, box, registry, convention, var_map)
        elif method == "bsearch":
            pair = binary_search_pair(W, sketch, box, registry, eps, convention, var_map)
        else:
            raise ValueError(f"unknown pruning method {method!r}")
        split = split_box(box, pair.minus, pair.plus)
        found = False
        if pair.consistent:
            if split.center is not None:
                state.b_con.append(split.center)
                found = True
            state.b_inc.extend(b for b in (split.lower, split.upper) if b is not None)
            state.b_unk.extend(sorted(split.incomp + split.extra, key=lambda b: (b.lo, b.hi)))
        else:
            state.b_inc.extend(
                b for b in (split.center, split.lower, split.upper) if b is not None)
            state.b_inc.extend(split.extra)
            state.b_unk.extend(sorted(split.incomp, key=lambda b: (b.lo, b.hi)))
        state.steps += 1
        if on_step:
            on_step(box, pair, split)
        if found:
            break
    return state


# ---------------------------------------------------------------------------
# Serialization


def _box_obj(b: Box) -> dict:
    return {"lo": list(b.lo), "hi": list(b.hi), "depth": b.depth}


def _box_from(obj: dict) -> Box:
    return Box(tuple(obj["lo"]), tuple(obj["hi"]), int(obj.get("depth", 0)))


def state_to_json_obj(state: SearchState) -> dict:
    return {
        "sketch": format_query(state.sketch.query),
        "initial": _box_obj(state.initial),
        "b_con": [_box_obj(b) for b in state.b_con],
        "b_inc": [_box_obj(b) for b in state.b_inc],
        "b_unk": [_box_obj(b) for b in state.b_unk],
        "steps": state.steps,
        "w": [list(pair) for pair in state.w_token],
    }


def state_from_json_obj(obj: dict) -> SearchState:
    return SearchState(
        sketch=Sketch(parse_query(obj["sketch"])),
        initial=_box_from(obj["initial"]),
        b_con=[_box_from(b) for b in obj["b_con"]],
        b_inc=[_box_from(b) for b in obj["b_inc"]],
        b_unk=deque(_box_from(b) for b in obj["b_unk"]),
        steps=int(obj["steps"]),
        w_token=tuple(tuple(p) for p in obj.get("w", [])),
    )
