"""Boolean, quantitative, and matrix semantics for trajectory queries.

Three coordinated evaluation paths:

* reference recursions (`eval_sat`, `eval_quant`) in plain Python, used as
  oracles in tests;
* `eval_matrix`, the per-subinterval table over the max-min semiring
  (sequencing is the max-min matrix product);
* `eval_quant_fast`, left-to-right vector propagation through the sequencing
  spine, returning the (0, n) matrix entry in O(|Q| n^2) for spine queries.

Matrix entries and the reference recursion agree bit-for-bit: both reduce
with exact max/min over the same candidate sets and share the predicate
scoring paths.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .predicates import NEG_INF, POS_INF, Registry
from .query import (
    And, Dashv, Hole, Iterate, Neg, Or, Pred, PredHole, Query, Seq, Sketch, Star,
    children, desugar, holes, is_complete,
)
from .trajectory import Trajectory

DEFAULT_VAR_MAP = {"A": 0, "B": 1, "C": 2, "D": 3}

THREADS_ENV = "QUIVR_THREADS"


class Convention(enum.Enum):
    """How a query labels a trajectory: on the whole, or on some subinterval."""

    SAT = "sat"
    SAT_SUB = "sat_sub"


@dataclass(frozen=True)
class DirectionFrame:
    """Affine frame (v, u) for quantitative evaluation along a diagonal ray."""

    v: tuple[float, ...]
    u: tuple[float, ...]

    def __post_init__(self):
        if len(self.v) != len(self.u):
            raise ValueError("v and u must have the same dimension")
        if any(not (ui > 0) for ui in self.u):
            raise ValueError("u must be strictly positive")

    @property
    def dimension(self) -> int:
        return len(self.v)


UNIT_FRAME_0D = DirectionFrame((), ())


def unit_frame(d: int) -> DirectionFrame:
    return DirectionFrame((0.0,) * d, (1.0,) * d)


def _as_sketch(q: Query | Sketch) -> Sketch:
    return q if isinstance(q, Sketch) else Sketch(q)


def _indices(pred: Pred, var_map: dict[str, int]) -> tuple[int, ...]:
    try:
        return tuple(var_map[a] for a in pred.args)
    except KeyError as e:
        raise ValueError(f"unbound variable {e.args[0]!r} in {pred.name}")


def wrap_sub(q: Query) -> Query:
    """Any ; q ; Any — matches when some subinterval matches q."""
    return Seq(Seq(Pred("Any"), q), Pred("Any"))


def _contains_star(q: Query) -> bool:
    if isinstance(q, Star):
        return True
    return any(_contains_star(c) for c in children(q))


# ---------------------------------------------------------------------------
# Reference Boolean semantics


def eval_sat(q: Query, z: Trajectory, registry: Registry,
             var_map: dict[str, int] | None = None) -> int:
    """Whole-trajectory satisfaction by direct recursion over all splits."""
    if not is_complete(q):
        raise ValueError("satisfaction semantics requires a complete query")
    q = desugar(q)
    var_map = var_map or DEFAULT_VAR_MAP
    n = len(z)
    memo: dict[tuple[int, int, int], bool] = {}

    def rec(node: Query, i: int, j: int) -> bool:
        key = (id(node), i, j)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, Pred):
            pdef = registry[node.name]
            s = pdef.score(z, i, j, _indices(node, var_map))
            out = (s >= node.param) if pdef.parameterized else (s == POS_INF)
        elif isinstance(node, Seq):
            out = any(rec(node.left, i, k) and rec(node.right, k, j) for k in range(i, j + 1))
        elif isinstance(node, And):
            out = rec(node.left, i, j) and rec(node.right, i, j)
        elif isinstance(node, Or):
            out = rec(node.left, i, j) or rec(node.right, i, j)
        elif isinstance(node, Star):
            out = i == j or any(rec(node.child, i, k) and rec(node, k, j) for k in range(i + 1, j + 1))
        elif isinstance(node, Neg):
            out = not rec(node.child, i, j)
        elif isinstance(node, Dashv):
            out = node.lo <= j - i <= node.hi and all(rec(node.child, k, n) for k in range(i, j + 1))
        else:
            raise TypeError(f"cannot evaluate {node!r}")
        memo[key] = out
        return out

    return int(rec(q, 0, n))


def eval_sat_sub(q: Query, z: Trajectory, registry: Registry,
                 var_map: dict[str, int] | None = None) -> int:
    """Satisfaction of some subinterval: the stream-derived label function."""
    return eval_sat(wrap_sub(q), z, registry, var_map)


def check_sat(q: Query, z: Trajectory, registry: Registry,
              convention: Convention = Convention.SAT,
              var_map: dict[str, int] | None = None, fast: bool = True) -> int:
    wrapped = wrap_sub(q) if convention is Convention.SAT_SUB else q
    if fast:
        return eval_sat_fast(wrapped, z, registry, var_map)
    return eval_sat(wrapped, z, registry, var_map)


# ---------------------------------------------------------------------------
# Reference quantitative semantics


def eval_quant(sketch: Sketch | Query, frame: DirectionFrame, z: Trajectory,
               registry: Registry, var_map: dict[str, int] | None = None) -> float:
    """How far along the frame's ray the satisfaction boundary lies.

    The returned t makes t*u + v a boundary parameter: satisfied at and
    below it, unsatisfied strictly above (with +/-inf for always/never).
    """
    sk = _as_sketch(sketch)
    if frame.dimension != sk.dimension:
        raise ValueError(f"frame dimension {frame.dimension} != sketch dimension {sk.dimension}")
    q = desugar(sk.query)
    var_map = var_map or DEFAULT_VAR_MAP
    n = len(z)
    memo: dict[tuple[int, int, int], float] = {}

    def rec(node: Query, i: int, j: int) -> float:
        key = (id(node), i, j)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, Pred):
            pdef = registry[node.name]
            s = pdef.score(z, i, j, _indices(node, var_map))
            if isinstance(node.param, Hole):
                pos = sk.hole_index[node.param.id]
                out = (s - frame.v[pos]) / frame.u[pos]
            elif pdef.parameterized:
                out = POS_INF if s >= node.param else NEG_INF
            else:
                out = POS_INF if s == POS_INF else NEG_INF
        elif isinstance(node, Seq):
            out = NEG_INF
            for k in range(i, j + 1):
                out = max(out, min(rec(node.left, i, k), rec(node.right, k, j)))
        elif isinstance(node, And):
            out = min(rec(node.left, i, j), rec(node.right, i, j))
        elif isinstance(node, Or):
            out = max(rec(node.left, i, j), rec(node.right, i, j))
        elif isinstance(node, Star):
            out = POS_INF if i == j else NEG_INF
            for k in range(i + 1, j + 1):
                out = max(out, min(rec(node.child, i, k), rec(node, k, j)))
        elif isinstance(node, Neg):
            out = -rec(node.child, i, j)
        elif isinstance(node, Dashv):
            if node.lo <= j - i <= node.hi:
                out = POS_INF
                for k in range(i, j + 1):
                    out = min(out, rec(node.child, k, n))
            else:
                out = NEG_INF
        else:
            raise TypeError(f"cannot evaluate {node!r}")
        memo[key] = out
        return out

    return float(rec(q, 0, n))


# ---------------------------------------------------------------------------
# Matrix semantics


def _maxmin_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.max(np.minimum(a[:, :, None], b[None, :, :]), axis=1)


def _vec_maxmin(row: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.max(np.minimum(row[:, None], m), axis=0)


def _identity_matrix(n: int) -> np.ndarray:
    out = np.full((n + 1, n + 1), NEG_INF)
    np.fill_diagonal(out, POS_INF)
    return out


def _leaf_matrix(node: Pred, sk: Sketch, frame: DirectionFrame, z: Trajectory,
                 registry: Registry, var_map: dict[str, int]) -> np.ndarray:
    pdef = registry[node.name]
    raw = pdef.matrix(z, _indices(node, var_map))
    if isinstance(node.param, Hole):
        pos = sk.hole_index[node.param.id]
        # subnormal box widths can overflow the division; +/-inf is the
        # correct limiting boundary value there
        with np.errstate(over="ignore"):
            return (raw - frame.v[pos]) / frame.u[pos]
    if pdef.parameterized:
        return np.where(raw >= node.param, POS_INF, NEG_INF)
    return np.where(raw == POS_INF, POS_INF, NEG_INF)


def _matrix_rec(node: Query, sk: Sketch, frame: DirectionFrame, z: Trajectory,
                registry: Registry, var_map: dict[str, int]) -> np.ndarray:
    n = len(z)
    if isinstance(node, Pred):
        return _leaf_matrix(node, sk, frame, z, registry, var_map)
    if isinstance(node, Seq):
        return _maxmin_mat(
            _matrix_rec(node.left, sk, frame, z, registry, var_map),
            _matrix_rec(node.right, sk, frame, z, registry, var_map))
    if isinstance(node, (And, Or)):
        op = np.minimum if isinstance(node, And) else np.maximum
        return op(
            _matrix_rec(node.left, sk, frame, z, registry, var_map),
            _matrix_rec(node.right, sk, frame, z, registry, var_map))
    if isinstance(node, Star):
        m = _matrix_rec(node.child, sk, frame, z, registry, var_map)
        acc = _identity_matrix(n)
        cur = acc
        for _ in range(n):
            nxt = _maxmin_mat(cur, m)
            new_acc = np.maximum(acc, nxt)
            if np.array_equal(new_acc, acc) and np.array_equal(nxt, cur):
                break
            acc, cur = new_acc, nxt
        return acc
    if isinstance(node, Neg):
        c = _matrix_rec(node.child, sk, frame, z, registry, var_map)
        out = np.full_like(c, NEG_INF)
        iu = np.triu_indices(n + 1)
        out[iu] = -c[iu]
        return out
    if isinstance(node, Dashv):
        c = _matrix_rec(node.child, sk, frame, z, registry, var_map)
        w = c[:, n]
        grid = np.where(np.arange(n + 1)[None, :] >= np.arange(n + 1)[:, None],
                        np.broadcast_to(w, (n + 1, n + 1)), POS_INF)
        mins = np.minimum.accumulate(grid, axis=1)
        span = np.arange(n + 1)[None, :] - np.arange(n + 1)[:, None]
        gate = (span >= node.lo) & (span <= node.hi)
        return np.where(gate, mins, NEG_INF)
    raise TypeError(f"cannot evaluate {node!r}")


def eval_matrix(q: Query | Sketch, frame: DirectionFrame, z: Trajectory,
                registry: Registry, var_map: dict[str, int] | None = None) -> np.ndarray:
    """Quantitative values for every subinterval; entry (i, j) covers z_{i:j}.

    Always upper-triangular; sequencing is the max-min matrix product.
    """
    sk = _as_sketch(q)
    if frame.dimension != sk.dimension:
        raise ValueError(f"frame dimension {frame.dimension} != sketch dimension {sk.dimension}")
    return _matrix_rec(desugar(sk.query), sk, frame, z, registry, var_map or DEFAULT_VAR_MAP)


def _seq_spine(q: Query) -> list[Query]:
    if isinstance(q, Seq):
        return _seq_spine(q.left) + _seq_spine(q.right)
    return [q]


def eval_quant_fast(q: Query | Sketch, frame: DirectionFrame, z: Trajectory,
                    registry: Registry, var_map: dict[str, int] | None = None) -> float:
    """The (0, n) matrix entry via row-vector propagation along the spine."""
    sk = _as_sketch(q)
    if frame.dimension != sk.dimension:
        raise ValueError(f"frame dimension {frame.dimension} != sketch dimension {sk.dimension}")
    var_map = var_map or DEFAULT_VAR_MAP
    node = desugar(sk.query)
    n = len(z)
    if _contains_star(node):
        return float(_matrix_rec(node, sk, frame, z, registry, var_map)[0, n])
    row = np.full(n + 1, NEG_INF)
    row[0] = POS_INF
    for factor in _seq_spine(node):
        row = _vec_maxmin(row, _matrix_rec(factor, sk, frame, z, registry, var_map))
    return float(row[n])


def eval_sat_fast(q: Query, z: Trajectory, registry: Registry,
                  var_map: dict[str, int] | None = None) -> int:
    """Satisfaction of a complete query through the matrix engine."""
    if not is_complete(q):
        raise ValueError("satisfaction semantics requires a complete query")
    return int(eval_quant_fast(q, UNIT_FRAME_0D, z, registry, var_map) == POS_INF)


# ---------------------------------------------------------------------------
# Batched Boolean evaluation over many parameter vectors (core operators).


def eval_sat_batch(sketch: Sketch, thetas: np.ndarray, z: Trajectory,
                   registry: Registry, convention: Convention = Convention.SAT,
                   var_map: dict[str, int] | None = None) -> np.ndarray:
    """Vector of 0/1 satisfactions of Q_theta for each row of thetas."""
    var_map = var_map or DEFAULT_VAR_MAP
    thetas = np.asarray(thetas, dtype=np.float64).reshape(len(thetas), sketch.dimension)
    node = desugar(sketch.query)
    if convention is Convention.SAT_SUB:
        node = wrap_sub(node)
    n = len(z)
    k = len(thetas)

    def rec(nd: Query) -> np.ndarray:
        if isinstance(nd, Pred):
            pdef = registry[nd.name]
            raw = pdef.matrix(z, _indices(nd, var_map))
            if isinstance(nd.param, Hole):
                pos = sketch.hole_index[nd.param.id]
                return raw[None, :, :] >= thetas[:, pos, None, None]
            if pdef.parameterized:
                return np.broadcast_to(raw >= nd.param, (k, n + 1, n + 1))
            return np.broadcast_to(raw == POS_INF, (k, n + 1, n + 1))
        if isinstance(nd, Seq):
            a, b = rec(nd.left), rec(nd.right)
            return (a[:, :, :, None] & b[:, None, :, :]).any(axis=2)
        if isinstance(nd, And):
            return rec(nd.left) & rec(nd.right)
        if isinstance(nd, Or):
            return rec(nd.left) | rec(nd.right)
        if isinstance(nd, Star):
            m = rec(nd.child)
            acc = np.broadcast_to(np.eye(n + 1, dtype=bool), (k, n + 1, n + 1)).copy()
            cur = acc
            for _ in range(n):
                cur = (cur[:, :, :, None] & m[:, None, :, :]).any(axis=2)
                new_acc = acc | cur
                if np.array_equal(new_acc, acc):
                    break
                acc = new_acc
            return acc
        if isinstance(nd, Neg):
            c = rec(nd.child)
            iu = np.triu_indices(n + 1)
            out = np.zeros_like(c)
            out[:, iu[0], iu[1]] = ~c[:, iu[0], iu[1]]
            return out
        if isinstance(nd, Dashv):
            c = rec(nd.child)
            w = c[:, :, n]
            grid = np.where(np.arange(n + 1)[None, None, :] >= np.arange(n + 1)[None, :, None],
                            w[:, None, :], True)
            mins = np.logical_and.accumulate(grid, axis=2)
            span = np.arange(n + 1)[None, :] - np.arange(n + 1)[:, None]
            gate = (span >= nd.lo) & (span <= nd.hi)
            return mins & gate[None, :, :]
        raise TypeError(f"cannot evaluate {nd!r}")

    return rec(node)[:, 0, n].astype(np.int8)


# ---------------------------------------------------------------------------
# Bounded evaluation parallelism


def thread_budget() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when the environment allows it."""
    workers = thread_budget()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
