"""Query ASTs: predicate leaves, holes, composition operators, and rewrites."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Union

from .predicates import Registry


class HoleError(ValueError):
    """A fill targeted a missing hole or the wrong kind of hole."""


@dataclass(frozen=True)
class Hole:
    """A real-valued parameter hole, identified within one AST."""

    id: int


@dataclass(frozen=True)
class Pred:
    """Predicate leaf. param is None (unparameterized), a float, or a Hole."""

    name: str
    args: tuple[str, ...] = ()
    param: Union[float, Hole, None] = None


@dataclass(frozen=True)
class PredHole:
    id: int


@dataclass(frozen=True)
class Seq:
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class And:
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class Or:
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class Star:
    child: "Query"


@dataclass(frozen=True)
class Neg:
    child: "Query"


@dataclass(frozen=True)
class Iterate:
    child: "Query"
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("iteration count must be >= 1")


@dataclass(frozen=True)
class Dashv:
    """Window-suffix operator supporting the bounded 'until' translation."""

    child: "Query"
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise ValueError("window bounds must satisfy 0 <= lo <= hi")


Query = Union[Pred, PredHole, Seq, And, Or, Star, Neg, Iterate, Dashv]

_BINARY = (Seq, And, Or)
_UNARY = (Star, Neg, Iterate, Dashv)


def children(q: Query) -> tuple[Query, ...]:
    if isinstance(q, _BINARY):
        return (q.left, q.right)
    if isinstance(q, _UNARY):
        return (q.child,)
    return ()


def walk(q: Query) -> Iterator[Query]:
    """Pre-order traversal (left to right)."""
    yield q
    for c in children(q):
        yield from walk(c)


def holes(q: Query) -> tuple[list[int], list[int]]:
    """(predicate-hole ids, parameter-hole ids) in AST order."""
    pred_ids: list[int] = []
    param_ids: list[int] = []
    for node in walk(q):
        if isinstance(node, PredHole):
            pred_ids.append(node.id)
        elif isinstance(node, Pred) and isinstance(node.param, Hole):
            param_ids.append(node.param.id)
    return pred_ids, param_ids


def is_complete(q: Query) -> bool:
    p, t = holes(q)
    return not p and not t


def is_sketch(q: Query) -> bool:
    return not holes(q)[0]


def max_hole_id(q: Query) -> int:
    p, t = holes(q)
    return max(p + t, default=0)


def _rebuild(q: Query, new_children: tuple[Query, ...]) -> Query:
    if isinstance(q, Seq):
        return Seq(*new_children)
    if isinstance(q, And):
        return And(*new_children)
    if isinstance(q, Or):
        return Or(*new_children)
    if isinstance(q, Star):
        return Star(new_children[0])
    if isinstance(q, Neg):
        return Neg(new_children[0])
    if isinstance(q, Iterate):
        return Iterate(new_children[0], q.count)
    if isinstance(q, Dashv):
        return Dashv(new_children[0], q.lo, q.hi)
    return q


def _renumber_fresh(template: Query, counter: itertools.count) -> Query:
    if isinstance(template, PredHole):
        return PredHole(next(counter))
    if isinstance(template, Pred) and isinstance(template.param, Hole):
        return Pred(template.name, template.args, Hole(next(counter)))
    kids = children(template)
    if not kids:
        return template
    return _rebuild(template, tuple(_renumber_fresh(c, counter) for c in kids))


_NODE_TYPES = (Pred, PredHole, Seq, And, Or, Star, Neg, Iterate, Dashv)


def fill(q: Query, hole_id: int, value: Union[float, int, Query]) -> Query:
    """Replace one hole, leaving q untouched; new sub-holes get fresh ids."""
    pred_ids, param_ids = holes(q)
    if hole_id in param_ids:
        if isinstance(value, _NODE_TYPES) or not isinstance(value, (int, float)):
            raise HoleError(f"hole {hole_id} is a parameter hole; fill it with a real")
        theta = float(value)

        def sub_param(node: Query) -> Query:
            if isinstance(node, Pred) and isinstance(node.param, Hole) and node.param.id == hole_id:
                return Pred(node.name, node.args, theta)
            kids = children(node)
            return _rebuild(node, tuple(sub_param(c) for c in kids)) if kids else node

        return sub_param(q)
    if hole_id in pred_ids:
        if not isinstance(value, _NODE_TYPES):
            raise HoleError(f"hole {hole_id} is a predicate hole; fill it with a production")
        counter = itertools.count(max_hole_id(q) + 1)
        replacement = _renumber_fresh(value, counter)

        def sub_pred(node: Query) -> Query:
            if isinstance(node, PredHole) and node.id == hole_id:
                return replacement
            kids = children(node)
            return _rebuild(node, tuple(sub_pred(c) for c in kids)) if kids else node

        return sub_pred(q)
    raise HoleError(f"no hole with id {hole_id}")


def desugar(q: Query) -> Query:
    """Rewrite bounded iteration into repeated sequencing."""
    kids = children(q)
    if kids:
        q = _rebuild(q, tuple(desugar(c) for c in kids))
    if isinstance(q, Iterate):
        out = q.child
        for _ in range(q.count - 1):
            out = Seq(out, q.child)
        return out
    return q


def renumber(q: Query) -> Query:
    """Assign hole ids 1, 2, ... in AST order."""
    counter = itertools.count(1)
    return _renumber_fresh(q, counter)


class Sketch:
    """A query whose only holes are parameter holes, with a fixed hole order.

    hole_order lists the parameter-hole ids left to right; it defines the
    coordinate order of parameter vectors. A repeated id (as produced by
    desugaring iteration) denotes one shared parameter.
    """

    __slots__ = ("query", "hole_order", "hole_index")

    def __init__(self, query: Query):
        pred_ids, param_ids = holes(query)
        if pred_ids:
            raise ValueError("a sketch may not contain predicate holes")
        _check_neg_subtrees(query)
        self.query = query
        order: list[int] = []
        for h in param_ids:
            if h not in order:
                order.append(h)
        self.hole_order = tuple(order)
        self.hole_index = {h: i for i, h in enumerate(order)}

    @property
    def dimension(self) -> int:
        return len(self.hole_order)

    def __repr__(self) -> str:
        return f"Sketch(d={self.dimension})"


def _check_neg_subtrees(q: Query) -> None:
    for node in walk(q):
        if isinstance(node, Neg):
            _, inner = holes(node.child)
            if inner:
                raise ValueError("negation over parameter holes is not supported")


def substitute(sketch: Sketch | Query, theta) -> Query:
    """Fill every parameter hole per the sketch's hole order."""
    if not isinstance(sketch, Sketch):
        sketch = Sketch(sketch)
    theta = tuple(float(t) for t in theta)
    if len(theta) != sketch.dimension:
        raise ValueError(f"expected {sketch.dimension} parameters, got {len(theta)}")
    values = dict(zip(sketch.hole_order, theta))

    def sub(node: Query) -> Query:
        if isinstance(node, Pred) and isinstance(node.param, Hole):
            return Pred(node.name, node.args, values[node.param.id])
        kids = children(node)
        return _rebuild(node, tuple(sub(c) for c in kids)) if kids else node

    return sub(sketch.query)


def validate_query(q: Query, registry: Registry) -> None:
    """Structural checks against a registry: names, arities, parameter kinds.

    A hole id may recur (one shared parameter) but cannot name both a
    predicate hole and a parameter hole.
    """
    pred_ids, param_ids = holes(q)
    if set(pred_ids) & set(param_ids):
        raise ValueError("a hole id cannot be both a predicate and a parameter hole")
    if len(set(pred_ids)) != len(pred_ids):
        raise ValueError("predicate hole ids must be unique")
    for node in walk(q):
        if isinstance(node, Pred):
            pdef = registry[node.name]
            if len(node.args) != pdef.arity:
                raise ValueError(
                    f"{node.name} expects {pdef.arity} argument(s), got {len(node.args)}")
            if pdef.parameterized and node.param is None:
                raise ValueError(f"{node.name} requires a parameter")
            if not pdef.parameterized and node.param is not None:
                raise ValueError(f"{node.name} does not take a parameter")


# ---------------------------------------------------------------------------
# STL translation


@dataclass(frozen=True)
class StlAtom:
    pred: Pred


@dataclass(frozen=True)
class StlNot:
    child: "StlFormula"


@dataclass(frozen=True)
class StlAnd:
    left: "StlFormula"
    right: "StlFormula"


@dataclass(frozen=True)
class StlUntil:
    left: "StlFormula"
    right: "StlFormula"
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("until window must satisfy lo <= hi")


StlFormula = Union[StlAtom, StlNot, StlAnd, StlUntil]


def translate_stl(f: StlFormula) -> Query:
    """Structural translation; bounded until becomes the window-suffix operator
    sequenced with the right operand. Until windows are in frames; see
    seconds_to_frames for time-based bounds."""
    if isinstance(f, StlAtom):
        return f.pred
    if isinstance(f, StlNot):
        return Neg(translate_stl(f.child))
    if isinstance(f, StlAnd):
        return And(translate_stl(f.left), translate_stl(f.right))
    if isinstance(f, StlUntil):
        return Seq(Dashv(translate_stl(f.left), f.lo, f.hi), translate_stl(f.right))
    raise TypeError(f"not an STL formula: {f!r}")


def seconds_to_frames(seconds: float, frame_rate: float) -> int:
    """Window bound in seconds -> whole frames at the given rate."""
    return int(round(seconds * frame_rate))
