"""Concrete text syntax for queries.

Grammar (loosest to tightest): sequencing ';', then '&'/'|' (equal
precedence, left-associative, mixing requires parentheses), then the unary
operators. Parameterized predicates write their parameter in brackets,
either a float or '?' for a hole; '??' alone is a predicate hole.
"""

from __future__ import annotations

import itertools
import re

from .query import (
    And, Dashv, Hole, Iterate, Neg, Or, Pred, PredHole, Query, Seq, Star, children,
)

DASHV_OPEN = "^{⊣["  # ^{⊣[


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<qq>\?\?)
      | (?P<number>-?(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<dashv>\^\{⊣\[)
      | (?P<sym>[;&|!^*()\[\],?{}])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.holes = itertools.count(1)

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value:
            raise QuerySyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def accept(self, value: str) -> bool:
        if self.peek()[1] == value:
            self.i += 1
            return True
        return False

    def parse(self) -> Query:
        q = self.query()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise QuerySyntaxError(f"unexpected trailing input {text!r}", pos)
        return q

    def query(self) -> Query:
        q = self.term()
        while self.accept(";"):
            q = Seq(q, self.term())
        return q

    def term(self) -> Query:
        q = self.factor()
        op = None
        while True:
            kind, text, pos = self.peek()
            if text not in ("&", "|"):
                return q
            if op is not None and text != op:
                raise QuerySyntaxError(
                    "mixing '&' and '|' requires parentheses", pos)
            op = text
            self.next()
            rhs = self.factor()
            q = And(q, rhs) if op == "&" else Or(q, rhs)

    def factor(self) -> Query:
        if self.accept("!"):
            return Neg(self.factor())
        q = self.atom()
        kind, text, pos = self.peek()
        if kind == "dashv":
            self.next()
            lo = self.integer()
            self.expect(",")
            hi = self.integer()
            self.expect("]")
            self.expect("}")
            return Dashv(q, lo, hi)
        if text == "^":
            self.next()
            return Iterate(q, self.integer())
        if text == "*":
            self.next()
            return Star(q)
        return q

    def integer(self) -> int:
        kind, text, pos = self.next()
        if kind != "number" or not re.fullmatch(r"-?\d+", text):
            raise QuerySyntaxError(f"expected an integer, found {text!r}", pos)
        return int(text)

    def atom(self) -> Query:
        kind, text, pos = self.next()
        if kind == "qq":
            return PredHole(next(self.holes))
        if text == "(":
            q = self.query()
            self.expect(")")
            return q
        if kind != "name":
            raise QuerySyntaxError(f"expected a predicate name, found {text or 'end of input'!r}", pos)
        name = text
        param = None
        if self.accept("["):
            k, t, p = self.next()
            if t == "?":
                param = Hole(next(self.holes))
            elif k == "number":
                param = float(t)
            else:
                raise QuerySyntaxError(f"expected a float or '?', found {t!r}", p)
            self.expect("]")
        args: tuple[str, ...] = ()
        if self.accept("("):
            names = [self.var_name()]
            while self.accept(","):
                names.append(self.var_name())
            self.expect(")")
            args = tuple(names)
        return Pred(name, args, param)

    def var_name(self) -> str:
        kind, text, pos = self.next()
        if kind != "name":
            raise QuerySyntaxError(f"expected a variable name, found {text!r}", pos)
        return text


def parse_query(text: str) -> Query:
    """Parse the concrete syntax; hole ids are assigned left to right from 1."""
    return _Parser(text).parse()


def _fmt_param(param) -> str:
    if param is None:
        return ""
    if isinstance(param, Hole):
        return "[?]"
    return f"[{param!r}]"


# precedence levels: 0 = sequencing, 1 = conjunction/disjunction,
# 2 = unary operators, 3 = atom
def _fmt(q: Query, level: int) -> str:
    if isinstance(q, Pred):
        args = f"({','.join(q.args)})" if q.args else ""
        return f"{q.name}{_fmt_param(q.param)}{args}"
    if isinstance(q, PredHole):
        return "??"
    if isinstance(q, Seq):
        text, own = f"{_fmt(q.left, 0)} ; {_fmt(q.right, 1)}", 0
    elif isinstance(q, (And, Or)):
        op = " & " if isinstance(q, And) else " | "
        left = _fmt(q.left, 1) if isinstance(q.left, type(q)) else _fmt(q.left, 2)
        text, own = f"{left}{op}{_fmt(q.right, 2)}", 1
    elif isinstance(q, Neg):
        text, own = f"!{_fmt(q.child, 2)}", 2
    elif isinstance(q, Iterate):
        text, own = f"{_fmt(q.child, 3)}^{q.count}", 2
    elif isinstance(q, Star):
        text, own = f"{_fmt(q.child, 3)}*", 2
    elif isinstance(q, Dashv):
        text, own = f"{_fmt(q.child, 3)}{DASHV_OPEN}{q.lo},{q.hi}]}}", 2
    else:
        raise TypeError(f"not a query node: {q!r}")
    return f"({text})" if own < level else text


def format_query(q: Query) -> str:
    """Canonical text form; parse_query(format_query(q)) rebuilds q up to
    left-to-right hole renumbering."""
    return _fmt(q, 0)
