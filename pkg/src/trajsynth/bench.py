"""Wall-time comparison of quantitative vs binary-search pruning."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Sequence

from .parser import format_query
from .predicates import Registry
from .query import Sketch
from .search import LabeledExample, SearchState, synthesize_parameters
from .semantics import Convention

# Bisection pairs drift by O(eps) per split; corner comparisons allow this slack.
CLASSIFICATION_TOLERANCE_FACTOR = 8.0


@dataclass
class BenchRow:
    task: str
    sketch: str
    method: str
    wall_time: float
    steps: int
    boxes_found: int


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)
    points_checked: int = 0
    points_skipped: int = 0

    @property
    def classifications_match(self) -> bool:
        return not self.mismatches

    def total_time(self, method: str) -> float:
        return sum(r.wall_time for r in self.rows if r.method == method)

    @property
    def speedup(self) -> float:
        q = self.total_time("quant")
        return self.total_time("bsearch") / q if q > 0 else float("inf")

    def to_json_obj(self) -> dict:
        return {
            "rows": [
                {
                    "task": r.task, "sketch": r.sketch, "method": r.method,
                    "wall_time": r.wall_time, "steps": r.steps, "boxes_found": r.boxes_found,
                }
                for r in self.rows
            ],
            "classifications_match": self.classifications_match,
            "points_checked": self.points_checked,
            "points_skipped": self.points_skipped,
            "mismatches": self.mismatches,
            "speedup": self.speedup,
        }


def _classify(theta: tuple[float, ...], state: SearchState) -> str:
    for kind, boxes in (("con", state.b_con), ("inc", state.b_inc), ("unk", state.b_unk)):
        if any(b.contains(theta) for b in boxes):
            return kind
    return "out"


def _compare_states(a: SearchState, b: SearchState, eps: float) -> tuple[int, int, int]:
    """Classification agreement away from both tilings' faces.

    Probes midpoints of the grid cells induced by the union of both states'
    face coordinates, skipping cells thinner than the tolerance; returns
    (checked, skipped, mismatched).
    """
    d = a.initial.dimension
    if d == 0:
        same = (bool(a.b_con), bool(a.b_inc)) == (bool(b.b_con), bool(b.b_inc))
        return (1, 0, 0 if same else 1)
    tol = [CLASSIFICATION_TOLERANCE_FACTOR * eps * w for w in a.initial.widths()]
    axes = []
    for i in range(d):
        cuts = {a.initial.lo[i], a.initial.hi[i]}
        for state in (a, b):
            for box in list(state.b_con) + list(state.b_inc) + list(state.b_unk):
                cuts.add(box.lo[i])
                cuts.add(box.hi[i])
        cuts = sorted(cuts)
        mids = [(x + y) / 2 for x, y in zip(cuts, cuts[1:]) if y - x > 2 * tol[i]]
        axes.append(mids[:40])
    checked = skipped = mismatched = 0
    total_cells = 1
    for ax in axes:
        total_cells *= max(1, len(ax))
    for theta in itertools.product(*axes):
        if _classify(theta, a) != _classify(theta, b):
            mismatched += 1
        checked += 1
    return checked, total_cells - checked, mismatched


def run_bench(
    task: str,
    W: Sequence[LabeledExample],
    sketches: Sequence[Sketch],
    registry: Registry,
    eps: float = 1e-3,
    budget: int = 25,
    convention: Convention = Convention.SAT,
    var_map: dict[str, int] | None = None,
) -> BenchReport:
    """Run both pruning methods per sketch on identical inputs and budgets,
    recording wall times and verifying the box classifications agree."""
    report = BenchReport()
    for sketch in sketches:
        text = format_query(sketch.query)
        states: dict[str, SearchState] = {}
        for method in ("quant", "bsearch"):
            t0 = time.perf_counter()
            state = synthesize_parameters(
                W, sketch, registry, budget=budget, convention=convention,
                var_map=var_map, method=method, eps=eps)
            elapsed = time.perf_counter() - t0
            states[method] = state
            report.rows.append(BenchRow(task, text, method, elapsed, state.steps, len(state.b_con)))
        q, b = states["quant"], states["bsearch"]
        checked, skipped, mismatched = _compare_states(q, b, eps)
        report.points_checked += checked
        report.points_skipped += skipped
        if mismatched:
            report.mismatches.append(f"{text}: {mismatched} probe point(s) classified differently")
    return report
