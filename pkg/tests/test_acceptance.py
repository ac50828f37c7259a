"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import json
import time
from collections import deque

import numpy as np
import pytest

import trajsynth as ts
from trajsynth.bench import run_bench
from trajsynth.cli import default_bench_sketches
from trajsynth.predicates import NEG_INF, POS_INF, DataBounds
from trajsynth.search import Box, SearchState, state_to_json_obj, w_fingerprint
from trajsynth.semantics import Convention, eval_sat_batch, unit_frame
from trajsynth.trajectory import dumps_dataset, dumps_dataset_csv, loads_dataset_csv
from trajsynth.enumeration import result_to_json_obj

from conftest import (
    random_frame, random_sketch, random_trajectory, velocity_trajectory,
)

ACCEPT_REGISTRY = ts.build_registry(bounds=DataBounds(
    x_min=-8.0, x_max=8.0, y_min=-8.0, y_max=8.0,
    max_speed=3.0, max_accel=6.0, max_duration=10.0))


def report(name: str, elapsed: float, limit: float, detail: str = ""):
    status = "PASS" if elapsed <= limit else "SLOW"
    extra = f" ({detail})" if detail else ""
    print(f"{status}: {name} in {elapsed:.1f}s (limit {limit:.0f}s){extra}")
    assert elapsed <= limit, f"{name} exceeded its runtime budget"


def test_monotonicity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    violations = 0
    for _ in range(1000):
        sk = random_sketch(rng)
        d = sk.dimension
        z = random_trajectory(rng, max_len=20)
        theta = rng.uniform(-6.0, 6.0, d)
        theta2 = theta + rng.uniform(0.0, 3.0, d)
        low = ts.eval_sat_fast(ts.substitute(sk, theta), z, ACCEPT_REGISTRY)
        high = ts.eval_sat_fast(ts.substitute(sk, theta2), z, ACCEPT_REGISTRY)
        if low < high:
            violations += 1
    assert violations == 0
    report("monotonicity suite (1000 triples, zero violations)",
           time.perf_counter() - t0, 10.0)


def test_boundary_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    eps = 1e-9
    checked = 0
    while checked < 500:
        sk = random_sketch(rng)
        d = sk.dimension
        if d == 0:
            continue
        checked += 1
        z = random_trajectory(rng, max_len=10)
        fr = random_frame(rng, d)
        t_star = ts.eval_quant(sk, fr, z, ACCEPT_REGISTRY)

        def sat_at(t):
            theta = tuple(v + t * u for v, u in zip(fr.v, fr.u))
            return ts.eval_sat_fast(ts.substitute(sk, theta), z, ACCEPT_REGISTRY)

        # bracket wide enough to contain every finite leaf boundary
        score_mag = max(max(abs(ACCEPT_REGISTRY[nm].score_range[0]),
                            abs(ACCEPT_REGISTRY[nm].score_range[1]))
                        for nm in ACCEPT_REGISTRY.names())
        bound = (score_mag + max(abs(v) for v in fr.v)) / min(fr.u) + 1.0
        if not sat_at(-bound):
            assert t_star == NEG_INF
            continue
        if sat_at(bound):
            assert t_star == POS_INF
            continue
        lo, hi = -bound, bound
        for _ in range(40):
            mid = (lo + hi) / 2.0
            if sat_at(mid):
                lo = mid
            else:
                hi = mid
        assert abs(t_star - lo) <= 1e-6 * max(1.0, abs(t_star)), (t_star, lo)
        assert sat_at(t_star - eps) == 1
        assert sat_at(t_star + eps) == 0
    report("boundary correctness (500 cases vs 40-step bisection, rel 1e-6, ±1e-9 flip)",
           time.perf_counter() - t0, 30.0)


def test_matrix_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    for _ in range(300):
        sk = random_sketch(rng, star_p=0.1)
        fr = random_frame(rng, sk.dimension)
        z = random_trajectory(rng, max_len=6)
        M = ts.eval_matrix(sk, fr, z, ACCEPT_REGISTRY)
        n = len(z)
        for i in range(n + 1):
            for j in range(n + 1):
                if i > j:
                    assert M[i, j] == NEG_INF
                else:
                    ref = ts.eval_quant(sk, fr, z.subtrajectory(i, j), ACCEPT_REGISTRY)
                    assert M[i, j] == ref, (i, j, M[i, j], ref)
    report("matrix soundness (300 cases, exact equality, upper-triangular)",
           time.perf_counter() - t0, 30.0)


def test_golden_instance():
    t0 = time.perf_counter()
    z0 = velocity_trajectory("z0", [0.9, 0.6])
    z1 = velocity_trajectory("z1", [0.5, 0.8])
    reg = ts.build_registry(bounds=DataBounds(max_speed=1.0))
    velgt = reg["VelGt"]
    assert velgt.score(z0, 0, 1, (0,)) == 0.9
    assert velgt.score(z0, 1, 2, (0,)) == 0.6
    assert velgt.score(z1, 0, 1, (0,)) == 0.5
    assert velgt.score(z1, 1, 2, (0,)) == 0.8
    assert velgt.score(z0, 0, 2, (0,)) == NEG_INF
    assert velgt.score(z0, 1, 1, (0,)) == NEG_INF

    q = ts.parse_query("VelGt[0.5](A) ; VelGt[0.6](A)")
    assert ts.eval_sat(q, z1, reg) == 1

    sk = ts.Sketch(ts.parse_query("VelGt[?](A) ; VelGt[?](A)"))
    W = [(z0, 0), (z1, 1)]
    unit_box = Box((0.0, 0.0), (1.0, 1.0))
    pair = ts.compute_pruning_pair(W, sk, unit_box, reg)
    assert pair.minus == ts.Point((0.6, 0.6))
    assert pair.plus == ts.Point((0.5, 0.5))
    assert not pair.consistent

    state = SearchState(sk, unit_box, b_unk=deque([unit_box]), w_token=w_fingerprint(W))
    state = ts.synthesize_parameters(W, sk, reg, budget=25, resume=state)
    assert state.steps <= 25 and state.b_con
    found = state.b_con[0]
    assert found.hi[0] <= 0.5 and found.lo[1] >= 0.6 and found.hi[1] <= 0.8
    mid_query = ts.substitute(sk, ts.midpoint(found))
    assert all(ts.eval_sat(mid_query, z, reg) == y for z, y in W)
    report("golden two-trajectory instance (scores, pair, search, midpoint)",
           time.perf_counter() - t0, 1.0)


def _two_hole_sketch(rng):
    one_hole = ("VelGt[?](A)", "MinLength[?]", "XPosGt[?](A)", "DispLt[?](A)")
    a = ts.parse_query(str(rng.choice(list(one_hole))))
    b = ts.parse_query(str(rng.choice(list(one_hole))))
    make = {"seq": ts.Seq, "and": ts.And, "or": ts.Or}[str(rng.choice(["seq", "and", "or"]))]
    q = make(a, b)
    if rng.random() < 0.3:
        q = ts.Seq(q, ts.Pred("Any"))
    return ts.Sketch(ts.query.renumber(q))


def test_search_soundness_and_completeness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    for _ in range(50):
        sk = _two_hole_sketch(rng)
        W = [(random_trajectory(rng, max_len=6), int(rng.integers(0, 2)))
             for _ in range(4)]
        state = None
        frontier_added: dict[int, float] = {}

        def observer(box, pair, split):
            if split is None:
                return
            routed_unk = (split.incomp + split.extra) if (pair and pair.consistent) \
                else split.incomp
            for child in routed_unk:
                frontier_added[child.depth] = frontier_added.get(child.depth, 0.0) + child.volume()

        for _ in range(40):
            state = ts.synthesize_parameters(W, sk, ACCEPT_REGISTRY, budget=1,
                                             resume=state, on_step=observer)
            if state.exhausted():
                break

        # soundness: 100 uniform samples per classified box (boxes thinner
        # than float resolution have no interior to probe: exact-equality
        # boundary points are the documented measure-zero caveat)
        for boxes, want in ((state.b_con, 1), (state.b_inc, 0)):
            for b in boxes:
                if any(hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi)))
                       for lo, hi in zip(b.lo, b.hi)):
                    continue
                r = rng.random((100, 2))
                thetas = np.array(b.lo) + (1.0 - r) * (np.array(b.hi) - np.array(b.lo))
                votes = np.ones(100, dtype=bool)
                for z, y in W:
                    s = eval_sat_batch(sk, thetas, z, ACCEPT_REGISTRY)
                    votes &= (s == y)
                if want == 1:
                    assert votes.all(), "sample in a consistent box misclassified"
                else:
                    assert not votes.any(), "sample in an inconsistent box was consistent"

        # completeness rate: frontier volume at each fully processed depth
        v0 = state.initial.volume()
        for d in sorted(frontier_added):
            if any(b.depth <= d for b in state.b_unk) and not state.exhausted():
                break
            assert frontier_added[d] <= (8.0 / 9.0) ** d * v0 * (1 + 1e-9), (
                d, frontier_added[d], (8.0 / 9.0) ** d * v0)
    report("search soundness + completeness (50 instances, 100 samples/box, (8/9)^k rate)",
           time.perf_counter() - t0, 120.0)


def test_end_to_end_active_learning(scenario_bundle):
    t0 = time.perf_counter()
    finals = {}
    at_10 = {}
    for name in ("lane-turn", "speed-contrast", "maritime-loiter"):
        bundle = scenario_bundle[name]
        ds = bundle["dataset"]
        assert len(ds.trajectories) <= 200
        assert max(len(z) for z in ds.trajectories) <= 50
        train, test = ts.split_dataset(ds)
        oracle = ts.GroundTruthOracle(bundle["reference"], bundle["registry"],
                                      bundle["convention"])
        res = ts.run_loop(train, test, oracle, bundle["config"],
                          ts.LoopConfig(initial_positives=2, initial_negatives=10,
                                        steps=25, seed=3),
                          convention=bundle["convention"])
        f1s = [r["median_f1"] for r in res.transcript]
        finals[name] = f1s[-1]
        at_10[name] = f1s[min(10, len(f1s) - 1)]
    assert all(v == 1.0 for v in finals.values()), finals
    assert sum(1 for v in at_10.values() if v is not None and v >= 0.9) >= 2, at_10
    report("end-to-end active learning (three tasks, final median F1 = 1.0)",
           time.perf_counter() - t0, 300.0,
           detail=f"finals={finals}")


def test_pruning_speedup(scenario_bundle):
    t0 = time.perf_counter()
    quant_total = bsearch_total = 0.0
    all_match = True
    for name in ("lane-turn", "speed-contrast", "maritime-loiter"):
        bundle = scenario_bundle[name]
        sketches = [ts.Sketch(ts.parse_query(t)) for t in default_bench_sketches(name)]
        rep = run_bench(name, bundle["dataset"].labeled_pairs(), sketches,
                        bundle["registry"], eps=1e-3, budget=25,
                        convention=bundle["convention"])
        all_match = all_match and rep.classifications_match
        quant_total += rep.total_time("quant")
        bsearch_total += rep.total_time("bsearch")
    assert all_match, "box classifications diverged between methods"
    speedup = bsearch_total / quant_total
    assert speedup >= 2.0, f"speedup {speedup:.2f}x below the 2x bar"
    report("pruning speedup (quant vs binary search, identical classifications)",
           time.perf_counter() - t0, 300.0, detail=f"speedup={speedup:.1f}x")


def test_round_trips_and_determinism(tmp_path, scenario_bundle):
    t0 = time.perf_counter()
    ds = ts.generate_synthetic(ts.SyntheticSpec("speed-contrast", positives=6,
                                                negatives=12, seed=21))
    # dataset JSON and CSV are byte-stable through load/save
    js = dumps_dataset(ds)
    assert dumps_dataset(ts.trajectory.dataset_from_json_obj(json.loads(js))) == js
    cs = dumps_dataset_csv(ds)
    assert dumps_dataset_csv(loads_dataset_csv(cs)) == cs

    # search state and synthesis result serializations are byte-stable
    reg = scenario_bundle["speed-contrast"]["registry"]
    cfg = scenario_bundle["speed-contrast"]["config"]
    conv = scenario_bundle["speed-contrast"]["convention"]
    W = scenario_bundle["speed-contrast"]["dataset"].labeled_pairs()[:12]
    result = ts.synthesize_query(W, cfg, convention=conv)
    blob = json.dumps(result_to_json_obj(result), sort_keys=True)
    from trajsynth.enumeration import result_from_json_obj
    assert json.dumps(result_to_json_obj(result_from_json_obj(json.loads(blob))),
                      sort_keys=True) == blob

    # identical seeds produce identical transcripts
    big = scenario_bundle["speed-contrast"]["dataset"]
    train, test = ts.split_dataset(big)

    def transcript():
        oracle = ts.FixedLabelsOracle(big.labels)
        return ts.run_loop(train, test, oracle, cfg, ts.LoopConfig(seed=8, steps=6),
                           convention=conv).transcript

    assert transcript() == transcript()
    report("format round trips and transcript determinism",
           time.perf_counter() - t0, 10.0)
