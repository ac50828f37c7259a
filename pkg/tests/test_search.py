"""Boxes, pruning pairs, splitting, and the work-list search."""

import json
from collections import deque

import numpy as np
import pytest

import trajsynth as ts
from trajsynth.search import (
    BOTTOM, TOP, Box, Point, PruningPair, SearchState, box_frame, corner_point,
    state_from_json_obj, state_to_json_obj, w_fingerprint,
)
from trajsynth.semantics import Convention

from conftest import random_frame, random_sketch, random_trajectory, velocity_trajectory


@pytest.fixture
def paper_instance(z0, z1, unit_registry):
    sk = ts.Sketch(ts.parse_query("VelGt[?](A) ; VelGt[?](A)"))
    W = [(z0, 0), (z1, 1)]
    box = Box((0.0, 0.0), (1.0, 1.0))
    return sk, W, box, unit_registry


def test_box_validation_and_membership():
    b = Box((0.0,), (1.0,))
    assert b.contains((1.0,)) and b.contains((0.5,))
    assert not b.contains((0.0,))  # half-open below
    with pytest.raises(ValueError):
        Box((1.0,), (1.0,))


def test_midpoint():
    assert ts.midpoint(Box((0.0, 0.0), (1.0, 1.0))) == (0.5, 0.5)
    assert ts.midpoint(Box((0.4, 0.6), (0.5, 0.8))) == (0.45, 0.7)


def test_initial_box(unit_registry):
    sk = ts.Sketch(ts.parse_query("VelGt[?](A) ; VelGt[?](A)"))
    b = ts.initial_box(sk, unit_registry)
    assert b.hi == (1.0, 1.0)
    assert all(lo < 0.0 and lo > -1e-300 for lo in b.lo)
    assert b.contains((0.0, 0.0))  # widened to contain the range bottom
    mixed = ts.Sketch(ts.parse_query("DispLt[?](A) & MinLength[?]"))
    mb = ts.initial_box(mixed, unit_registry)
    assert mb.hi[0] == unit_registry["DispLt"].score_range[1]
    assert mb.hi[1] == unit_registry["MinLength"].score_range[1]


def test_compute_pruning_pair_paper(paper_instance):
    sk, W, box, reg = paper_instance
    pair = ts.compute_pruning_pair(W, sk, box, reg)
    assert pair.minus == Point((0.6, 0.6))
    assert pair.plus == Point((0.5, 0.5))
    assert not pair.consistent


def test_pruning_pair_empty_sides(paper_instance, z1):
    sk, W, box, reg = paper_instance
    only_neg = ts.compute_pruning_pair([(z1, 0)], sk, box, reg)
    assert only_neg.plus is TOP
    only_pos = ts.compute_pruning_pair([(z1, 1)], sk, box, reg)
    assert only_pos.minus is BOTTOM
    assert only_pos.consistent
    # single positive with boundary at 0.5 and no negatives
    assert only_pos.plus == Point((0.5, 0.5))


def test_binary_search_pair_matches_quant(paper_instance):
    sk, W, box, reg = paper_instance
    quant = ts.compute_pruning_pair(W, sk, box, reg)
    bis = ts.binary_search_pair(W, sk, box, reg, eps=1e-6)
    for a, b in ((quant.minus, bis.minus), (quant.plus, bis.plus)):
        for x, y in zip(corner_point(a, box), corner_point(b, box)):
            assert abs(x - y) <= 2e-6
    assert quant.consistent == bis.consistent


def test_binary_search_constant_true(z1, unit_registry):
    # z1 lasts 2 s but MinLength's declared range tops out at 1 s, so the
    # query holds across the whole box: the positive boundary clamps to hi
    sk = ts.Sketch(ts.parse_query("MinLength[?]"))
    box = ts.initial_box(sk, unit_registry)
    pair = ts.binary_search_pair([(z1, 1)], sk, box, unit_registry, eps=1e-6)
    assert pair.plus == Point(box.hi)
    quant = ts.compute_pruning_pair([(z1, 1)], sk, box, unit_registry)
    assert quant.plus == Point(box.hi)


def test_split_box_interior_pair():
    box = Box((0.0, 0.0), (1.0, 1.0))
    sp = ts.split_box(box, Point((0.2, 0.3)), Point((0.6, 0.7)))
    assert sp.center == Box((0.2, 0.3), (0.6, 0.7), 1)
    assert sp.lower == Box((0.0, 0.0), (0.2, 0.3), 1)
    assert sp.upper == Box((0.6, 0.7), (1.0, 1.0), 1)
    assert len(sp.incomp) == 2 and len(sp.extra) == 4
    vols = sum(b.volume() for b in sp.all_boxes())
    assert abs(vols - box.volume()) < 1e-12


def test_split_box_coincident_points():
    box = Box((0.0, 0.0), (1.0, 1.0))
    sp = ts.split_box(box, Point((0.4, 0.4)), Point((0.4, 0.4)))
    assert sp.center is None
    assert abs(sum(b.volume() for b in sp.all_boxes()) - 1.0) < 1e-12


def test_split_box_one_dimension():
    box = Box((0.0,), (1.0,))
    sp = ts.split_box(box, Point((0.3,)), Point((0.8,)))
    assert sp.incomp == [] and sp.extra == []
    assert sp.center == Box((0.3,), (0.8,), 1)


def test_synthesize_paper_instance(paper_instance):
    sk, W, box, reg = paper_instance
    state = SearchState(sk, box, b_unk=deque([box]), w_token=w_fingerprint(W))
    state = ts.synthesize_parameters(W, sk, reg, budget=25, resume=state)
    assert state.b_con, "expected a consistent box within 25 steps"
    found = state.b_con[0]
    assert found.hi[0] <= 0.5
    assert found.lo[1] >= 0.6 and found.hi[1] <= 0.8
    mid = ts.midpoint(found)
    q = ts.substitute(sk, mid)
    assert all(ts.eval_sat(q, z, reg) == y for z, y in W)


def test_synthesize_empty_w(paper_instance):
    sk, _, _, reg = paper_instance
    state = ts.synthesize_parameters([], sk, reg, budget=5)
    assert len(state.b_con) == 1 and state.steps == 1
    assert state.b_con[0].lo == state.initial.lo and state.b_con[0].hi == state.initial.hi


def test_synthesize_contradictory_w(z1, unit_registry):
    sk = ts.Sketch(ts.parse_query("VelGt[?](A) ; VelGt[?](A)"))
    W = [(z1, 0), (z1, 1)]
    state = None
    for _ in range(6):
        state = ts.synthesize_parameters(W, sk, unit_registry, budget=25, resume=state)
        if state.exhausted():
            break
    assert not state.b_con


def test_zero_dimension_sketch(z1, unit_registry):
    sk = ts.Sketch(ts.parse_query("Any"))
    state = ts.synthesize_parameters([(z1, 1)], sk, unit_registry, budget=5)
    assert state.b_con and not state.b_inc
    state2 = ts.synthesize_parameters([(z1, 0)], sk, unit_registry, budget=5)
    assert state2.b_inc and not state2.b_con


def test_resume_safety(paper_instance):
    sk, W, box, reg = paper_instance

    def fresh():
        return SearchState(sk, box, b_unk=deque([box]), w_token=w_fingerprint(W))

    # b1 + b2 in one call vs two calls with unchanged W
    one = ts.synthesize_parameters(W, sk, reg, budget=1, resume=fresh())
    one = ts.synthesize_parameters(W, sk, reg, budget=1, resume=one)
    two = ts.synthesize_parameters(W, sk, reg, budget=2, resume=fresh())
    assert state_to_json_obj(one) == state_to_json_obj(two)


def test_resume_requeues_consistent_on_new_w(paper_instance, z0, z1):
    sk, W, box, reg = paper_instance
    state = SearchState(sk, box, b_unk=deque([box]), w_token=w_fingerprint(W))
    state = ts.synthesize_parameters(W, sk, reg, budget=25, resume=state)
    assert state.b_con
    # an additional example that keeps the found box consistent
    z2 = velocity_trajectory("z2", [0.2, 0.9])
    W2 = W + [(z2, 1)]
    state = ts.synthesize_parameters(W2, sk, reg, budget=25, resume=state)
    assert state.b_con
    mid = ts.midpoint(state.b_con[0])
    q = ts.substitute(sk, mid)
    assert all(ts.eval_sat(q, z, reg) == y for z, y in W2)


def test_fifo_discipline_and_partition(paper_instance):
    sk, W, box, reg = paper_instance
    pops = []
    queue_snapshots = []

    state = SearchState(sk, box, b_unk=deque([box]), w_token=w_fingerprint(W))
    for _ in range(12):
        if state.exhausted():
            break
        queue_snapshots.append(list(state.b_unk))
        state = ts.synthesize_parameters(
            W, sk, reg, budget=1, resume=state,
            on_step=lambda b, pair, split: pops.append(b))
        # pop order equals insertion order
        assert pops[-1] == queue_snapshots[-1][0]
        # partition: volumes of con + inc + unk tile the initial box
        total = sum(b.volume() for b in state.b_con)
        total += sum(b.volume() for b in state.b_inc)
        total += sum(b.volume() for b in state.b_unk)
        assert abs(total - box.volume()) <= 1e-9 * box.volume()


def test_search_soundness_random_sampling(wide_registry):
    rng = np.random.default_rng(12)
    leaves = ("VelGt[?](A)", "MinLength[?]", "XPosGt[?](A)", "Any")
    for _ in range(6):
        sk = random_sketch(rng, leaves=leaves)
        if sk.dimension == 0:
            continue
        W = [(random_trajectory(rng, max_len=6), int(rng.integers(0, 2))) for _ in range(4)]
        state = ts.synthesize_parameters(W, sk, wide_registry, budget=15)
        for boxes, want in ((state.b_con, True), (state.b_inc, False)):
            for b in boxes:
                for _ in range(20):
                    t = tuple(lo + (1 - rng.random()) * (hi - lo)
                              for lo, hi in zip(b.lo, b.hi))
                    q = ts.substitute(sk, t)
                    ok = all(ts.eval_sat(q, z, wide_registry) == y for z, y in W)
                    assert ok == want


def test_state_serialization_round_trip(paper_instance):
    sk, W, box, reg = paper_instance
    state = SearchState(sk, box, b_unk=deque([box]), w_token=w_fingerprint(W))
    state = ts.synthesize_parameters(W, sk, reg, budget=5, resume=state)
    obj = state_to_json_obj(state)
    text = json.dumps(obj, sort_keys=True)
    again = state_from_json_obj(json.loads(text))
    assert json.dumps(state_to_json_obj(again), sort_keys=True) == text


def test_convention_in_search(z1, unit_registry):
    # under the subsequence convention a late fast frame satisfies VelGt
    sk = ts.Sketch(ts.parse_query("VelGt[?](A)"))
    W = [(z1, 1)]
    box = Box((0.0,), (1.0,))
    st_whole = SearchState(sk, box, b_unk=deque([box]), w_token=())
    st_whole = ts.synthesize_parameters(W, sk, unit_registry, budget=3, resume=st_whole,
                                        convention=Convention.SAT)
    assert not st_whole.b_con  # |z1| = 2, VelGt never matches the whole
    st_sub = SearchState(sk, box, b_unk=deque([box]), w_token=())
    st_sub = ts.synthesize_parameters(W, sk, unit_registry, budget=3, resume=st_sub,
                                      convention=Convention.SAT_SUB)
    assert st_sub.b_con


def test_box_frame():
    fr = box_frame(Box((1.0, 2.0), (3.0, 5.0)))
    assert fr.v == (1.0, 2.0) and fr.u == (2.0, 3.0)
