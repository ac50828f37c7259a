"""Data model, file formats, pairing, and synthetic generation."""

import itertools
import json

import numpy as np
import pytest

import trajsynth as ts
from trajsynth.trajectory import (
    Dataset, dumps_dataset, dumps_dataset_csv, loads_dataset_csv,
)

from conftest import velocity_trajectory


def make_dataset(tmp_path=None):
    t1 = ts.Trajectory.from_arrays("a", 4.0, np.array([[0.0, 0.0], [1.0, 0.5], [2.0, 1.5]]))
    t2 = ts.Trajectory.from_arrays("b", 4.0, np.array([[3.0, 3.0], [2.0, 2.0]]),
                                   present=np.array([[True], [False]]))
    return Dataset([t1, t2], 1, {"a": 1, "b": 0}, 4.0)


def test_load_minimal_json(tmp_path):
    obj = {
        "object_count": 1,
        "frame_rate": 2.0,
        "trajectories": [
            {"id": "t", "label": None,
             "frames": [[{"x": 0.0, "y": 0.0}], [{"x": 1.0, "y": 1.0}]]},
        ],
    }
    p = tmp_path / "d.json"
    p.write_text(json.dumps(obj))
    ds = ts.load_dataset(p)
    assert len(ds.trajectories) == 1
    assert len(ds.trajectories[0]) == 2
    assert ds.object_count == 1


def test_load_missing_y_is_schema_error(tmp_path):
    obj = {
        "object_count": 1,
        "frame_rate": 2.0,
        "trajectories": [{"id": "t", "frames": [[{"x": 0.0}]]}],
    }
    p = tmp_path / "d.json"
    p.write_text(json.dumps(obj))
    with pytest.raises(ts.SchemaError):
        ts.load_dataset(p)


def test_load_velocities_as_vx(tmp_path, unit_registry):
    obj = {
        "object_count": 1,
        "frame_rate": 1.0,
        "trajectories": [
            {"id": "z0", "frames": [
                [{"x": 0.0, "y": 0.0, "vx": 0.9, "vy": 0.0}],
                [{"x": 0.0, "y": 0.0, "vx": 0.6, "vy": 0.0}],
            ]},
        ],
    }
    p = tmp_path / "d.json"
    p.write_text(json.dumps(obj))
    z = ts.load_dataset(p).trajectories[0]
    velgt = unit_registry["VelGt"]
    assert velgt.score(z, 0, 1, (0,)) == 0.9
    assert velgt.score(z, 1, 2, (0,)) == 0.6


def test_subtrajectory_identity_empty_and_single(z1, unit_registry):
    n = len(z1)
    assert ts.subtrajectory(z1, 0, n).equal_data(z1)
    assert len(ts.subtrajectory(z1, 1, 1)) == 0
    view = ts.subtrajectory(z1, 1, 2)
    assert unit_registry["VelGt"].score(view, 0, 1, (0,)) == 0.8
    with pytest.raises(IndexError):
        ts.subtrajectory(z1, 0, 3)


def test_subtrajectory_composition():
    rng = np.random.default_rng(0)
    z = ts.Trajectory.from_arrays("t", 2.0, rng.normal(size=(9, 1, 2)))
    for i, j in itertools.combinations(range(10), 2):
        sub = z.subtrajectory(i, j)
        for a in range(j - i + 1):
            for b in range(a, j - i + 1):
                assert sub.subtrajectory(a, b).equal_data(z.subtrajectory(i + a, i + b))


def track(tid, start, stop, total):
    pres = np.zeros((total, 1), dtype=bool)
    pres[start:stop] = True
    pos = np.zeros((total, 1, 2))
    pos[:, 0, 0] = np.arange(total)
    return ts.Trajectory.from_arrays(tid, 2.0, pos, present=pres)


def test_form_pairs_disjoint_and_full_overlap():
    a = track("a", 0, 5, 12)
    b = track("b", 6, 12, 12)
    assert ts.form_pairs([a, b], min_overlap=1) == []
    c = track("c", 0, 5, 12)
    pairs = ts.form_pairs([a, c], min_overlap=1)
    assert sorted(p.id for p in pairs) == ["a|c", "c|a"]
    assert all(p.pos.shape[1] == 2 for p in pairs)


def test_form_pairs_brute_force_count():
    rng = np.random.default_rng(3)
    tracks = []
    spans = []
    for i in range(5):
        s = int(rng.integers(0, 8))
        e = int(rng.integers(s + 1, 14))
        spans.append((s, e))
        tracks.append(track(f"t{i}", s, e, 14))
    for min_overlap in (1, 2, 4):
        expected = sum(
            1
            for (i, (s1, e1)), (j, (s2, e2)) in itertools.product(
                enumerate(spans), enumerate(spans))
            if i != j and min(e1, e2) - max(s1, s2) >= min_overlap
        )
        assert len(ts.form_pairs(tracks, min_overlap)) == expected


def test_form_pairs_presence_mask():
    a = track("a", 2, 6, 10)
    b = track("b", 4, 9, 10)
    (pair, _) = ts.form_pairs([a, b], 1)
    assert len(pair) == 7  # union span [2, 9)
    assert pair.present[:2, 1].sum() == 0  # b absent before frame 4
    assert pair.present[:, 0].sum() == 4


def test_json_round_trip(tmp_path):
    ds = make_dataset()
    p = tmp_path / "d.json"
    ts.save_dataset(ds, p)
    again = ts.load_dataset(p)
    assert again.equal_data(ds)
    # byte-stable: rewriting the loaded dataset is identical
    assert dumps_dataset(again) == p.read_text()


def test_csv_round_trip(tmp_path):
    ds = make_dataset()
    p = tmp_path / "d.csv"
    ts.save_dataset(ds, p, format="csv")
    again = ts.load_dataset(p, format="csv")
    assert again.equal_data(ds)
    assert dumps_dataset_csv(again) == p.read_text()


def test_csv_malformed():
    with pytest.raises(ts.ParseError):
        loads_dataset_csv("not,a,valid,file\n")


def test_velocity_derivation():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    z = ts.Trajectory.from_arrays("t", 2.0, pos)
    assert z.vel[0, 0, 0] == 2.0  # (1-0) * frame_rate
    assert z.vel[1, 0, 0] == 4.0
    assert z.vel[2, 0, 0] == 4.0  # last frame copies previous


def test_generator_determinism():
    spec = ts.SyntheticSpec("lane-turn", positives=3, negatives=6, seed=42)
    a = dumps_dataset(ts.generate_synthetic(spec))
    b = dumps_dataset(ts.generate_synthetic(spec))
    assert a == b


def test_generator_zero_positives():
    ds = ts.generate_synthetic(ts.SyntheticSpec("speed-contrast", positives=0, negatives=5, seed=1))
    assert len(ds.trajectories) == 5
    assert set(ds.labels.values()) == {0}


def test_generator_positives_satisfy_reference(scenario_bundle):
    for name, bundle in scenario_bundle.items():
        ds, reg = bundle["dataset"], bundle["registry"]
        ref, conv = bundle["reference"], bundle["convention"]
        for z in ds.trajectories:
            assert ts.check_sat(ref, z, reg, conv) == ds.labels[z.id], (name, z.id)


def test_generator_unknown_scenario():
    with pytest.raises(ValueError):
        ts.SyntheticSpec("bogus")


def test_immutability(z0):
    with pytest.raises(AttributeError):
        z0.frame_rate = 3.0
    with pytest.raises(ValueError):
        z0.pos[0, 0, 0] = 5.0
