"""Shared fixtures: the two-trajectory velocity instance, registries, and
randomized generators used across the suites."""

from __future__ import annotations

import numpy as np
import pytest

import trajsynth as ts
from trajsynth.predicates import DataBounds


def velocity_trajectory(tid: str, speeds) -> ts.Trajectory:
    """1-D velocities encoded as vx; positions at the origin."""
    n = len(speeds)
    vel = np.zeros((n, 1, 2))
    vel[:, 0, 0] = speeds
    return ts.Trajectory.from_arrays(tid, 1.0, np.zeros((n, 1, 2)), vel=vel)


@pytest.fixture(scope="session")
def z0():
    return velocity_trajectory("z0", [0.9, 0.6])


@pytest.fixture(scope="session")
def z1():
    return velocity_trajectory("z1", [0.5, 0.8])


@pytest.fixture(scope="session")
def unit_registry():
    """Registry whose VelGt range is exactly [0, 1]."""
    return ts.build_registry(bounds=DataBounds(max_speed=1.0))


@pytest.fixture(scope="session")
def wide_registry():
    """Ranges generous enough to cover the random trajectory generator."""
    return ts.build_registry(bounds=DataBounds(
        x_min=-8.0, x_max=8.0, y_min=-8.0, y_max=8.0,
        max_speed=3.0, max_accel=6.0, max_duration=10.0))


RANDOM_LEAVES = (
    "VelGt[?](A)", "MinLength[?]", "DispLt[?](A)", "XPosGt[?](A)",
    "YPosLt[?](A)", "AvgAccelGt[?](A)", "Any", "DurationShort",
    "MinLength[1.0]", "XPosGt[0.5](A)",
)


def random_trajectory(rng: np.random.Generator, max_len: int = 12, m: int = 1,
                      absent_p: float = 0.05) -> ts.Trajectory:
    n = int(rng.integers(0, max_len + 1))
    if n == 0:
        return ts.Trajectory.from_arrays(f"r{rng.integers(1 << 30)}", 2.0, np.zeros((0, m, 2)))
    pos = (np.cumsum(rng.uniform(-0.4, 0.4, size=(n, m, 2)), axis=0)
           + rng.uniform(-3.0, 3.0, size=(1, m, 2)))
    present = rng.random((n, m)) > absent_p
    return ts.Trajectory.from_arrays(f"r{rng.integers(1 << 30)}", 2.0, pos, present=present)


def random_query(rng: np.random.Generator, depth: int = 2, leaves=RANDOM_LEAVES,
                 star_p: float = 0.0) -> ts.Query:
    if depth == 0 or rng.random() < 0.35:
        return ts.parse_query(str(rng.choice(list(leaves))))
    if star_p and rng.random() < star_p:
        return ts.Star(random_query(rng, depth - 1, leaves, star_p))
    op = str(rng.choice(["seq", "and", "or"]))
    make = {"seq": ts.Seq, "and": ts.And, "or": ts.Or}[op]
    return make(random_query(rng, depth - 1, leaves, star_p),
                random_query(rng, depth - 1, leaves, star_p))


def random_sketch(rng: np.random.Generator, depth: int = 2, leaves=RANDOM_LEAVES,
                  star_p: float = 0.0) -> ts.Sketch:
    return ts.Sketch(ts.query.renumber(random_query(rng, depth, leaves, star_p)))


def random_frame(rng: np.random.Generator, d: int) -> ts.DirectionFrame:
    return ts.DirectionFrame(tuple(rng.uniform(-4.0, 4.0, d)),
                             tuple(rng.uniform(0.2, 2.0, d)))


@pytest.fixture(scope="session")
def scenario_bundle():
    """Generated dataset + registry + configs per scenario, built once."""
    out = {}
    for name in ("lane-turn", "speed-contrast", "maritime-loiter"):
        ds = ts.generate_synthetic(ts.SyntheticSpec(name, positives=40, negatives=120, seed=11))
        registry = ts.registry_for_scenario(name, ds)
        out[name] = {
            "dataset": ds,
            "registry": registry,
            "config": ts.enum_config_for_scenario(name, registry),
            "convention": ts.scenario_convention(name),
            "reference": ts.reference_query(name),
        }
    return out
