"""Deterministic synthetic trajectory scenarios with known ground truth.

Each scenario ships a reference query, a labeling convention, region
annotations where relevant, and a generator whose margins comfortably exceed
the default positional jitter. Generated labels are verified against the
reference query before the dataset is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .enumeration import EnumConfig
from .predicates import Region, Registry, build_registry
from .query import And, Pred, Query, Seq
from .semantics import Convention, check_sat
from .trajectory import Dataset, Trajectory

SCENARIOS = ("lane-turn", "lane-follow", "speed-contrast", "maritime-loiter")

# Noise beyond this fraction of the scenario margins voids the label guarantee.
MAX_SUPPORTED_NOISE = 0.2


class GenerationError(ValueError):
    """A generated trajectory's label disagreed with the reference query."""


@dataclass(frozen=True)
class SyntheticSpec:
    scenario: str
    positives: int = 2
    negatives: int = 10
    noise: float = 0.02
    length_range: tuple[int, int] = (0, 0)  # (0, 0) selects the scenario default
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.positives < 0 or self.negatives < 0:
            raise ValueError("counts must be nonnegative")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        lo, hi = self.length_range
        if (lo, hi) != (0, 0) and not (0 < lo <= hi):
            raise ValueError("length range must be nonempty")


_DEFAULT_LENGTHS = {
    "lane-turn": (32, 44),
    "lane-follow": (24, 40),
    "speed-contrast": (16, 30),
    "maritime-loiter": (12, 24),
}

_FRAME_RATES = {
    "lane-turn": 5.0,
    "lane-follow": 5.0,
    "speed-contrast": 2.0,
    "maritime-loiter": 1.0,
}

LANE_1 = Region(1, ((-20.0, 0.0), (-2.0, 0.0)), max_dist=1.0, max_angle_deg=30.0)
LANE_2 = Region(2, ((0.0, 3.0), (0.0, 30.0)), max_dist=1.0, max_angle_deg=30.0)


def scenario_regions(scenario: str) -> list[Region]:
    if scenario in ("lane-turn", "lane-follow"):
        return [LANE_1, LANE_2]
    return []


def scenario_convention(scenario: str) -> Convention:
    return Convention.SAT if scenario == "maritime-loiter" else Convention.SAT_SUB


def reference_query(scenario: str) -> Query:
    if scenario == "lane-turn":
        return Seq(Seq(Pred("InRegion_1", ("A",)), Pred("Any")), Pred("InRegion_2", ("A",)))
    if scenario == "lane-follow":
        return Pred("InRegion_1", ("A",))
    if scenario == "speed-contrast":
        return Seq(Pred("VelGt", ("A",), 0.6), Pred("VelGt", ("A",), 0.6))
    if scenario == "maritime-loiter":
        return And(And(Pred("XPosGt", ("A",), 4.0), Pred("DispLt", ("A",), -3.0)),
                   Pred("DurationNotShort"))
    raise ValueError(f"unknown scenario {scenario!r}")


def registry_for_scenario(scenario: str, dataset: Dataset) -> Registry:
    return build_registry(dataset, regions=scenario_regions(scenario))


_ENUM_PREDICATES = {
    "lane-turn": ("Any", "InRegion_1", "InRegion_2", "MinLength"),
    "lane-follow": ("Any", "InRegion_1", "InRegion_2", "MinLength"),
    "speed-contrast": ("Any", "VelGt"),
    "maritime-loiter": ("Any", "XPosGt", "DispLt", "DurationNotShort"),
}


def enum_config_for_scenario(scenario: str, registry: Registry) -> EnumConfig:
    return EnumConfig(
        registry=registry,
        max_predicates=3,
        max_parameterized=2,
        operators=("seq", "and"),
        variables=("A",),
        predicate_names=_ENUM_PREDICATES[scenario],
    )


# ---------------------------------------------------------------------------
# Path construction helpers


def _spread_labels(n_pos: int, n_neg: int) -> list[int]:
    """Interleave the classes evenly so order-based splits keep both."""
    total = n_pos + n_neg
    out = []
    placed = 0
    for i in range(total):
        want = (i + 1) * n_pos // total
        if want > placed:
            out.append(1)
            placed += 1
        else:
            out.append(0)
    return out


def _traj_from_path(tid: str, fr: float, pos: np.ndarray, vel: np.ndarray,
                    rng: np.random.Generator, noise: float) -> Trajectory:
    jitter = rng.normal(0.0, noise, size=pos.shape) if noise > 0 else 0.0
    return Trajectory.from_arrays(tid, fr, pos + jitter, vel[:, None, :] if vel.ndim == 2 else vel)


def _straight(start: tuple[float, float], heading: tuple[float, float],
              speed: float, n: int, fr: float) -> tuple[np.ndarray, np.ndarray]:
    h = np.asarray(heading, dtype=np.float64)
    h = h / np.hypot(*h)
    t = np.arange(n, dtype=np.float64)[:, None]
    pos = np.asarray(start, dtype=np.float64) + t * (speed / fr) * h
    vel = np.broadcast_to(h * speed, (n, 2)).copy()
    return pos[:, None, :], vel[:, None, :]


def _turn_path(x0: float, speed: float, n: int, fr: float, reverse: bool):
    """Straight along lane 1, quarter arc, then up lane 2."""
    step = speed / fr
    radius = 2.0
    center = np.array([-2.0, 2.0])
    pts, vels = [], []
    x, y = x0, 0.0
    # lane-1 leg
    while x < -2.0 and len(pts) < n:
        pts.append((x, y))
        vels.append((speed, 0.0))
        x += step
    # arc leg: heading rotates from +x to +y, ending at (0, 2)
    phi = -math.pi / 2
    while phi < 0.0 and len(pts) < n:
        px = center[0] + radius * math.cos(phi)
        py = center[1] + radius * math.sin(phi)
        pts.append((px, py))
        vels.append((speed * -math.sin(phi), speed * math.cos(phi)))
        phi += step / radius
    # lane-2 leg
    y = 2.0 + step
    while len(pts) < n:
        pts.append((0.0, y))
        vels.append((0.0, speed))
        y += step
    pos = np.asarray(pts)[:, None, :]
    vel = np.asarray(vels)[:, None, :]
    if reverse:
        pos = pos[::-1].copy()
        vel = -vel[::-1]
    return pos, vel


def _wander(center: tuple[float, float], radius: float, n: int, fr: float,
            rng: np.random.Generator):
    """Bounded meander: start and end within `radius` of the center."""
    angles = rng.uniform(0.0, 2 * math.pi, size=n)
    radii = rng.uniform(0.0, radius, size=n)
    pos = np.stack([
        center[0] + radii * np.cos(angles),
        center[1] + radii * np.sin(angles),
    ], axis=1)
    vel = np.zeros_like(pos)
    if n > 1:
        vel[:-1] = (pos[1:] - pos[:-1]) * fr
        vel[-1] = vel[-2]
    return pos[:, None, :], vel[:, None, :]


# ---------------------------------------------------------------------------
# Scenario generators. Each returns (pos, vel) and relies on wide margins
# relative to the supported noise.


def _gen_lane_turn(label: int, kind: int, n: int, fr: float, rng: np.random.Generator):
    speed = rng.uniform(1.6, 2.4)
    if label == 1:
        return _turn_path(rng.uniform(-9.0, -5.0), speed, n, fr, reverse=False)
    if kind == 0:  # stays in lane 1, drives straight through
        return _straight((rng.uniform(-18.0, -14.0), 0.0), (1.0, 0.0), speed, n, fr)
    if kind == 1:  # lane 2 only
        return _straight((0.0, rng.uniform(3.0, 6.0)), (0.0, 1.0), speed, n, fr)
    if kind == 2:  # reversed turn: near both lanes, heading misaligned
        return _turn_path(rng.uniform(-9.0, -5.0), speed, n, fr, reverse=True)
    return _straight((-10.0, -12.0), (1.0, 1.0), speed, n, fr)


def _gen_lane_follow(label: int, kind: int, n: int, fr: float, rng: np.random.Generator):
    speed = rng.uniform(1.6, 2.4)
    if label == 1:
        return _straight((rng.uniform(-18.0, -14.0), 0.0), (1.0, 0.0), speed, n, fr)
    if kind == 0:  # lane 2
        return _straight((0.0, rng.uniform(3.0, 6.0)), (0.0, 1.0), speed, n, fr)
    if kind == 1:  # against lane-1 direction
        return _straight((rng.uniform(2.0, 6.0), 0.0), (-1.0, 0.0), speed, n, fr)
    return _straight((-10.0, -12.0), (1.0, 1.0), speed, n, fr)


def _speed_profile_path(speeds: np.ndarray, fr: float, rng: np.random.Generator):
    x0 = rng.uniform(-5.0, 5.0)
    y0 = rng.uniform(-2.0, 2.0)
    x = x0 + np.concatenate([[0.0], np.cumsum(speeds[:-1] / fr)])
    pos = np.stack([x, np.full_like(x, y0)], axis=1)
    vel = np.stack([speeds, np.zeros_like(speeds)], axis=1)
    return pos[:, None, :], vel[:, None, :]


def _gen_speed_contrast(label: int, kind: int, n: int, fr: float, rng: np.random.Generator):
    slow = rng.uniform(0.2, 0.4, size=n)
    if label == 1:
        k1 = int(rng.integers(3, max(4, n - 7)))
        k2 = int(rng.integers(4, 7))
        speeds = slow.copy()
        speeds[k1:k1 + k2] = rng.uniform(0.75, 0.95, size=min(k2, n - k1))
        return _speed_profile_path(speeds, fr, rng)
    if kind == 0:  # all slow
        return _speed_profile_path(slow, fr, rng)
    if kind == 1:  # one isolated fast frame
        speeds = slow.copy()
        speeds[int(rng.integers(2, n - 2))] = rng.uniform(0.8, 0.9)
        return _speed_profile_path(speeds, fr, rng)
    # two isolated fast frames, well separated
    speeds = slow.copy()
    i = int(rng.integers(1, n // 2 - 1))
    j = int(rng.integers(n // 2 + 1, n - 1))
    speeds[i] = rng.uniform(0.8, 0.9)
    speeds[j] = rng.uniform(0.8, 0.9)
    return _speed_profile_path(speeds, fr, rng)


def _gen_maritime(label: int, kind: int, n: int, fr: float, rng: np.random.Generator):
    if label == 1:
        return _wander((7.5, 4.0), 1.0, n, fr, rng)
    if kind == 0:  # transit across the whole strait
        y = rng.uniform(2.0, 6.0)
        return _straight((0.5, y), (1.0, 0.0), 11.0 / (n / fr), n, fr)
    if kind == 1:  # loiter in the wrong zone
        return _wander((1.5, 4.0), 1.0, n, fr, rng)
    if kind == 2:  # brief stop in the zone (handled via short length)
        return _wander((7.5, 4.0), 1.0, n, fr, rng)
    # reverse transit: enters from the far side, exits the zone
    y = rng.uniform(2.0, 6.0)
    return _straight((11.5, y), (-1.0, 0.0), 11.0 / (n / fr), n, fr)


_GENERATORS: dict[str, Callable] = {
    "lane-turn": _gen_lane_turn,
    "lane-follow": _gen_lane_follow,
    "speed-contrast": _gen_speed_contrast,
    "maritime-loiter": _gen_maritime,
}

_NEGATIVE_KINDS = {
    "lane-turn": 4,
    "lane-follow": 3,
    "speed-contrast": 3,
    "maritime-loiter": 4,
}


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministic dataset for a scenario; labels verified against the
    reference query under the scenario's convention."""
    fr = _FRAME_RATES[spec.scenario]
    lo, hi = spec.length_range if spec.length_range != (0, 0) else _DEFAULT_LENGTHS[spec.scenario]
    rng = np.random.default_rng(spec.seed)
    gen = _GENERATORS[spec.scenario]
    labels_seq = _spread_labels(spec.positives, spec.negatives)
    trajs: list[Trajectory] = []
    labels: dict[str, int] = {}
    neg_counter = 0
    for i, label in enumerate(labels_seq):
        kind = neg_counter % _NEGATIVE_KINDS[spec.scenario] if label == 0 else 0
        if label == 0:
            neg_counter += 1
        n = int(rng.integers(lo, hi + 1))
        if spec.scenario == "maritime-loiter" and label == 0 and kind == 2:
            n = 3  # shorter than the duration threshold
        pos, vel = gen(label, kind, n, fr, rng)
        tid = f"t{i:04d}"
        trajs.append(_traj_from_path(tid, fr, pos.reshape(n, -1, 2), vel, rng, spec.noise))
        labels[tid] = label
    ds = Dataset(trajs, 1, labels, fr)
    _verify_labels(spec, ds)
    return ds


def _verify_labels(spec: SyntheticSpec, ds: Dataset) -> None:
    ref = reference_query(spec.scenario)
    convention = scenario_convention(spec.scenario)
    registry = registry_for_scenario(spec.scenario, ds)
    for z in ds.trajectories:
        got = check_sat(ref, z, registry, convention)
        if got != ds.labels[z.id]:
            raise GenerationError(
                f"{spec.scenario}: trajectory {z.id} labeled {ds.labels[z.id]} but the "
                f"reference query says {got}; lower the noise (<= {MAX_SUPPORTED_NOISE})")
