"""Named predicates over subtrajectories: scoring functions with bounded ranges.

Each predicate provides two evaluation paths that are bit-identical by
construction: a scalar score over one interval [i, j) and a full
(n+1) x (n+1) matrix of scores over every interval. Satisfaction of a
parameterized predicate is 1(score >= theta); unparameterized predicates
score exactly +inf (match) or -inf (no match).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .trajectory import Dataset, Trajectory

NEG_INF = float("-inf")
POS_INF = float("inf")

_token_counter = itertools.count()

# Stationary objects have no heading; ratio denominators are floored here.
SPEED_FLOOR = 1e-6
HEADING_SPEED_FLOOR = 1e-9


@dataclass(frozen=True)
class PredicateDef:
    """A named scoring function with a declared bounded range.

    score_fn(traj, i, j, idx) and matrix_fn(traj, idx) must produce the same
    floating-point values for every interval; the engine relies on it.
    """

    name: str
    arity: int
    parameterized: bool
    score_range: tuple[float, float]
    empty_value: float
    score_fn: Callable = field(repr=False)
    matrix_fn: Callable = field(repr=False)
    token: int = field(default_factory=lambda: next(_token_counter), repr=False)

    def __post_init__(self):
        lo, hi = self.score_range
        if not (lo < hi):
            raise ValueError(f"{self.name}: score_range must satisfy lo < hi")

    def score(self, traj: Trajectory, i: int, j: int, idx: tuple[int, ...]) -> float:
        if i == j:
            return self.empty_value
        v = float(self.score_fn(traj, i, j, idx))
        if math.isnan(v):
            raise FloatingPointError(f"{self.name}: NaN score on [{i}, {j})")
        return v

    def matrix(self, traj: Trajectory, idx: tuple[int, ...]) -> np.ndarray:
        """Raw score matrix, cached per trajectory: entry (i, j) = score on [i, j)."""
        key = (self.token, idx)
        cached = traj._cache.get(key)
        if cached is None:
            cached = self.matrix_fn(traj, idx)
            if np.isnan(cached).any():
                raise FloatingPointError(f"{self.name}: NaN in score matrix")
            cached.flags.writeable = False
            traj._cache[key] = cached
        return cached


def _check_binding(pdef: PredicateDef, idx: Sequence[int], m: int) -> tuple[int, ...]:
    idx = tuple(int(k) for k in idx)
    if len(idx) != pdef.arity:
        raise ValueError(f"{pdef.name} expects {pdef.arity} object(s), got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise ValueError("binding must map variables to distinct objects")
    if any(k < 0 or k >= m for k in idx):
        raise ValueError(f"object index out of range for {m} objects")
    return idx


def score(pdef: PredicateDef, binding: Sequence[int] | dict, z: Trajectory) -> float:
    """Evaluate the scoring function on a whole trajectory (view)."""
    idx = _resolve_binding(pdef, binding, z)
    return pdef.score(z, 0, len(z), idx)


def sat(pdef: PredicateDef, binding: Sequence[int] | dict, theta: float | None, z: Trajectory) -> int:
    """1(score >= theta) for parameterized predicates; 1(score = +inf) otherwise."""
    if pdef.parameterized != (theta is not None):
        raise ValueError(f"{pdef.name}: theta must be supplied iff the predicate is parameterized")
    s = score(pdef, binding, z)
    if pdef.parameterized:
        return int(s >= theta)
    return int(s == POS_INF)


def _resolve_binding(pdef: PredicateDef, binding, z: Trajectory) -> tuple[int, ...]:
    if isinstance(binding, dict):
        binding = [binding[k] for k in sorted(binding)]
    m = z.pos.shape[1] if len(z) else max(1, z.pos.shape[1])
    return _check_binding(pdef, binding, m)


def negated(pdef: PredicateDef) -> PredicateDef:
    """Score-negated version: flips the score, its range, and the empty value."""
    name = pdef.name[:-1] if pdef.name.endswith("~") else pdef.name + "~"
    lo, hi = pdef.score_range

    def neg_score(traj, i, j, idx, _f=pdef.score_fn):
        return -float(_f(traj, i, j, idx))

    def neg_matrix(traj, idx, _f=pdef.matrix_fn):
        raw = _f(traj, idx)
        out = np.full_like(raw, NEG_INF)
        n = raw.shape[0]
        iu = np.triu_indices(n)
        out[iu] = -raw[iu]
        return out

    return PredicateDef(
        name=name,
        arity=pdef.arity,
        parameterized=pdef.parameterized,
        score_range=(-hi, -lo),
        empty_value=-pdef.empty_value,
        score_fn=neg_score,
        matrix_fn=neg_matrix,
    )


# ---------------------------------------------------------------------------
# Shared per-frame feature arrays, cached on the trajectory.


def _frames_feature(traj: Trajectory, key: tuple, fn: Callable[[], np.ndarray]) -> np.ndarray:
    cached = traj._cache.get(key)
    if cached is None:
        cached = fn()
        cached.flags.writeable = False
        traj._cache[key] = cached
    return cached


def _speeds(traj: Trajectory, k: int) -> np.ndarray:
    return _frames_feature(traj, ("speed", k),
                           lambda: np.hypot(traj.vel[:, k, 0], traj.vel[:, k, 1]))


def _present_all(traj: Trajectory, idx: tuple[int, ...]) -> np.ndarray:
    def build():
        if not idx:
            return np.ones(len(traj), dtype=np.bool_)
        p = traj.present[:, idx[0]].copy()
        for k in idx[1:]:
            p &= traj.present[:, k]
        return p
    return _frames_feature(traj, ("present_all", idx), build)


def _present_prefix(traj: Trajectory, idx: tuple[int, ...]) -> np.ndarray:
    def build():
        counts = np.zeros(len(traj) + 1, dtype=np.int64)
        np.cumsum(_present_all(traj, idx), out=counts[1:])
        return counts
    return _frames_feature(traj, ("present_prefix", idx), build)


def _all_present(traj: Trajectory, i: int, j: int, idx: tuple[int, ...]) -> bool:
    c = _present_prefix(traj, idx)
    return bool(c[j] - c[i] == j - i)


# ---------------------------------------------------------------------------
# Matrix/score builder vocabulary. Every builder keeps the two paths on the
# same float operations so matrix entries equal scalar scores exactly.


def _empty_matrix(n: int, empty_value: float) -> np.ndarray:
    out = np.full((n + 1, n + 1), NEG_INF)
    np.fill_diagonal(out, empty_value)
    return out


def _framewise_min(per_frame: Callable[[Trajectory, tuple], np.ndarray], empty_value: float = NEG_INF):
    """ι(z_{i:j}) = min over frames in [i, j) of a per-frame value."""

    def score_fn(traj, i, j, idx):
        return np.min(per_frame(traj, idx)[i:j])

    def matrix_fn(traj, idx):
        vals = per_frame(traj, idx)
        n = len(vals)
        out = _empty_matrix(n, empty_value)
        if n:
            grid = np.where(np.arange(n)[None, :] >= np.arange(n)[:, None],
                            np.broadcast_to(vals, (n, n)), POS_INF)
            acc = np.minimum.accumulate(grid, axis=1)
            iu = np.triu_indices(n)
            out[iu[0], iu[1] + 1] = acc[iu]
        return out

    return score_fn, matrix_fn


def _masked(per_frame_fn):
    """Wrap a per-frame feature so absent bound objects score -inf."""

    def fn(traj, idx):
        def build():
            vals = per_frame_fn(traj, idx)
            if idx:
                vals = np.where(_present_all(traj, idx), vals, NEG_INF)
            return vals
        return _frames_feature(traj, ("pf", id(per_frame_fn), idx), build)

    return fn


def _length_based(of_duration: Callable[[np.ndarray], np.ndarray], empty_value: float = NEG_INF):
    """ι depends only on the interval duration (j - i) / frame_rate."""

    def score_fn(traj, i, j, idx):
        return of_duration(np.float64(j - i) / traj.frame_rate)

    def matrix_fn(traj, idx):
        n = len(traj)
        out = _empty_matrix(n, empty_value)
        j = np.arange(n + 1, dtype=np.float64)
        dur = (j[None, :] - j[:, None]) / traj.frame_rate
        iu = np.triu_indices(n + 1, k=1)
        out[iu] = of_duration(dur[iu])
        return out

    return score_fn, matrix_fn


# ---------------------------------------------------------------------------
# Builtin predicate constructors.


def _upper_const(n: int, value: float) -> np.ndarray:
    idx = np.arange(n + 1)
    return np.where(idx[None, :] >= idx[:, None], value, NEG_INF)


def any_pred() -> PredicateDef:
    return PredicateDef(
        "Any", 0, False, (0.0, 1.0), POS_INF,
        score_fn=lambda traj, i, j, idx: POS_INF,
        matrix_fn=lambda traj, idx: _upper_const(len(traj), POS_INF),
    )


def none_pred() -> PredicateDef:
    return PredicateDef(
        "None", 0, False, (0.0, 1.0), NEG_INF,
        score_fn=lambda traj, i, j, idx: NEG_INF,
        matrix_fn=lambda traj, idx: np.full((len(traj) + 1,) * 2, NEG_INF),
    )


def min_length_pred(max_duration: float) -> PredicateDef:
    s, m = _length_based(lambda d: d)
    return PredicateDef("MinLength", 0, True, (0.0, _pad(max_duration)), NEG_INF, s, m)


def max_length_pred(max_duration: float) -> PredicateDef:
    s, m = _length_based(lambda d: -d)
    return PredicateDef("MaxLength", 0, True, (-_pad(max_duration), 0.0), NEG_INF, s, m)


def _duration_gate(threshold: float, at_least: bool):
    if at_least:
        return lambda d: np.where(d >= threshold, POS_INF, NEG_INF)
    return lambda d: np.where(d <= threshold, POS_INF, NEG_INF)


def duration_not_short_pred(threshold: float = 5.0) -> PredicateDef:
    s, m = _length_based(_duration_gate(threshold, at_least=True))
    return PredicateDef("DurationNotShort", 0, False, (0.0, 1.0), NEG_INF, s, m)


def duration_short_pred(threshold: float = 5.0) -> PredicateDef:
    s, m = _length_based(_duration_gate(threshold, at_least=False))
    return PredicateDef("DurationShort", 0, False, (0.0, 1.0), NEG_INF, s, m)


def _coord_pred(name: str, axis: int, sign: float, lo: float, hi: float) -> PredicateDef:
    pf = _masked(lambda traj, idx, _a=axis, _s=sign: _s * traj.pos[:, idx[0], _a])
    s, m = _framewise_min(pf)
    return PredicateDef(name, 1, True, (lo, hi), NEG_INF, s, m)


def x_pos_gt_pred(lo: float, hi: float) -> PredicateDef:
    return _coord_pred("XPosGt", 0, 1.0, *_widen(lo, hi))


def x_pos_lt_pred(lo: float, hi: float) -> PredicateDef:
    wlo, whi = _widen(lo, hi)
    return _coord_pred("XPosLt", 0, -1.0, -whi, -wlo)


def y_pos_gt_pred(lo: float, hi: float) -> PredicateDef:
    return _coord_pred("YPosGt", 1, 1.0, *_widen(lo, hi))


def y_pos_lt_pred(lo: float, hi: float) -> PredicateDef:
    wlo, whi = _widen(lo, hi)
    return _coord_pred("YPosLt", 1, -1.0, -whi, -wlo)


def disp_lt_pred(max_disp: float) -> PredicateDef:
    """ι = -||first position - last position|| of the bound object."""

    def score_fn(traj, i, j, idx):
        if not _all_present(traj, i, j, idx):
            return NEG_INF
        k = idx[0]
        return -np.hypot(traj.pos[j - 1, k, 0] - traj.pos[i, k, 0],
                         traj.pos[j - 1, k, 1] - traj.pos[i, k, 1])

    def matrix_fn(traj, idx):
        n = len(traj)
        out = _empty_matrix(n, NEG_INF)
        if n:
            k = idx[0]
            x, y = traj.pos[:, k, 0], traj.pos[:, k, 1]
            iu = np.triu_indices(n)  # (i, j-1) pairs with j-1 >= i
            vals = -np.hypot(x[iu[1]] - x[iu[0]], y[iu[1]] - y[iu[0]])
            c = _present_prefix(traj, idx)
            ok = (c[iu[1] + 1] - c[iu[0]]) == (iu[1] + 1 - iu[0])
            out[iu[0], iu[1] + 1] = np.where(ok, vals, NEG_INF)
        return out

    return PredicateDef("DispLt", 1, True, (-_pad(max_disp), 0.0), NEG_INF, score_fn, matrix_fn)


def _signed_accel(traj: Trajectory, idx: tuple) -> np.ndarray:
    def build():
        k = idx[0]
        mag = np.hypot(traj.acc[:, k, 0], traj.acc[:, k, 1])
        along = traj.acc[:, k, 0] * traj.vel[:, k, 0] + traj.acc[:, k, 1] * traj.vel[:, k, 1]
        return np.where(along < 0, -mag, mag)
    return _frames_feature(traj, ("signed_accel", idx[0]), build)


def avg_accel_gt_pred(cap: float) -> PredicateDef:
    """ι = mean over frames of |a| signed by the sign of a·v."""

    def score_fn(traj, i, j, idx):
        if not _all_present(traj, i, j, idx):
            return NEG_INF
        s = np.cumsum(_signed_accel(traj, idx)[i:j])
        return s[-1] / np.float64(j - i)

    def matrix_fn(traj, idx):
        n = len(traj)
        out = _empty_matrix(n, NEG_INF)
        vals = _signed_accel(traj, idx)
        c = _present_prefix(traj, idx)
        for i in range(n):
            s = np.cumsum(vals[i:])
            means = s / np.arange(1, n - i + 1, dtype=np.float64)
            ok = (c[i + 1:] - c[i]) == np.arange(1, n - i + 1)
            out[i, i + 1:] = np.where(ok, means, NEG_INF)
        return out

    cap = _pad(cap)
    return PredicateDef("AvgAccelGt", 1, True, (-cap, cap), NEG_INF, score_fn, matrix_fn)


def _pair_dist(traj: Trajectory, idx: tuple) -> np.ndarray:
    def build():
        a, b = idx
        return np.hypot(traj.pos[:, a, 0] - traj.pos[:, b, 0],
                        traj.pos[:, a, 1] - traj.pos[:, b, 1])
    return _frames_feature(traj, ("pair_dist", idx), build)


def distance_lt_pred(max_dist: float) -> PredicateDef:
    pf = _masked(lambda traj, idx: -_pair_dist(traj, idx))
    s, m = _framewise_min(pf)
    return PredicateDef("DistanceLt", 2, True, (-_pad(max_dist), 0.0), NEG_INF, s, m)


def distance_gt_pred(max_dist: float) -> PredicateDef:
    pf = _masked(_pair_dist)
    s, m = _framewise_min(pf)
    return PredicateDef("DistanceGt", 2, True, (0.0, _pad(max_dist)), NEG_INF, s, m)


def speed_ratio_gt_pred(cap: float = 10.0) -> PredicateDef:
    def per_frame(traj, idx):
        a, b = idx
        ratio = _speeds(traj, a) / np.maximum(_speeds(traj, b), SPEED_FLOOR)
        return np.minimum(ratio, cap)

    s, m = _framewise_min(_masked(per_frame))
    return PredicateDef("SpeedRatioGt", 2, True, (0.0, cap), NEG_INF, s, m)


def vel_gt_pred(max_speed: float) -> PredicateDef:
    """ι = the object's speed on single-frame intervals, -inf otherwise."""

    def score_fn(traj, i, j, idx):
        if j - i != 1 or not traj.present[i, idx[0]]:
            return NEG_INF
        return _speeds(traj, idx[0])[i]

    def matrix_fn(traj, idx):
        n = len(traj)
        out = _empty_matrix(n, NEG_INF)
        if n:
            band = np.where(traj.present[:, idx[0]], _speeds(traj, idx[0]), NEG_INF)
            out[np.arange(n), np.arange(1, n + 1)] = band
        return out

    return PredicateDef("VelGt", 1, True, (0.0, _pad(max_speed)), NEG_INF, score_fn, matrix_fn)


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Region:
    id: int
    polyline: tuple[tuple[float, float], ...]
    max_dist: float
    max_angle_deg: float

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise ValueError("region polyline needs at least two points")


def load_regions(path: str | Path) -> list[Region]:
    obj = json.loads(Path(path).read_text())
    return regions_from_json_obj(obj)


def regions_from_json_obj(obj: dict) -> list[Region]:
    return [
        Region(int(r["id"]), tuple((float(x), float(y)) for x, y in r["polyline"]),
               float(r["max_dist"]), float(r["max_angle_deg"]))
        for r in obj["regions"]
    ]


def regions_to_json_obj(regions: Iterable[Region]) -> dict:
    return {"regions": [
        {"id": r.id, "polyline": [[x, y] for x, y in r.polyline],
         "max_dist": r.max_dist, "max_angle_deg": r.max_angle_deg}
        for r in regions
    ]}


def _region_membership(traj: Trajectory, k: int, region: Region) -> np.ndarray:
    """Per-frame: within max_dist of the polyline and heading aligned with it."""
    pts = np.asarray(region.polyline, dtype=np.float64)
    a, b = pts[:-1], pts[1:]
    seg = b - a
    seg_len2 = np.maximum((seg ** 2).sum(axis=1), 1e-12)
    p = traj.pos[:, k, :]
    rel = p[:, None, :] - a[None, :, :]
    t = np.clip((rel * seg[None, :, :]).sum(axis=2) / seg_len2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * seg[None, :, :]
    d = np.hypot(p[:, None, 0] - closest[:, :, 0], p[:, None, 1] - closest[:, :, 1])
    nearest = np.argmin(d, axis=1)
    dist_ok = d[np.arange(len(d)), nearest] <= region.max_dist
    dirs = seg[nearest]
    v = traj.vel[:, k, :]
    speed = np.hypot(v[:, 0], v[:, 1])
    dir_norm = np.hypot(dirs[:, 0], dirs[:, 1])
    cosang = (v * dirs).sum(axis=1) / np.maximum(speed * dir_norm, 1e-12)
    angle_ok = (speed < HEADING_SPEED_FLOOR) | (cosang >= math.cos(math.radians(region.max_angle_deg)))
    return dist_ok & angle_ok


def in_region_pred(region: Region) -> PredicateDef:
    def per_frame(traj, idx):
        member = _region_membership(traj, idx[0], region)
        return np.where(member, POS_INF, NEG_INF)

    s, m = _framewise_min(_masked(per_frame))
    return PredicateDef(f"InRegion_{region.id}", 1, False, (0.0, 1.0), NEG_INF, s, m)


# ---------------------------------------------------------------------------
# Registry


class Registry:
    """Immutable-after-build name -> PredicateDef map; always has Any and None."""

    def __init__(self, defs: Iterable[PredicateDef] = ()):
        self._defs: dict[str, PredicateDef] = {}
        self.register(any_pred())
        self.register(none_pred())
        for d in defs:
            self.register(d)

    def register(self, pdef: PredicateDef) -> None:
        if pdef.name in self._defs:
            raise ValueError(f"duplicate predicate name {pdef.name!r}")
        self._defs[pdef.name] = pdef

    def __getitem__(self, name: str) -> PredicateDef:
        try:
            return self._defs[name]
        except KeyError:
            raise KeyError(f"unknown predicate {name!r}")

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def names(self) -> list[str]:
        return list(self._defs)

    def defs(self) -> list[PredicateDef]:
        return list(self._defs.values())


@dataclass
class DataBounds:
    """Extremes of a dataset, used to give every predicate a finite range."""

    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0
    max_speed: float = 1.0
    max_accel: float = 1.0
    max_duration: float = 1.0

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)


def dataset_bounds(ds: Dataset) -> DataBounds:
    b = DataBounds()
    xs, ys, sp, ac, dur = [], [], [], [], []
    for z in ds.trajectories:
        mask = z.present
        if mask.any():
            xs.append((z.pos[:, :, 0][mask].min(), z.pos[:, :, 0][mask].max()))
            ys.append((z.pos[:, :, 1][mask].min(), z.pos[:, :, 1][mask].max()))
            sp.append(np.hypot(z.vel[:, :, 0], z.vel[:, :, 1])[mask].max())
            ac.append(np.hypot(z.acc[:, :, 0], z.acc[:, :, 1])[mask].max())
        if len(z):
            dur.append(len(z) / z.frame_rate)
    if xs:
        b.x_min = float(min(v[0] for v in xs))
        b.x_max = float(max(v[1] for v in xs))
        b.y_min = float(min(v[0] for v in ys))
        b.y_max = float(max(v[1] for v in ys))
        b.max_speed = float(max(sp))
        b.max_accel = float(max(ac))
    if dur:
        b.max_duration = float(max(dur))
    return b


def build_registry(
    dataset: Dataset | None = None,
    regions: Iterable[Region] = (),
    bounds: DataBounds | None = None,
) -> Registry:
    """Registry of all builtins with ranges derived from the data."""
    if bounds is None:
        bounds = dataset_bounds(dataset) if dataset is not None else DataBounds()
    reg = Registry([
        min_length_pred(bounds.max_duration),
        max_length_pred(bounds.max_duration),
        duration_not_short_pred(),
        duration_short_pred(),
        x_pos_gt_pred(bounds.x_min, bounds.x_max),
        x_pos_lt_pred(bounds.x_min, bounds.x_max),
        y_pos_gt_pred(bounds.y_min, bounds.y_max),
        y_pos_lt_pred(bounds.y_min, bounds.y_max),
        disp_lt_pred(bounds.diagonal),
        avg_accel_gt_pred(bounds.max_accel),
        distance_lt_pred(bounds.diagonal),
        distance_gt_pred(bounds.diagonal),
        speed_ratio_gt_pred(),
        vel_gt_pred(bounds.max_speed),
    ])
    for r in regions:
        reg.register(in_region_pred(r))
    return reg


def _pad(v: float) -> float:
    return max(float(v), 1.0)


def _widen(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-9:
        return lo - 0.5, hi + 0.5
    return lo, hi
