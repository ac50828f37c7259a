"""Multi-object trajectory data model, dataset I/O, and track pairing."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class ParseError(ValueError):
    """A record in a dataset file could not be parsed."""


class SchemaError(ValueError):
    """A dataset file violates the structural schema (e.g. ragged frames)."""


@dataclass(frozen=True)
class ObjectState:
    """One tracked object in one frame. Units: meters, m/s, m/s^2."""

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    present: bool = True


@dataclass(frozen=True)
class State:
    """Simultaneous states of all m tracked objects in one frame."""

    objects: tuple[ObjectState, ...]


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class Trajectory:
    """Immutable sequence of multi-object states backed by numpy arrays.

    Arrays are shaped (n, m, 2) for pos/vel/acc and (n, m) for the presence
    mask. Subtrajectories are cheap views sharing the parent's buffers.
    """

    __slots__ = ("id", "frame_rate", "pos", "vel", "acc", "present", "_cache")

    def __init__(self, id: str, frame_rate: float, pos, vel, acc, present):
        if frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        pos = np.asarray(pos, dtype=np.float64)
        if pos.ndim != 3:
            pos = pos.reshape(len(pos), -1, 2)
        pos = _as_readonly(pos)
        if pos.shape[0] > 0 and pos.shape[1] < 1:
            raise ValueError("object count must be >= 1")
        vel = _as_readonly(np.asarray(vel, dtype=np.float64).reshape(pos.shape))
        acc = _as_readonly(np.asarray(acc, dtype=np.float64).reshape(pos.shape))
        pres = np.asarray(present, dtype=bool).reshape(pos.shape[:2])
        pres.flags.writeable = False
        for name, a in (("pos", pos), ("vel", vel), ("acc", acc)):
            if a[pres].size and not np.isfinite(a[pres]).all():
                raise ValueError(f"non-finite {name} values on present frames")
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "frame_rate", float(frame_rate))
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "vel", vel)
        object.__setattr__(self, "acc", acc)
        object.__setattr__(self, "present", pres)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("Trajectory is immutable")

    @classmethod
    def from_arrays(
        cls,
        id: str,
        frame_rate: float,
        pos,
        vel=None,
        acc=None,
        present=None,
    ) -> "Trajectory":
        """Build a trajectory, deriving velocity/acceleration when missing.

        Derivation uses forward finite differences scaled by frame_rate; the
        last frame copies the previous value.
        """
        pos = np.asarray(pos, dtype=np.float64)
        if pos.ndim == 2:  # single object convenience: (n, 2)
            pos = pos[:, None, :]
        n = pos.shape[0]
        if vel is None:
            vel = _forward_diff(pos, frame_rate)
        if acc is None:
            acc = _forward_diff(np.asarray(vel, dtype=np.float64).reshape(pos.shape), frame_rate)
        if present is None:
            present = np.ones(pos.shape[:2], dtype=bool)
        else:
            present = np.asarray(present, dtype=bool)
            if present.ndim == 1:
                present = present[:, None]
        return cls(id, frame_rate, pos, vel, acc, present)

    @classmethod
    def from_states(cls, id: str, states: Sequence[State], frame_rate: float) -> "Trajectory":
        if not states:
            return cls(id, frame_rate, np.zeros((0, 1, 2)), np.zeros((0, 1, 2)),
                       np.zeros((0, 1, 2)), np.ones((0, 1), dtype=bool))
        m = len(states[0].objects)
        if any(len(s.objects) != m for s in states):
            raise SchemaError("inconsistent object count across states")
        pos = [[(o.x, o.y) for o in s.objects] for s in states]
        vel = [[(o.vx, o.vy) for o in s.objects] for s in states]
        acc = [[(o.ax, o.ay) for o in s.objects] for s in states]
        pres = [[o.present for o in s.objects] for s in states]
        return cls(id, frame_rate, pos, vel, acc, pres)

    def __len__(self) -> int:
        return self.pos.shape[0]

    @property
    def object_count(self) -> int:
        return self.pos.shape[1] if self.pos.size or self.pos.shape[0] == 0 else 1

    def state(self, t: int) -> State:
        objs = tuple(
            ObjectState(
                x=float(self.pos[t, k, 0]), y=float(self.pos[t, k, 1]),
                vx=float(self.vel[t, k, 0]), vy=float(self.vel[t, k, 1]),
                ax=float(self.acc[t, k, 0]), ay=float(self.acc[t, k, 1]),
                present=bool(self.present[t, k]),
            )
            for k in range(self.pos.shape[1])
        )
        return State(objs)

    @property
    def states(self) -> tuple[State, ...]:
        return tuple(self.state(t) for t in range(len(self)))

    def subtrajectory(self, i: int, j: int) -> "Trajectory":
        """Return the view (z_i, ..., z_{j-1}); i == j yields an empty trajectory."""
        n = len(self)
        if not (0 <= i <= j <= n):
            raise IndexError(f"subtrajectory bounds [{i}, {j}) out of range for length {n}")
        return Trajectory(
            self.id, self.frame_rate,
            self.pos[i:j], self.vel[i:j], self.acc[i:j], self.present[i:j],
        )

    def equal_data(self, other: "Trajectory") -> bool:
        return (
            self.id == other.id
            and self.frame_rate == other.frame_rate
            and self.pos.shape == other.pos.shape
            and np.array_equal(self.pos, other.pos)
            and np.array_equal(self.vel, other.vel)
            and np.array_equal(self.acc, other.acc)
            and np.array_equal(self.present, other.present)
        )

    def __repr__(self) -> str:
        return f"Trajectory({self.id!r}, n={len(self)}, m={self.pos.shape[1]})"


def _forward_diff(a: np.ndarray, frame_rate: float) -> np.ndarray:
    out = np.zeros_like(a)
    if a.shape[0] >= 2:
        out[:-1] = (a[1:] - a[:-1]) * frame_rate
        out[-1] = out[-2]
    return out


def subtrajectory(z: Trajectory, i: int, j: int) -> Trajectory:
    return z.subtrajectory(i, j)


@dataclass
class Dataset:
    """A collection of equally-shaped trajectories with optional 0/1 labels."""

    trajectories: list[Trajectory]
    object_count: int
    labels: dict[str, int] | None = None
    frame_rate: float = 0.0

    def __post_init__(self):
        if self.frame_rate <= 0:
            if self.trajectories:
                self.frame_rate = self.trajectories[0].frame_rate
            else:
                self.frame_rate = 1.0
        for z in self.trajectories:
            if z.pos.shape[1] != self.object_count:
                raise SchemaError(
                    f"trajectory {z.id!r} has {z.pos.shape[1]} objects, expected {self.object_count}"
                )
            if z.frame_rate != self.frame_rate:
                raise SchemaError(f"trajectory {z.id!r} frame_rate differs from dataset")
        if self.labels:
            ids = {z.id for z in self.trajectories}
            for tid in self.labels:
                if tid not in ids:
                    raise SchemaError(f"label refers to unknown trajectory {tid!r}")

    def by_id(self, tid: str) -> Trajectory:
        for z in self.trajectories:
            if z.id == tid:
                return z
        raise KeyError(tid)

    def labeled_pairs(self) -> list[tuple[Trajectory, int]]:
        if not self.labels:
            return []
        return [(z, self.labels[z.id]) for z in self.trajectories if z.id in self.labels]

    def equal_data(self, other: "Dataset") -> bool:
        return (
            self.object_count == other.object_count
            and self.frame_rate == other.frame_rate
            and (self.labels or {}) == (other.labels or {})
            and len(self.trajectories) == len(other.trajectories)
            and all(a.equal_data(b) for a, b in zip(self.trajectories, other.trajectories))
        )


def split_dataset(ds: Dataset, fraction: float = 0.5) -> tuple[Dataset, Dataset]:
    """Split into train/test by file order (the stream-time convention)."""
    cut = int(round(len(ds.trajectories) * fraction))
    head, tail = ds.trajectories[:cut], ds.trajectories[cut:]
    lab = ds.labels or {}
    return (
        Dataset(head, ds.object_count, {z.id: lab[z.id] for z in head if z.id in lab}, ds.frame_rate),
        Dataset(tail, ds.object_count, {z.id: lab[z.id] for z in tail if z.id in lab}, ds.frame_rate),
    )


# ---------------------------------------------------------------------------
# JSON format

_FIELDS = ("x", "y", "vx", "vy", "ax", "ay")


def dataset_to_json_obj(ds: Dataset) -> dict:
    trajs = []
    for z in ds.trajectories:
        frames = []
        for t in range(len(z)):
            row = []
            for k in range(ds.object_count):
                entry = {
                    "x": float(z.pos[t, k, 0]), "y": float(z.pos[t, k, 1]),
                    "vx": float(z.vel[t, k, 0]), "vy": float(z.vel[t, k, 1]),
                    "ax": float(z.acc[t, k, 0]), "ay": float(z.acc[t, k, 1]),
                    "present": bool(z.present[t, k]),
                }
                row.append(entry)
            frames.append(row)
        label = None if not ds.labels or z.id not in ds.labels else int(ds.labels[z.id])
        trajs.append({"id": z.id, "label": label, "frames": frames})
    return {
        "object_count": ds.object_count,
        "frame_rate": ds.frame_rate,
        "trajectories": trajs,
    }


def dumps_dataset(ds: Dataset) -> str:
    return json.dumps(dataset_to_json_obj(ds), sort_keys=True, indent=2) + "\n"


def _require(cond: bool, msg: str, exc=SchemaError):
    if not cond:
        raise exc(msg)


def dataset_from_json_obj(obj: dict) -> Dataset:
    _require(isinstance(obj, dict), "top-level JSON value must be an object")
    for key in ("object_count", "frame_rate", "trajectories"):
        _require(key in obj, f"missing top-level key {key!r}")
    m = int(obj["object_count"])
    fr = float(obj["frame_rate"])
    _require(m >= 1, "object_count must be >= 1")
    _require(fr > 0, "frame_rate must be positive")
    trajs: list[Trajectory] = []
    labels: dict[str, int] = {}
    for rec in obj["trajectories"]:
        _require(isinstance(rec, dict) and "id" in rec and "frames" in rec,
                 "trajectory record needs 'id' and 'frames'")
        tid = str(rec["id"])
        frames = rec["frames"]
        n = len(frames)
        pos = np.zeros((n, m, 2))
        vel = np.full((n, m, 2), np.nan)
        acc = np.full((n, m, 2), np.nan)
        pres = np.ones((n, m), dtype=bool)
        for t, row in enumerate(frames):
            _require(len(row) == m, f"trajectory {tid!r} frame {t} has {len(row)} objects, expected {m}")
            for k, entry in enumerate(row):
                try:
                    pos[t, k] = (float(entry["x"]), float(entry["y"]))
                except (KeyError, TypeError, ValueError) as e:
                    raise SchemaError(f"trajectory {tid!r} frame {t} object {k}: bad position ({e})")
                if "vx" in entry or "vy" in entry:
                    vel[t, k] = (float(entry.get("vx", 0.0)), float(entry.get("vy", 0.0)))
                if "ax" in entry or "ay" in entry:
                    acc[t, k] = (float(entry.get("ax", 0.0)), float(entry.get("ay", 0.0)))
                pres[t, k] = bool(entry.get("present", True))
        vel_arg = None if np.isnan(vel).all() else np.nan_to_num(vel)
        acc_arg = None if np.isnan(acc).all() else np.nan_to_num(acc)
        trajs.append(Trajectory.from_arrays(tid, fr, pos, vel_arg, acc_arg, pres))
        if rec.get("label") is not None:
            labels[tid] = int(rec["label"])
    return Dataset(trajs, m, labels or None, fr)


# ---------------------------------------------------------------------------
# CSV format
#
# Carries the metadata the row schema cannot: a leading comment line with
# object_count/frame_rate and a trailing per-row label column.

_CSV_HEADER = [
    "trajectory_id", "frame_index", "object_index",
    "x", "y", "vx", "vy", "ax", "ay", "present", "label",
]


def dumps_dataset_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(f"# object_count={ds.object_count} frame_rate={ds.frame_rate!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_HEADER)
    for z in ds.trajectories:
        label = "" if not ds.labels or z.id not in ds.labels else str(int(ds.labels[z.id]))
        for t in range(len(z)):
            for k in range(ds.object_count):
                w.writerow([
                    z.id, t, k,
                    repr(float(z.pos[t, k, 0])), repr(float(z.pos[t, k, 1])),
                    repr(float(z.vel[t, k, 0])), repr(float(z.vel[t, k, 1])),
                    repr(float(z.acc[t, k, 0])), repr(float(z.acc[t, k, 1])),
                    "1" if z.present[t, k] else "0", label,
                ])
    return buf.getvalue()


def loads_dataset_csv(text: str) -> Dataset:
    lines = text.splitlines()
    _require(bool(lines) and lines[0].startswith("#"), "missing metadata comment line", ParseError)
    meta = dict(part.split("=", 1) for part in lines[0][1:].split())
    try:
        m = int(meta["object_count"])
        fr = float(meta["frame_rate"])
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad metadata line: {e}")
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    _require(header == _CSV_HEADER, "unexpected CSV header", ParseError)
    per_traj: dict[str, dict[tuple[int, int], list[str]]] = {}
    order: list[str] = []
    labels: dict[str, int] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            raise ParseError(f"row has {len(row)} fields, expected {len(_CSV_HEADER)}")
        tid = row[0]
        try:
            t, k = int(row[1]), int(row[2])
        except ValueError as e:
            raise ParseError(f"bad indices in row for {tid!r}: {e}")
        if tid not in per_traj:
            per_traj[tid] = {}
            order.append(tid)
        per_traj[tid][(t, k)] = row
        if row[10] != "":
            labels[tid] = int(row[10])
    trajs = []
    for tid in order:
        cells = per_traj[tid]
        n = max((t for t, _ in cells), default=-1) + 1
        pos = np.zeros((n, m, 2))
        vel = np.zeros((n, m, 2))
        acc = np.zeros((n, m, 2))
        pres = np.ones((n, m), dtype=bool)
        for t in range(n):
            for k in range(m):
                row = cells.get((t, k))
                _require(row is not None, f"trajectory {tid!r} missing cell ({t}, {k})")
                try:
                    pos[t, k] = (float(row[3]), float(row[4]))
                    vel[t, k] = (float(row[5]), float(row[6]))
                    acc[t, k] = (float(row[7]), float(row[8]))
                except ValueError as e:
                    raise ParseError(f"bad float in row for {tid!r}: {e}")
                pres[t, k] = row[9] == "1"
        trajs.append(Trajectory(tid, fr, pos, vel, acc, pres))
    return Dataset(trajs, m, labels or None, fr)


def save_dataset(ds: Dataset, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    text = dumps_dataset_csv(ds) if fmt == "csv" else dumps_dataset(ds)
    path.write_text(text)


def load_dataset(path: str | Path, format: str | None = None) -> Dataset:
    """Load a dataset file; format inferred from the extension unless given."""
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    text = path.read_text()
    if fmt == "csv":
        return loads_dataset_csv(text)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(str(e))
    return dataset_from_json_obj(obj)


# ---------------------------------------------------------------------------
# Pair formation

def _span(track: Trajectory) -> tuple[int, int] | None:
    idx = np.flatnonzero(track.present[:, 0])
    if idx.size == 0:
        return None
    return int(idx[0]), int(idx[-1]) + 1


def form_pairs(tracks: Sequence[Trajectory], min_overlap: int = 1) -> list[Trajectory]:
    """Pair single-object tracks that overlap in time on a shared clock.

    Emits both orderings (A,B) and (B,A) since two-object predicates are
    asymmetric. The paired trajectory covers the union span, with
    present=False wherever a track is untracked.
    """
    rates = {z.frame_rate for z in tracks}
    if len(rates) > 1:
        raise ValueError("all tracks must share a frame rate")
    out: list[Trajectory] = []
    spans = [(_span(z), z) for z in tracks]
    for ia, (sa, a) in enumerate(spans):
        for ib, (sb, b) in enumerate(spans):
            if ia == ib or sa is None or sb is None:
                continue
            overlap = min(sa[1], sb[1]) - max(sa[0], sb[0])
            if overlap < min_overlap:
                continue
            start, stop = min(sa[0], sb[0]), max(sa[1], sb[1])
            n = stop - start
            pos = np.zeros((n, 2, 2))
            vel = np.zeros((n, 2, 2))
            acc = np.zeros((n, 2, 2))
            pres = np.zeros((n, 2), dtype=bool)
            for col, z in ((0, a), (1, b)):
                lo = max(start, 0)
                hi = min(stop, len(z))
                if hi > lo:
                    dst = slice(lo - start, hi - start)
                    src = slice(lo, hi)
                    pos[dst, col] = z.pos[src, 0]
                    vel[dst, col] = z.vel[src, 0]
                    acc[dst, col] = z.acc[src, 0]
                    pres[dst, col] = z.present[src, 0]
            out.append(Trajectory(f"{a.id}|{b.id}", a.frame_rate, pos, vel, acc, pres))
    return out
