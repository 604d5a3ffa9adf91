"""Scenarios: ground-truth 2D trajectories plus landmark maps.

A scenario is the world a sensor suite is evaluated against.  Scenarios can
be loaded from JSON files (for landmarks extracted by an external front-end)
or synthesized: a gently curving suburban corridor with close-range
landmarks, and a multi-lap urban circuit with distant landmarks and loop
closures.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ScenarioError",
    "Pose2",
    "Landmark",
    "Scenario",
    "TimePeriod",
    "wrap_angle",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "synth_linear_scenario",
    "synth_loop_scenario",
    "time_periods",
    "bundled_scenario",
    "BUNDLED",
]


class ScenarioError(ValueError):
    """Invalid scenario data or generator arguments."""


def wrap_angle(a):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    if np.isscalar(a):
        return math.pi - (math.pi - a) % (2 * math.pi)
    return math.pi - np.mod(math.pi - np.asarray(a, dtype=float), 2 * math.pi)


@dataclass(frozen=True)
class Pose2:
    t: float
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(float(self.theta))))


@dataclass(frozen=True)
class Landmark:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class TimePeriod:
    """A contiguous block of pose indices ``start <= i < stop``."""

    index: int
    start: int
    stop: int

    @property
    def pose_range(self) -> range:
        return range(self.start, self.stop)

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class Scenario:
    name: str
    poses: tuple[Pose2, ...]
    landmarks: tuple[Landmark, ...]

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        if len(self.poses) < 2:
            raise ScenarioError(f"scenario {self.name!r} needs at least 2 poses, got {len(self.poses)}")
        if len(self.landmarks) < 1:
            raise ScenarioError(f"scenario {self.name!r} needs at least 1 landmark")
        for i in range(1, len(self.poses)):
            if not self.poses[i].t > self.poses[i - 1].t:
                raise ScenarioError(
                    f"poses[{i}].t: timestamps must be strictly increasing "
                    f"({self.poses[i - 1].t!r} -> {self.poses[i].t!r})")
        seen = set()
        for j, lm in enumerate(self.landmarks):
            if lm.id < 0:
                raise ScenarioError(f"landmarks[{j}].id: negative landmark id {lm.id}")
            if lm.id in seen:
                raise ScenarioError(f"landmarks[{j}].id: duplicate landmark id {lm.id}")
            seen.add(lm.id)

    @cached_property
    def pose_array(self) -> np.ndarray:
        """(N, 4) array of ``t, x, y, theta``."""
        return np.array([(p.t, p.x, p.y, p.theta) for p in self.poses], dtype=float)

    @cached_property
    def landmark_array(self) -> np.ndarray:
        """(L, 2) array of landmark positions in scenario order."""
        return np.array([(lm.x, lm.y) for lm in self.landmarks], dtype=float)

    @property
    def duration(self) -> float:
        return self.poses[-1].t - self.poses[0].t


# ---------------------------------------------------------------------------
# serialization


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ScenarioError(f"{where}: non-finite value {value!r}")
    return float(value)


def _record(obj, keys: Sequence[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ScenarioError(f"{where}: missing field(s) {', '.join(missing)}")
    return obj


def scenario_from_dict(data) -> Scenario:
    doc = _record(data, ("name", "poses", "landmarks"), "scenario")
    if not isinstance(doc["name"], str):
        raise ScenarioError("name: expected a string")
    if not isinstance(doc["poses"], list):
        raise ScenarioError("poses: expected an array")
    if not isinstance(doc["landmarks"], list):
        raise ScenarioError("landmarks: expected an array")
    poses = []
    for i, p in enumerate(doc["poses"]):
        where = f"poses[{i}]"
        p = _record(p, ("t", "x", "y", "theta"), where)
        poses.append(Pose2(*(_number(p[k], f"{where}.{k}") for k in ("t", "x", "y", "theta"))))
    landmarks = []
    for j, lm in enumerate(doc["landmarks"]):
        where = f"landmarks[{j}]"
        lm = _record(lm, ("id", "x", "y"), where)
        lid = lm["id"]
        if isinstance(lid, bool) or not isinstance(lid, int):
            raise ScenarioError(f"{where}.id: expected an integer")
        landmarks.append(Landmark(lid, _number(lm["x"], f"{where}.x"), _number(lm["y"], f"{where}.y")))
    return Scenario(doc["name"], tuple(poses), tuple(landmarks))


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "poses": [{"t": p.t, "x": p.x, "y": p.y, "theta": p.theta} for p in scenario.poses],
        "landmarks": [{"id": lm.id, "x": lm.x, "y": lm.y} for lm in scenario.landmarks],
    }


def load_scenario(path) -> Scenario:
    """Read a scenario JSON file, validating every field."""
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"{path}: no such scenario file")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# generators


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ScenarioError(f"{name} must be positive, got {value!r}")


def _count(**kwargs):
    for name, value in kwargs.items():
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ScenarioError(f"{name} must be an integer >= 1, got {value!r}")


def _poses(xy: np.ndarray, heading: np.ndarray, rate_hz: float) -> tuple[Pose2, ...]:
    return tuple(Pose2(i / rate_hz, float(x), float(y), float(h))
                 for i, ((x, y), h) in enumerate(zip(xy, heading)))


def _point_on_polyline(xy: np.ndarray, u: float):
    """Point at arclength ``u`` along a polyline plus the unit left normal there."""
    seg = np.diff(xy, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    k = int(np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(seg) - 1))
    frac = (u - cum[k]) / seglen[k]
    p = xy[k] + frac * seg[k]
    d = seg[k] / seglen[k]
    return p, np.array([-d[1], d[0]])


def distance_to_polyline(points: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Euclidean distance from each of ``points`` (K, 2) to the polyline ``xy`` (N, 2)."""
    a = xy[:-1][None, :, :]
    ab = (xy[1:] - xy[:-1])[None, :, :]
    ap = points[:, None, :] - a
    denom = np.maximum(np.sum(ab * ab, axis=2), 1e-300)
    s = np.clip(np.sum(ap * ab, axis=2) / denom, 0.0, 1.0)
    closest = a + s[..., None] * ab
    return np.min(np.hypot(*(points[:, None, :] - closest).transpose(2, 0, 1)), axis=1)


def synth_linear_scenario(length_m: float = 300.0, pose_spacing_m: float = 2.0,
                          landmark_count: int = 120, corridor_halfwidth_m: float = 15.0,
                          seed: int = 0, *, pose_rate_hz: float = 1.0,
                          name: str | None = None) -> Scenario:
    """Suburban-style scenario: a long, gently curving road.

    Landmarks are dropped uniformly along the route with a lateral offset of
    at most ``corridor_halfwidth_m``, so from the vehicle they sit mostly
    ahead and behind at close range.
    """
    _positive(length_m=length_m, pose_spacing_m=pose_spacing_m,
              corridor_halfwidth_m=corridor_halfwidth_m, pose_rate_hz=pose_rate_hz)
    _count(landmark_count=landmark_count)
    n = max(2, int(math.floor(length_m / pose_spacing_m + 1e-9)) + 1)
    s = np.arange(n) * pose_spacing_m

    # heading oscillates slowly; integrate position on a fine arclength grid
    def heading(u):
        return 0.15 * np.sin(2 * math.pi * u / 200.0)

    sub = 16
    fine = np.linspace(0.0, s[-1], (n - 1) * sub + 1)
    h = heading(fine)
    dx = np.diff(fine) * np.cos(0.5 * (h[1:] + h[:-1]))
    dy = np.diff(fine) * np.sin(0.5 * (h[1:] + h[:-1]))
    x = np.concatenate([[0.0], np.cumsum(dx)])[::sub]
    y = np.concatenate([[0.0], np.cumsum(dy)])[::sub]
    xy = np.column_stack([x, y])
    poses = _poses(xy, heading(s), pose_rate_hz)

    rng = np.random.default_rng(seed)
    total = float(np.sum(np.hypot(*np.diff(xy, axis=0).T)))
    lo = min(1.0, 0.5 * corridor_halfwidth_m)
    landmarks = []
    for j in range(landmark_count):
        u = rng.uniform(0.0, total)
        offset = rng.uniform(lo, corridor_halfwidth_m) * (1.0 if rng.random() < 0.5 else -1.0)
        p, normal = _point_on_polyline(xy, u)
        q = p + offset * normal
        landmarks.append(Landmark(j, float(q[0]), float(q[1])))
    return Scenario(name or f"linear-s{seed}", poses, tuple(landmarks))


def _rounded_rectangle(width: float, height: float, radius: float):
    """Arclength-parametrized counter-clockwise rounded rectangle centred at the origin."""
    a, b = width / 2 - radius, height / 2 - radius
    # (kind, length, start point or arc centre, start heading)
    segs = []
    for k, (cx, cy) in enumerate([(a, -b), (a, b), (-a, b), (-a, -b)]):
        h0 = k * math.pi / 2
        straight = 2 * a if k % 2 == 0 else 2 * b
        start = np.array([cx, cy]) + radius * np.array([math.sin(h0), -math.cos(h0)]) \
            - straight * np.array([math.cos(h0), math.sin(h0)])
        segs.append(("line", straight, start, h0))
        segs.append(("arc", radius * math.pi / 2, np.array([cx, cy]), h0))
    perimeter = sum(length for _, length, _, _ in segs)

    def at(u: float):
        u = u % perimeter
        for k, (kind, length, ref, h0) in enumerate(segs):
            if u <= length or k == len(segs) - 1:
                if kind == "line":
                    d = np.array([math.cos(h0), math.sin(h0)])
                    return ref + u * d, h0
                phi = h0 - math.pi / 2 + u / radius
                return ref + radius * np.array([math.cos(phi), math.sin(phi)]), h0 + u / radius
            u -= length
        raise AssertionError("unreachable")

    return at, perimeter


def synth_loop_scenario(loop_count: int = 2, landmark_count: int = 200,
                        mean_landmark_range_m: float = 40.0, seed: int = 0, *,
                        width_m: float = 160.0, height_m: float = 100.0,
                        corner_radius_m: float = 20.0, pose_spacing_m: float = 2.0,
                        pose_rate_hz: float = 1.0, name: str | None = None) -> Scenario:
    """Urban-style scenario: laps of a rounded-rectangle circuit.

    Every lap after the first revisits earlier positions, giving loop
    closures.  Landmarks sit on both sides of the circuit at offsets drawn
    uniformly from ``[0.25, 1.75] * mean_landmark_range_m``; draws that end up
    markedly closer to another stretch of road are redrawn so the realized
    mean distance tracks the requested one.
    """
    _count(loop_count=loop_count, landmark_count=landmark_count)
    _positive(mean_landmark_range_m=mean_landmark_range_m, width_m=width_m, height_m=height_m,
              corner_radius_m=corner_radius_m, pose_spacing_m=pose_spacing_m,
              pose_rate_hz=pose_rate_hz)
    if 2 * corner_radius_m > min(width_m, height_m):
        raise ScenarioError("corner_radius_m must be at most half the circuit's smaller side")
    at, perimeter = _rounded_rectangle(width_m, height_m, corner_radius_m)
    n = int(round(loop_count * perimeter / pose_spacing_m)) + 1
    s = np.linspace(0.0, loop_count * perimeter, n)
    pts = [at(u) for u in s]
    xy = np.array([p for p, _ in pts])
    poses = _poses(xy, np.array([h for _, h in pts]), pose_rate_hz)

    lap = xy[: int(round(perimeter / pose_spacing_m)) + 1]
    rng = np.random.default_rng(seed)
    r = mean_landmark_range_m
    landmarks = []
    while len(landmarks) < landmark_count:
        for _ in range(1000):
            u = rng.uniform(0.0, perimeter)
            side = 1.0 if rng.random() < 0.5 else -1.0
            d = rng.uniform(0.25 * r, 1.75 * r)
            p, h = at(u)
            q = p + side * d * np.array([-math.sin(h), math.cos(h)])
            if distance_to_polyline(q[None, :], lap)[0] >= 0.8 * d:
                break
        landmarks.append(Landmark(len(landmarks), float(q[0]), float(q[1])))
    return Scenario(name or f"loop-s{seed}", poses, tuple(landmarks))


# ---------------------------------------------------------------------------
# time periods


def time_periods(scenario: Scenario, period_s: float = 5.0) -> list[TimePeriod]:
    """Partition pose indices into consecutive buckets ``period_s`` seconds wide.

    Buckets are anchored at the first timestamp; buckets that receive no
    pose simply vanish, so every returned period is non-empty.
    """
    if not (isinstance(period_s, (int, float)) and math.isfinite(period_s) and period_s > 0):
        raise ScenarioError(f"period_s must be positive, got {period_s!r}")
    t = scenario.pose_array[:, 0]
    buckets = np.floor((t - t[0]) / period_s + 1e-9).astype(np.int64)
    cuts = np.flatnonzero(np.diff(buckets)) + 1
    bounds = [0, *cuts.tolist(), len(t)]
    return [TimePeriod(k, bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1)]


# ---------------------------------------------------------------------------
# bundled scenarios

#: generator settings behind the scenario files shipped in ``suiteopt/data``
BUNDLED = {
    "linear03": (synth_linear_scenario,
                 dict(length_m=300.0, pose_spacing_m=2.0, landmark_count=120,
                      corridor_halfwidth_m=15.0, seed=3, name="linear03")),
    "loop00": (synth_loop_scenario,
               dict(loop_count=2, landmark_count=200, mean_landmark_range_m=40.0, seed=0,
                    pose_spacing_m=4.0, name="loop00")),
}


def bundled_scenario(name: str) -> Scenario:
    """Load one of the scenarios shipped with the package (``linear03``, ``loop00``)."""
    if name not in BUNDLED:
        raise ScenarioError(f"unknown bundled scenario {name!r}; choose from {sorted(BUNDLED)}")
    with resources.as_file(resources.files("suiteopt") / "data" / f"{name}.json") as path:
        return load_scenario(path)


def regenerate_bundled(names: Iterable[str] | None = None, directory=None) -> list[Path]:
    """Rewrite the bundled scenario files from their generator settings."""
    directory = Path(directory) if directory else Path(__file__).parent / "data"
    written = []
    for key in names or BUNDLED:
        fn, kwargs = BUNDLED[key]
        path = directory / f"{key}.json"
        save_scenario(fn(**kwargs), path)
        written.append(path)
    return written
