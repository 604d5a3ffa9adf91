"""Priced range-bearing sensor models, their mountings, and the sensor library.

Every sensor reports range and bearing to landmarks inside its sensing cone.
LiDARs ride on the roof with a full field of view; radars and stereo cameras
can be mounted at any of twelve clock positions around the vehicle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Literal, Mapping, Sequence, Union

import numpy as np

from .world import Landmark, Pose2, wrap_angle

__all__ = [
    "SensorConfigError",
    "ConstantNoise",
    "StereoNoise",
    "SensorModel",
    "MountedSensor",
    "SensorLibrary",
    "SENSOR_MODELS",
    "build_default_library",
    "stereo_range_sigma",
    "visible",
    "measurement_sigmas",
    "load_library",
    "save_library",
]

TWO_PI = 2 * math.pi
CLOCK_POSITIONS = 12


class SensorConfigError(ValueError):
    """Invalid sensor model, mount or library description."""


def stereo_range_sigma(z_m: float, focal_px: float, baseline_m: float,
                       disparity_sigma_px: float = 1.0) -> float:
    """Depth standard deviation of a stereo pair at distance ``z_m``.

    dz = z**2 * sigma_d / (f * b)
    """
    if z_m < 0:
        raise SensorConfigError(f"distance must be non-negative, got {z_m!r}")
    if focal_px <= 0 or baseline_m <= 0 or disparity_sigma_px <= 0:
        raise SensorConfigError("focal length, baseline and disparity sigma must be positive")
    return z_m * z_m * disparity_sigma_px / (focal_px * baseline_m)


@dataclass(frozen=True)
class ConstantNoise:
    sigma_range_m: float


@dataclass(frozen=True)
class StereoNoise:
    baseline_m: float
    focal_px: float
    disparity_sigma_px: float = 1.0


Noise = Union[ConstantNoise, StereoNoise]
Kind = Literal["lidar", "radar", "stereo"]


@dataclass(frozen=True)
class SensorModel:
    kind: Kind
    label: str
    range_m: float
    fov_rad: float
    noise: Noise
    sigma_bearing_rad: float
    cost_usd: float

    def __post_init__(self):
        if self.kind not in ("lidar", "radar", "stereo"):
            raise SensorConfigError(f"{self.label}: unknown sensor kind {self.kind!r}")
        for name in ("range_m", "sigma_bearing_rad", "cost_usd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SensorConfigError(f"{self.label}: {name} must be positive, got {value!r}")
        if not (0 < self.fov_rad <= TWO_PI + 1e-12):
            raise SensorConfigError(f"{self.label}: fov_rad must lie in (0, 2*pi], got {self.fov_rad!r}")
        if isinstance(self.noise, ConstantNoise):
            if not (math.isfinite(self.noise.sigma_range_m) and self.noise.sigma_range_m > 0):
                raise SensorConfigError(f"{self.label}: sigma_range_m must be positive")
        elif isinstance(self.noise, StereoNoise):
            n = self.noise
            if min(n.baseline_m, n.focal_px, n.disparity_sigma_px) <= 0:
                raise SensorConfigError(f"{self.label}: stereo parameters must be positive")
            if self.kind != "stereo":
                raise SensorConfigError(f"{self.label}: stereo noise on a {self.kind}")
        else:
            raise SensorConfigError(f"{self.label}: unsupported noise model {self.noise!r}")

    @property
    def full_circle(self) -> bool:
        return self.fov_rad >= TWO_PI - 1e-12


@dataclass(frozen=True)
class MountedSensor:
    """One library entry: a sensor model fixed at a placement.

    ``clock`` is None for a roof mount, otherwise the clock position 0..11
    (0 is straight ahead, 3 the right-hand side).
    """

    id: int
    model: SensorModel
    clock: int | None = None

    def __post_init__(self):
        if self.clock is None:
            if self.model.kind != "lidar":
                raise SensorConfigError(f"{self.model.label}: only LiDARs can be roof-mounted")
        else:
            if self.model.kind == "lidar":
                raise SensorConfigError(f"{self.model.label}: LiDARs are roof-mounted only")
            if not (isinstance(self.clock, (int, np.integer)) and 0 <= self.clock < CLOCK_POSITIONS):
                raise SensorConfigError(f"clock position must be 0..11, got {self.clock!r}")

    @property
    def boresight_rad(self) -> float:
        return 0.0 if self.clock is None else -TWO_PI * self.clock / CLOCK_POSITIONS

    @property
    def cost_usd(self) -> float:
        return self.model.cost_usd

    @property
    def placement(self) -> str:
        return "roof" if self.clock is None else f"{self.clock or 12} o'clock"

    @property
    def name(self) -> str:
        return f"{self.model.label} @ {self.placement}"


class SensorLibrary(Sequence[MountedSensor]):
    """Ordered pool of mounted sensors; entry ``i`` has id ``i``."""

    def __init__(self, entries: Sequence[MountedSensor]):
        self.entries = tuple(entries)
        for i, e in enumerate(self.entries):
            if e.id != i:
                raise SensorConfigError(f"library entry {i} carries id {e.id}")
        if not self.entries:
            raise SensorConfigError("empty sensor library")

    def __getitem__(self, i):
        return self.entries[i]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[MountedSensor]:
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, SensorLibrary) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"SensorLibrary({len(self)} entries)"

    def lookup(self, ids) -> tuple[MountedSensor, ...]:
        out = []
        for i in ids:
            if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 0 <= i < len(self):
                raise SensorConfigError(f"unknown sensor id {i!r} (library has {len(self)} entries)")
            out.append(self.entries[int(i)])
        return tuple(out)

    def subset(self, ids) -> "SensorLibrary":
        """A new library of the chosen entries, renumbered 0..k-1."""
        return SensorLibrary([replace(e, id=k) for k, e in enumerate(self.lookup(ids))])


# Stereo rows carry (baseline_m, focal_px) instead of sigmas.
SENSOR_MODELS = {
    "long-range lidar": dict(kind="lidar", range_m=120.0, fov_rad=TWO_PI,
                             sigma_range_m=0.084, sigma_bearing_rad=0.00110, cost_usd=100_000.0),
    "mid-range lidar": dict(kind="lidar", range_m=100.0, fov_rad=TWO_PI,
                            sigma_range_m=0.03, sigma_bearing_rad=0.00524, cost_usd=4_000.0),
    "mid-range radar": dict(kind="radar", range_m=160.0, fov_rad=0.1,
                            sigma_range_m=0.04, sigma_bearing_rad=0.00175, cost_usd=2_830.0),
    "long-range radar": dict(kind="radar", range_m=250.0, fov_rad=0.0698,
                             sigma_range_m=0.013, sigma_bearing_rad=0.00175, cost_usd=1_493.0),
    "wide-angle stereo": dict(kind="stereo", range_m=50.0, fov_rad=math.pi / 2,
                              baseline_m=0.5371, focal_px=721.5377, cost_usd=2_990.0),
    "HD2K stereo": dict(kind="stereo", range_m=20.0, fov_rad=1.33,
                        baseline_m=0.120, focal_px=1400.0, cost_usd=449.0),
    "low-res stereo": dict(kind="stereo", range_m=20.0, fov_rad=1.52,
                           baseline_m=0.120, focal_px=350.0, cost_usd=449.0),
}


def _model(label: str, attrs: Mapping, disparity_sigma_px: float) -> SensorModel:
    attrs = dict(attrs)
    unknown = set(attrs) - {"kind", "range_m", "fov_rad", "sigma_range_m", "sigma_bearing_rad",
                            "cost_usd", "baseline_m", "focal_px", "disparity_sigma_px"}
    if unknown:
        raise SensorConfigError(f"{label}: unknown attribute(s) {sorted(unknown)}")
    if attrs["kind"] == "stereo":
        sd = attrs.get("disparity_sigma_px", disparity_sigma_px)
        if not attrs["focal_px"] > 0:
            raise SensorConfigError(f"{label}: focal_px must be positive")
        noise = StereoNoise(attrs["baseline_m"], attrs["focal_px"], sd)
        sigma_b = attrs.get("sigma_bearing_rad", sd / attrs["focal_px"])
    else:
        noise = ConstantNoise(attrs["sigma_range_m"])
        sigma_b = attrs["sigma_bearing_rad"]
    return SensorModel(attrs["kind"], label, float(attrs["range_m"]), float(attrs["fov_rad"]),
                       noise, float(sigma_b), float(attrs["cost_usd"]))


def build_default_library(disparity_sigma_px: float = 1.0,
                          overrides: Mapping[str, Mapping] | None = None) -> SensorLibrary:
    """The 62-entry library: two roof LiDARs, then five models at 12 clock positions.

    ``overrides`` maps a model label (a key of :data:`SENSOR_MODELS`) to replacement
    attribute values, e.g. ``{"HD2K stereo": {"cost_usd": 399}}``.  Stereo
    bearing noise defaults to one disparity pixel over the focal length.
    """
    if not disparity_sigma_px > 0:
        raise SensorConfigError(f"disparity_sigma_px must be positive, got {disparity_sigma_px!r}")
    overrides = dict(overrides or {})
    bad = set(overrides) - set(SENSOR_MODELS)
    if bad:
        raise SensorConfigError(f"overrides for unknown model(s) {sorted(bad)}")
    models = {}
    for label, attrs in SENSOR_MODELS.items():
        merged = {**attrs, **overrides.get(label, {})}
        if merged["kind"] != attrs["kind"]:
            raise SensorConfigError(f"{label}: cannot override the sensor kind")
        models[label] = _model(label, merged, disparity_sigma_px)

    entries = [MountedSensor(0, models["long-range lidar"]),
               MountedSensor(1, models["mid-range lidar"])]
    for label in ("mid-range radar", "long-range radar", "wide-angle stereo",
                  "HD2K stereo", "low-res stereo"):
        for k in range(CLOCK_POSITIONS):
            entries.append(MountedSensor(len(entries), models[label], k))
    return SensorLibrary(entries)


# ---------------------------------------------------------------------------
# geometry and noise


def visible(sensor: MountedSensor, pose: Pose2, landmark: Landmark) -> bool:
    dx, dy = landmark.x - pose.x, landmark.y - pose.y
    if math.hypot(dx, dy) > sensor.model.range_m:
        return False
    if sensor.model.full_circle:
        return True
    off = wrap_angle(math.atan2(dy, dx) - pose.theta - sensor.boresight_rad)
    return abs(off) <= sensor.model.fov_rad / 2


def visible_mask(sensor: MountedSensor, dist: np.ndarray, rel_bearing: np.ndarray) -> np.ndarray:
    """Vectorized :func:`visible` over precomputed distances and vehicle-frame bearings."""
    mask = dist <= sensor.model.range_m
    if not sensor.model.full_circle:
        mask &= np.abs(wrap_angle(rel_bearing - sensor.boresight_rad)) <= sensor.model.fov_rad / 2
    return mask


def measurement_sigmas(sensor: MountedSensor, z_m) -> tuple:
    """Range and bearing standard deviations for a landmark at distance ``z_m``.

    Accepts a scalar or an array of distances.
    """
    model = sensor.model
    z = np.asarray(z_m, dtype=float)
    if np.any(z <= 0):
        raise SensorConfigError(f"{sensor.name}: measurement distance must be positive")
    if isinstance(model.noise, StereoNoise):
        n = model.noise
        sr = z * z * n.disparity_sigma_px / (n.focal_px * n.baseline_m)
    else:
        sr = np.full_like(z, model.noise.sigma_range_m)
    sb = np.full_like(z, model.sigma_bearing_rad)
    if z.ndim == 0:
        return float(sr), float(sb)
    return sr, sb


# ---------------------------------------------------------------------------
# library files


def _entry_to_dict(e: MountedSensor) -> dict:
    m = e.model
    if isinstance(m.noise, StereoNoise):
        noise = {"type": "stereo", "baseline_m": m.noise.baseline_m, "focal_px": m.noise.focal_px,
                 "disparity_sigma_px": m.noise.disparity_sigma_px}
    else:
        noise = {"type": "constant", "sigma_range_m": m.noise.sigma_range_m}
    return {"label": m.label, "kind": m.kind, "range_m": m.range_m, "fov_rad": m.fov_rad,
            "sigma_bearing_rad": m.sigma_bearing_rad, "cost_usd": m.cost_usd, "noise": noise,
            "mount": "roof" if e.clock is None else e.clock}


def _entry_from_dict(i: int, d) -> MountedSensor:
    where = f"library[{i}]"
    if not isinstance(d, dict):
        raise SensorConfigError(f"{where}: expected an object")
    try:
        noise = d["noise"]
        if noise["type"] == "stereo":
            nm = StereoNoise(float(noise["baseline_m"]), float(noise["focal_px"]),
                             float(noise.get("disparity_sigma_px", 1.0)))
        elif noise["type"] == "constant":
            nm = ConstantNoise(float(noise["sigma_range_m"]))
        else:
            raise SensorConfigError(f"{where}.noise.type: unknown noise type {noise['type']!r}")
        sigma_b = d.get("sigma_bearing_rad")
        if sigma_b is None and isinstance(nm, StereoNoise) and nm.focal_px > 0:
            sigma_b = nm.disparity_sigma_px / nm.focal_px
        model = SensorModel(d["kind"], str(d.get("label", d["kind"])), float(d["range_m"]),
                            float(d["fov_rad"]), nm, float(sigma_b), float(d["cost_usd"]))
        mount = d["mount"]
    except KeyError as exc:
        raise SensorConfigError(f"{where}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise SensorConfigError(f"{where}: {exc}") from None
    if mount == "roof":
        clock = None
    elif isinstance(mount, int) and not isinstance(mount, bool):
        clock = 0 if mount == 12 else mount
    else:
        raise SensorConfigError(f"{where}.mount: expected 'roof' or a clock position, got {mount!r}")
    try:
        return MountedSensor(i, model, clock)
    except SensorConfigError as exc:
        raise SensorConfigError(f"{where}: {exc}") from None


def load_library(path) -> SensorLibrary:
    """Read a library file: a JSON array of mounted sensor descriptions."""
    path = Path(path)
    if not path.is_file():
        raise SensorConfigError(f"{path}: no such library file")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SensorConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise SensorConfigError(f"{path}: expected a JSON array of sensors")
    return SensorLibrary([_entry_from_dict(i, d) for i, d in enumerate(data)])


def save_library(library: SensorLibrary, path) -> None:
    Path(path).write_text(json.dumps([_entry_to_dict(e) for e in library], indent=1) + "\n",
                          encoding="utf-8")
