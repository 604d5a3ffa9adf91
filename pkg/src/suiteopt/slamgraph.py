"""Linearized 2D landmark SLAM: whitened Jacobians, log-det scores, and solves.

The factor graph of a scenario (pose prior, odometry chain, range-bearing
landmark observations) is linearized at ground truth and whitened, giving
the least-squares system ``min ||A x - b||``.  A sensor suite is scored by
``log det(A^T A)``, read off the diagonal of the upper-triangular factor
``R`` with ``R^T R = A^T A``.

Scoring the same scenario under many suites is the hot path of every search
strategy, so :class:`Evaluator` caches each sensor's measurement rows and
information contribution per scenario window.  The information matrix is
additive over sensors, which lets a greedy round extend one partially summed
matrix instead of re-stacking Jacobians.
"""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack, solve_triangular

from .sensors import MountedSensor, measurement_sigmas, visible_mask
from .world import Scenario, ScenarioError, TimePeriod, wrap_angle

__all__ = [
    "SingularSystemError",
    "NoiseConfig",
    "VariableOrdering",
    "FactorBlock",
    "LinearSystem",
    "EvalScore",
    "SolveReport",
    "Schedule",
    "Evaluator",
    "build_system",
    "log_det_information",
    "logdet_spd",
    "evaluate",
    "simulate_and_solve",
]


class SingularSystemError(np.linalg.LinAlgError):
    """The information matrix is not positive definite."""


@dataclass(frozen=True)
class NoiseConfig:
    """Noise levels for the factors that do not come from the sensor suite."""

    odometry_sigmas: tuple[float, float, float] = (0.05, 0.05, 0.005)
    prior_sigmas: tuple[float, float, float] = (1e-3, 1e-3, 1e-4)
    landmark_precision: float = 1e-6

    def __post_init__(self):
        if min(self.odometry_sigmas) <= 0 or min(self.prior_sigmas) <= 0:
            raise ValueError("odometry and prior sigmas must be positive")
        if not self.landmark_precision > 0:
            raise ValueError("landmark_precision must be positive")


@dataclass(frozen=True)
class VariableOrdering:
    """Column layout: 3 columns (x, y, theta) per pose, then 2 (x, y) per landmark."""

    pose_start: int
    pose_stop: int
    landmark_ids: tuple[int, ...]

    @property
    def n_poses(self) -> int:
        return self.pose_stop - self.pose_start

    @property
    def n(self) -> int:
        return 3 * self.n_poses + 2 * len(self.landmark_ids)

    @property
    def pose_offsets(self) -> dict[int, int]:
        return {i: 3 * (i - self.pose_start) for i in range(self.pose_start, self.pose_stop)}

    @property
    def landmark_offsets(self) -> dict[int, int]:
        base = 3 * self.n_poses
        return {lid: base + 2 * k for k, lid in enumerate(self.landmark_ids)}

    def describe_column(self, col: int) -> str:
        if col < 3 * self.n_poses:
            return f"pose {self.pose_start + col // 3} ({'x y theta'.split()[col % 3]})"
        k, c = divmod(col - 3 * self.n_poses, 2)
        return f"landmark {self.landmark_ids[k]} ({'xy'[c]})"


@dataclass(frozen=True)
class FactorBlock:
    """Rows ``start:stop`` of a system came from one factor family (and sensor)."""

    kind: str  # prior | odometry | measurement | landmark-prior
    start: int
    stop: int
    sensor_id: int | None = None


@dataclass
class LinearSystem:
    A: sp.csr_matrix
    b: np.ndarray
    ordering: VariableOrdering
    factor_rows: tuple[FactorBlock, ...]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def noisy_rows(self) -> np.ndarray:
        """Mask of rows that model real measurements (odometry and sensor observations)."""
        mask = np.zeros(self.m, dtype=bool)
        for blk in self.factor_rows:
            if blk.kind in ("odometry", "measurement"):
                mask[blk.start:blk.stop] = True
        return mask


@dataclass(frozen=True)
class EvalScore:
    logdet: float
    n: int
    rows: int

    def to_dict(self) -> dict:
        return {"logdet": self.logdet, "n": self.n, "rows": self.rows}


@dataclass
class SolveReport:
    poses: np.ndarray       # (N, 4) estimated t, x, y, theta
    landmarks: np.ndarray   # (L, 3) id, estimated x, y
    rmse_pose_m: float
    rmse_landmark_m: float
    seed: int
    observed_landmarks: int = 0

    def to_dict(self) -> dict:
        return {
            "rmse_pose_m": self.rmse_pose_m,
            "rmse_landmark_m": self.rmse_landmark_m,
            "seed": self.seed,
            "observed_landmarks": self.observed_landmarks,
            "poses": self.poses.tolist(),
            "landmarks": [[int(r[0]), r[1], r[2]] for r in self.landmarks.tolist()],
        }

    def write_csv(self, prefix) -> tuple[Path, Path]:
        """Write ``<prefix>_poses.csv`` (t,x,y,theta) and ``<prefix>_landmarks.csv`` (id,x,y)."""
        prefix = Path(prefix)
        pose_path = prefix.with_name(prefix.name + "_poses.csv")
        lm_path = prefix.with_name(prefix.name + "_landmarks.csv")
        with open(pose_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "theta"])
            w.writerows([repr(float(v)) for v in row] for row in self.poses)
        with open(lm_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "x", "y"])
            w.writerows([int(r[0]), repr(float(r[1])), repr(float(r[2]))] for r in self.landmarks)
        return pose_path, lm_path


@dataclass(frozen=True)
class Schedule:
    """Sensor activity along the route: ``entries[k] = (start, stop, sensors)``.

    Sensors in an entry only observe from poses ``start <= i < stop``.
    """

    entries: tuple[tuple[int, int, tuple[MountedSensor, ...]], ...]

    @classmethod
    def constant(cls, sensors: Iterable[MountedSensor], start: int, stop: int) -> "Schedule":
        return cls(((start, stop, tuple(sensors)),))

    @classmethod
    def from_periods(cls, pairs) -> "Schedule":
        """Build from ``(TimePeriod, sensors-or-Selection)`` pairs."""
        return cls(tuple((p.start, p.stop, _sensors_of(s)) for p, s in pairs))

    def without(self, failed) -> "Schedule":
        failed = {_sensor_id(f) for f in failed}
        return Schedule(tuple((a, b, tuple(s for s in ss if s.id not in failed))
                              for a, b, ss in self.entries))


def _sensor_id(x) -> int:
    return x.id if isinstance(x, MountedSensor) else int(x)


def _sensors_of(selection) -> tuple[MountedSensor, ...]:
    if selection is None:
        return ()
    if hasattr(selection, "sensors"):
        selection = selection.sensors
    out = tuple(selection)
    for s in out:
        if not isinstance(s, MountedSensor):
            raise TypeError(f"expected mounted sensors, got {type(s).__name__}")
    return out


# ---------------------------------------------------------------------------
# factorization


def logdet_spd(info: np.ndarray, ordering: VariableOrdering | None = None,
               overwrite: bool = False) -> float:
    """``log det`` of a symmetric positive definite matrix as ``2 * sum(log(diag(R)))``.

    Raises :class:`SingularSystemError` naming the first column whose pivot
    is not positive.
    """
    info = np.asarray(info, dtype=float)
    if info.shape[0] == 0:
        return 0.0
    r, status = lapack.dpotrf(info, lower=0, clean=0, overwrite_a=overwrite)
    if status > 0:
        col = status - 1
        where = ordering.describe_column(col) if ordering is not None else f"column {col}"
        raise SingularSystemError(f"information matrix is singular: non-positive pivot at {where}")
    if status < 0:
        raise ValueError(f"dpotrf rejected argument {-status}")
    d = np.diagonal(r)
    return float(2.0 * np.sum(np.log(d)))


def log_det_information(system: LinearSystem, method: str = "cholesky") -> EvalScore:
    """Score a system by ``log det(A^T A) = 2 * sum(log(R_ii))``.

    ``method="cholesky"`` factors ``A^T A``; ``method="qr"`` takes ``R``
    from a dense Householder QR of ``A`` (small systems only).
    """
    A = system.A
    if method == "cholesky":
        info = (A.T @ A).toarray()
        value = logdet_spd(info, system.ordering, overwrite=True)
    elif method == "qr":
        if system.m < system.n:
            raise SingularSystemError(f"{system.m} rows cannot determine {system.n} unknowns")
        r = np.linalg.qr(A.toarray(), mode="r")
        d = np.abs(np.diagonal(r))
        if np.any(d <= 0):
            col = int(np.flatnonzero(d <= 0)[0])
            raise SingularSystemError(
                f"information matrix is singular: zero pivot at {system.ordering.describe_column(col)}")
        value = float(2.0 * np.sum(np.log(d)))
    else:
        raise ValueError(f"unknown factorization method {method!r}")
    return EvalScore(value, system.n, system.m)


# ---------------------------------------------------------------------------
# system assembly


@dataclass
class _Block:
    """Whitened measurement rows of one sensor inside an evaluator's window."""

    A: sp.csr_matrix
    pose_of_row: np.ndarray
    landmark_of_row: np.ndarray
    info_index: np.ndarray = field(repr=False)  # flat indices into the dense information matrix
    info_data: np.ndarray = field(repr=False)


class Evaluator:
    """Scores sensor suites on one scenario window.

    Per-sensor measurement rows and information contributions are computed
    on first use and cached; results are independent of call order, so an
    evaluator may be shared between threads.
    """

    def __init__(self, scenario: Scenario, window: TimePeriod | None = None,
                 noise: NoiseConfig | None = None):
        self.scenario = scenario
        self.noise = noise or NoiseConfig()
        n_all = len(scenario.poses)
        start, stop = (0, n_all) if window is None else (window.start, window.stop)
        if not (0 <= start < stop <= n_all):
            raise ScenarioError(f"empty or out-of-range window [{start}, {stop}) for {n_all} poses")
        self.window = window
        self.ordering = VariableOrdering(start, stop, tuple(lm.id for lm in scenario.landmarks))
        n = self.ordering.n

        poses = scenario.pose_array[start:stop]
        lms = scenario.landmark_array
        self._dx = lms[None, :, 0] - poses[:, None, 1]
        self._dy = lms[None, :, 1] - poses[:, None, 2]
        self._dist = np.hypot(self._dx, self._dy)
        self._rel = np.arctan2(self._dy, self._dx) - poses[:, None, 3]

        self._base_blocks, self._base_A = self._base_rows(poses)
        base_info = (self._base_A.T @ self._base_A).toarray()
        self._base_info = base_info
        self._base_info.setflags(write=False)
        self._cache: dict[MountedSensor, _Block] = {}
        self._lock = threading.Lock()
        self.n = n

    # -- fixed factors -----------------------------------------------------

    def _base_rows(self, poses: np.ndarray):
        o = self.ordering
        n = o.n
        P = o.n_poses
        rows, cols, vals = [], [], []
        blocks = []

        ps = self.noise.prior_sigmas
        for k in range(3):
            rows.append(k)
            cols.append(k)
            vals.append(1.0 / ps[k])
        blocks.append(FactorBlock("prior", 0, 3))

        r0 = 3
        sx, sy, st = self.noise.odometry_sigmas
        for k in range(P - 1):
            th = poses[k, 3]
            c, s = math.cos(th), math.sin(th)
            dx, dy = poses[k + 1, 1] - poses[k, 1], poses[k + 1, 2] - poses[k, 2]
            a, b = 3 * k, 3 * k + 3
            r = r0 + 3 * k
            entries = [
                (r, a, -c / sx), (r, a + 1, -s / sx), (r, a + 2, (-s * dx + c * dy) / sx),
                (r, b, c / sx), (r, b + 1, s / sx),
                (r + 1, a, s / sy), (r + 1, a + 1, -c / sy), (r + 1, a + 2, (-c * dx - s * dy) / sy),
                (r + 1, b, -s / sy), (r + 1, b + 1, c / sy),
                (r + 2, a + 2, -1.0 / st), (r + 2, b + 2, 1.0 / st),
            ]
            for rr, cc, vv in entries:
                rows.append(rr)
                cols.append(cc)
                vals.append(vv)
        if P > 1:
            blocks.append(FactorBlock("odometry", r0, r0 + 3 * (P - 1)))
        r0 += 3 * (P - 1)

        w = math.sqrt(self.noise.landmark_precision)
        nl = 2 * len(o.landmark_ids)
        for k in range(nl):
            rows.append(r0 + k)
            cols.append(3 * P + k)
            vals.append(w)
        blocks.append(FactorBlock("landmark-prior", r0, r0 + nl))
        A = sp.csr_matrix((vals, (rows, cols)), shape=(r0 + nl, n))
        return blocks, A

    # -- sensor factors ----------------------------------------------------

    def block(self, sensor: MountedSensor) -> _Block:
        blk = self._cache.get(sensor)
        if blk is None:
            blk = self._measure(sensor)
            with self._lock:
                blk = self._cache.setdefault(sensor, blk)
        return blk

    def _measure(self, sensor: MountedSensor) -> _Block:
        o = self.ordering
        n = o.n
        mask = visible_mask(sensor, self._dist, self._rel) & (self._dist > 1e-9)
        pi, li = np.nonzero(mask)
        k = len(pi)
        if k == 0:
            empty = sp.csr_matrix((0, n))
            return _Block(empty, np.zeros(0, int), np.zeros(0, int),
                          np.zeros(0, np.int64), np.zeros(0))
        dx, dy, r = self._dx[pi, li], self._dy[pi, li], self._dist[pi, li]
        q = r * r
        sr, sb = measurement_sigmas(sensor, r)
        pc = 3 * pi
        lc = 3 * o.n_poses + 2 * li
        # range row then bearing row for each observation
        range_cols = np.stack([pc, pc + 1, lc, lc + 1], axis=1)
        range_vals = np.stack([-dx / r, -dy / r, dx / r, dy / r], axis=1) / sr[:, None]
        bear_cols = np.stack([pc, pc + 1, pc + 2, lc, lc + 1], axis=1)
        bear_vals = np.stack([dy / q, -dx / q, -np.ones(k), -dy / q, dx / q], axis=1) / sb[:, None]
        rr = np.repeat(2 * np.arange(k), 4)
        rb = np.repeat(2 * np.arange(k) + 1, 5)
        A = sp.csr_matrix(
            (np.concatenate([range_vals.ravel(), bear_vals.ravel()]),
             (np.concatenate([rr, rb]), np.concatenate([range_cols.ravel(), bear_cols.ravel()]))),
            shape=(2 * k, n))
        info = (A.T @ A).tocoo()
        info.sum_duplicates()
        flat = info.row.astype(np.int64) * n + info.col
        return _Block(A, np.repeat(pi + o.pose_start, 2), np.repeat(li, 2), flat, info.data)

    # -- scoring -------------------------------------------------------------

    def information(self, sensors: Iterable[MountedSensor] = ()) -> np.ndarray:
        """Dense information matrix of the base factors plus ``sensors`` (canonical id order)."""
        info = self._base_info.copy()
        for s in sorted(set(_sensors_of(sensors)), key=lambda e: e.id):
            self.add_sensor(info, s)
        return info

    def add_sensor(self, info: np.ndarray, sensor: MountedSensor) -> np.ndarray:
        """Accumulate ``sensor``'s information into the dense matrix ``info`` in place."""
        blk = self.block(sensor)
        if blk.info_data.size:
            info.ravel()[blk.info_index] += blk.info_data
        return info

    def rows_for(self, sensors) -> int:
        return self._base_A.shape[0] + sum(self.block(s).A.shape[0] for s in set(_sensors_of(sensors)))

    def logdet(self, info: np.ndarray, overwrite: bool = False) -> float:
        return logdet_spd(info, self.ordering, overwrite=overwrite)

    def score(self, sensors=()) -> EvalScore:
        sensors = _sensors_of(sensors)
        value = self.logdet(self.information(sensors), overwrite=True)
        return EvalScore(value, self.n, self.rows_for(sensors))

    def score_added(self, info: np.ndarray, sensor: MountedSensor) -> float:
        """log-det of ``info`` plus one more sensor; ``info`` is left untouched."""
        work = info.copy()
        self.add_sensor(work, sensor)
        return self.logdet(work, overwrite=True)

    @property
    def baseline(self) -> float:
        return self.logdet(self._base_info.copy(), overwrite=True)

    # -- explicit systems ----------------------------------------------------

    def system(self, selection=()) -> LinearSystem:
        """Stack the whitened Jacobian for a selection or a :class:`Schedule`."""
        o = self.ordering
        if isinstance(selection, Schedule):
            parts = [(max(a, o.pose_start), min(b, o.pose_stop), ss) for a, b, ss in selection.entries]
        else:
            parts = [(o.pose_start, o.pose_stop, _sensors_of(selection))]
        blocks = [blk for blk in self._base_blocks if blk.kind != "landmark-prior"]
        reg = self._base_blocks[-1]
        nbase = reg.start
        pieces = [self._base_A[:nbase]]
        r0 = nbase
        for a, b, sensors in parts:
            if a >= b:
                continue
            seen = set()
            for s in sensors:
                if s in seen:
                    continue
                seen.add(s)
                blk = self.block(s)
                keep = (blk.pose_of_row >= a) & (blk.pose_of_row < b)
                sub = blk.A[np.flatnonzero(keep)] if not keep.all() else blk.A
                if sub.shape[0]:
                    pieces.append(sub)
                    blocks.append(FactorBlock("measurement", r0, r0 + sub.shape[0], s.id))
                    r0 += sub.shape[0]
        pieces.append(self._base_A[nbase:])
        blocks.append(FactorBlock("landmark-prior", r0, r0 + (reg.stop - reg.start)))
        A = sp.vstack(pieces, format="csr")
        return LinearSystem(A, np.zeros(A.shape[0]), o, tuple(blocks))


# ---------------------------------------------------------------------------
# module-level API


def build_system(scenario: Scenario, selection=(), window: TimePeriod | None = None,
                 noise: NoiseConfig | None = None) -> LinearSystem:
    """Whitened sparse least-squares system for ``scenario`` observed by ``selection``.

    ``selection`` may be a Selection, a sequence of mounted sensors, or a
    :class:`Schedule` of per-period sensor sets.
    """
    return Evaluator(scenario, window, noise).system(selection)


def evaluate(scenario: Scenario, selection=(), window: TimePeriod | None = None,
             noise: NoiseConfig | None = None) -> EvalScore:
    ev = Evaluator(scenario, window, noise)
    if isinstance(selection, Schedule):
        return log_det_information(ev.system(selection))
    return ev.score(selection)


def simulate_and_solve(scenario: Scenario, selection=(), failed: Iterable = (), seed: int = 0,
                       *, noise_scale: float = 1.0, noise: NoiseConfig | None = None,
                       evaluator: Evaluator | None = None) -> SolveReport:
    """Sample measurement noise, solve the linearized problem, and report RMSEs.

    Odometry and sensor rows receive unit whitened Gaussian noise times
    ``noise_scale``; the gauge prior and the weak landmark priors are kept
    exact.  The landmark RMSE covers landmarks observed at least once.
    """
    ev = evaluator or Evaluator(scenario, None, noise)
    failed = list(failed)
    if isinstance(selection, Schedule):
        sched = selection.without(failed)
    else:
        drop = {_sensor_id(f) for f in failed}
        sched = Schedule.constant([s for s in _sensors_of(selection) if s.id not in drop],
                                  ev.ordering.pose_start, ev.ordering.pose_stop)
    system = ev.system(sched)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(system.m) * noise_scale
    b[~system.noisy_rows()] = 0.0
    system.b = b

    info = (system.A.T @ system.A).toarray()
    r, status = lapack.dpotrf(info, lower=0, clean=1, overwrite_a=1)
    if status > 0:
        raise SingularSystemError(
            f"information matrix is singular: non-positive pivot at "
            f"{system.ordering.describe_column(status - 1)}")
    rhs = system.A.T @ b
    d = solve_triangular(r, rhs, trans="T", lower=False)
    delta = solve_triangular(r, d, lower=False)

    o = system.ordering
    P = o.n_poses
    gt = scenario.pose_array[o.pose_start:o.pose_stop]
    est = gt.copy()
    est[:, 1:4] += delta[:3 * P].reshape(P, 3)
    est[:, 3] = wrap_angle(est[:, 3])
    lm_gt = scenario.landmark_array
    lm_est = lm_gt + delta[3 * P:].reshape(-1, 2)

    pose_err = np.hypot(*(est[:, 1:3] - gt[:, 1:3]).T)
    meas_cols = system.A[np.flatnonzero(system.noisy_rows())].tocsc()
    touched = np.diff(meas_cols.indptr)[3 * P:].reshape(-1, 2).sum(axis=1) > 0
    lm_err = np.hypot(*(lm_est - lm_gt).T)[touched]
    ids = np.array([lm.id for lm in scenario.landmarks], dtype=float)
    return SolveReport(
        poses=est,
        landmarks=np.column_stack([ids, lm_est]),
        rmse_pose_m=float(np.sqrt(np.mean(pose_err ** 2))),
        rmse_landmark_m=float(np.sqrt(np.mean(lm_err ** 2))) if lm_err.size else 0.0,
        seed=seed,
        observed_landmarks=int(touched.sum()),
    )
