"""Budgeted sensor-suite search.

* :func:`greedy` adds, one sensor at a time, the affordable sensor with the
  best objective: raw log-det (``uniform``) or information gain per dollar
  (``cost_benefit``).
* :func:`exhaustive` enumerates every feasible subset; used as an oracle on
  toy instances.
* :func:`pareto_front` pools the intermediate suites of several greedy runs
  and keeps the cost/performance non-dominated ones.
* :func:`resilient` plans, period by period, a suite that survives the loss
  of that period's most informative sensor.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .sensors import MountedSensor, SensorConfigError
from .slamgraph import (EvalScore, Evaluator, NoiseConfig, Schedule, evaluate,
                        log_det_information, simulate_and_solve)
from .world import Scenario, TimePeriod, time_periods

__all__ = [
    "Selection",
    "TraceStep",
    "GreedyTrace",
    "ParetoPoint",
    "PlanPeriod",
    "ResiliencePlan",
    "OBJECTIVES",
    "greedy",
    "exhaustive",
    "pareto_front",
    "resilient",
    "crippled_score",
    "resilience_report",
    "greedy_evaluation_count",
]

OBJECTIVES = ("uniform", "cost_benefit")


@dataclass(frozen=True)
class Selection:
    """A sensor suite; ``sensors`` keeps acquisition order."""

    sensors: tuple[MountedSensor, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        ids = [s.id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise SensorConfigError(f"duplicate sensor ids in selection {ids}")

    @classmethod
    def of(cls, library: Sequence[MountedSensor], ids: Iterable[int]) -> "Selection":
        if hasattr(library, "lookup"):
            return cls(library.lookup(ids))
        by_id = {s.id: s for s in library}
        try:
            return cls(tuple(by_id[i] for i in ids))
        except KeyError as exc:
            raise SensorConfigError(f"unknown sensor id {exc.args[0]!r}") from None

    @property
    def sensor_ids(self) -> tuple[int, ...]:
        return tuple(s.id for s in self.sensors)

    @property
    def total_cost_usd(self) -> float:
        return float(sum(s.cost_usd for s in self.sensors))

    def __len__(self):
        return len(self.sensors)

    def __iter__(self):
        return iter(self.sensors)

    def __contains__(self, item):
        sid = item.id if isinstance(item, MountedSensor) else item
        return sid in self.sensor_ids

    def without(self, *failed) -> "Selection":
        drop = {f.id if isinstance(f, MountedSensor) else f for f in failed if f is not None}
        return Selection(tuple(s for s in self.sensors if s.id not in drop))

    def describe(self) -> list[str]:
        return [s.name for s in self.sensors]

    def to_dict(self) -> dict:
        return {"sensor_ids": list(self.sensor_ids), "total_cost_usd": self.total_cost_usd,
                "sensors": self.describe()}


@dataclass(frozen=True)
class TraceStep:
    sensor_id: int
    cost_usd: float
    score: float
    evaluations: int
    selection: Selection


@dataclass(frozen=True)
class GreedyTrace:
    steps: tuple[TraceStep, ...]
    objective: str
    baseline: float

    @property
    def evaluations(self) -> int:
        return sum(s.evaluations for s in self.steps)

    @classmethod
    def from_points(cls, points: Sequence["ParetoPoint"], baseline: float) -> "GreedyTrace":
        """Wrap already-scored architectures (e.g. a front) as a trace."""
        steps = tuple(TraceStep(p.selection.sensor_ids[-1] if len(p.selection) else -1,
                                p.cost_usd, p.score, 0, p.selection) for p in points)
        tag = points[0].objective_tag if points else "uniform"
        return cls(steps, tag, baseline)

    def rows(self) -> list[list]:
        header = ["step", "sensor_id", "sensor", "cost_usd", "score", "evaluations", "sensor_ids"]
        out = [header]
        for k, s in enumerate(self.steps, 1):
            out.append([k, s.sensor_id, s.selection.sensors[-1].name if len(s.selection) else "",
                        s.cost_usd, s.score, s.evaluations,
                        " ".join(str(i) for i in s.selection.sensor_ids)])
        return out

    def to_dict(self) -> dict:
        return {"objective": self.objective, "baseline": self.baseline,
                "evaluations": self.evaluations,
                "steps": [{"sensor_id": s.sensor_id, "cost_usd": s.cost_usd, "score": s.score,
                           "evaluations": s.evaluations, "sensor_ids": list(s.selection.sensor_ids)}
                          for s in self.steps]}


@dataclass(frozen=True)
class ParetoPoint:
    cost_usd: float
    score: float
    score_norm: float
    selection: Selection
    objective_tag: str

    def to_dict(self) -> dict:
        return {"cost_usd": self.cost_usd, "score": self.score, "score_norm": self.score_norm,
                "objective": self.objective_tag, "sensor_ids": list(self.selection.sensor_ids)}


@dataclass(frozen=True)
class PlanPeriod:
    period: TimePeriod
    failed: MountedSensor | None
    active: Selection
    score_with_failure: float
    failed_singleton_score: float


@dataclass(frozen=True)
class ResiliencePlan:
    periods: tuple[PlanPeriod, ...]
    budget_usd: float

    def schedule(self) -> Schedule:
        """Active sensors per period, with each period's failed sensor switched off."""
        return Schedule.from_periods((p.period, p.active) for p in self.periods)

    def grid(self, library: Sequence[MountedSensor]) -> list[list[str]]:
        """Rows = periods, columns = library ids, cells in {failed, active, off}."""
        rows = [["period", "start", "stop", *[str(s.id) for s in library]]]
        for p in self.periods:
            active = set(p.active.sensor_ids)
            failed = p.failed.id if p.failed is not None else None
            cells = ["failed" if s.id == failed else "active" if s.id in active else "off"
                     for s in library]
            rows.append([str(p.period.index), str(p.period.start), str(p.period.stop), *cells])
        return rows

    def to_dict(self) -> dict:
        return {"budget_usd": self.budget_usd, "periods": [
            {"index": p.period.index, "pose_start": p.period.start, "pose_stop": p.period.stop,
             "failed_sensor_id": None if p.failed is None else p.failed.id,
             "failed_sensor": None if p.failed is None else p.failed.name,
             "failed_singleton_score": p.failed_singleton_score,
             "active": p.active.to_dict(), "score_with_failure": p.score_with_failure}
            for p in self.periods]}


# ---------------------------------------------------------------------------
# helpers


def _threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("SUITEOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"SUITEOPT_THREADS must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


def _map(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _pool(library) -> list[MountedSensor]:
    pool = sorted(library, key=lambda e: e.id)
    if not pool:
        raise SensorConfigError("sensor library is empty")
    return pool


def greedy_evaluation_count(library_size: int, picks: int) -> int:
    """Objective evaluations of an unconstrained greedy run: M + (M-1) + ... + (M-N+1)."""
    return sum(range(library_size - picks + 1, library_size + 1))


# ---------------------------------------------------------------------------
# greedy


def greedy(library: Iterable[MountedSensor], scenario: Scenario, budget: float,
           objective: str = "uniform", max_cardinality: int | None = None, *,
           window: TimePeriod | None = None, evaluator: Evaluator | None = None,
           noise: NoiseConfig | None = None, shift_baseline: bool = True,
           threads: int | None = None) -> tuple[Selection, GreedyTrace]:
    """Budgeted greedy suite construction.

    Each round scores every remaining sensor that still fits the budget and
    keeps the best; ties go to the lowest id.  With ``cost_benefit`` the
    objective is ``(J(s+e) - J0) / Cost(s+e)`` where ``J0`` is the empty-suite
    score (``shift_baseline=False`` divides the raw log-det instead).
    """
    objective = objective.replace("-", "_")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget!r}")
    if max_cardinality is not None and max_cardinality < 0:
        raise ValueError("max_cardinality must be non-negative")
    pool = _pool(library)
    ev = evaluator or Evaluator(scenario, window, noise)
    nthreads = _threads(threads)

    info = ev.information(())
    j0 = ev.logdet(info.copy(), overwrite=True)
    chosen: list[MountedSensor] = []
    cost = 0.0
    steps = []
    while pool and (max_cardinality is None or len(chosen) < max_cardinality):
        cands = [e for e in pool if cost + e.cost_usd <= budget]
        if not cands:
            break
        scores = _map(lambda e: ev.score_added(info, e), cands, nthreads)
        if objective == "uniform":
            keys = scores
        else:
            shift = j0 if shift_baseline else 0.0
            keys = [(j - shift) / (cost + e.cost_usd) for j, e in zip(scores, cands)]
        k = max(range(len(cands)), key=lambda i: (keys[i], -cands[i].id))
        best = cands[k]
        ev.add_sensor(info, best)
        chosen.append(best)
        pool.remove(best)
        cost += best.cost_usd
        steps.append(TraceStep(best.id, cost, scores[k], len(cands), Selection(tuple(chosen))))
    return Selection(tuple(chosen)), GreedyTrace(tuple(steps), objective, j0)


# ---------------------------------------------------------------------------
# exhaustive oracle


def exhaustive(library: Iterable[MountedSensor], scenario: Scenario, budget: float,
               max_cardinality: int, *, window: TimePeriod | None = None,
               evaluator: Evaluator | None = None, noise: NoiseConfig | None = None,
               guard: int = 10 ** 6) -> Selection:
    """Best budget-feasible subset of at most ``max_cardinality`` sensors.

    Ties are broken by lower cost, then by the lexicographically smaller id
    tuple.  Refuses when ``C(|library|, max_cardinality)`` exceeds ``guard``.
    """
    pool = _pool(library)
    count = math.comb(len(pool), max_cardinality)
    if count > guard:
        raise ValueError(f"refusing exhaustive search over {count:,} combinations (guard {guard:,})")
    ev = evaluator or Evaluator(scenario, window, noise)
    best, best_key = (), None
    for k in range(max_cardinality + 1):
        for combo in itertools.combinations(pool, k):
            cost = sum(e.cost_usd for e in combo)
            if cost > budget:
                continue
            j = ev.score(combo).logdet
            key = (j, cost, tuple(e.id for e in combo))
            if best_key is None or _better(key, best_key):
                best, best_key = combo, key
    return Selection(best)


def _better(a, b) -> bool:
    """Higher score, then lower cost, then smaller id tuple."""
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


# ---------------------------------------------------------------------------
# Pareto front


def pareto_front(traces: Sequence[GreedyTrace], baseline: float) -> list[ParetoPoint]:
    """Non-dominated (cost, score) architectures pooled from ``traces``, sorted by cost.

    ``score_norm`` maps the empty suite to 0 and the best pooled suite to 1.
    """
    pool = []
    seen = set()
    for tr in traces:
        if not math.isclose(tr.baseline, baseline, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"trace baseline {tr.baseline!r} differs from {baseline!r}: "
                             "traces must come from the same scenario")
        for st in tr.steps:
            key = frozenset(st.selection.sensor_ids)
            if key in seen:
                continue
            seen.add(key)
            pool.append((st.selection.total_cost_usd, st.score, st.selection, tr.objective))
    if not pool:
        return []
    jmax = max(p[1] for p in pool)
    span = jmax - baseline

    def norm(j):
        return 1.0 if span <= 0 else (j - baseline) / span

    pool.sort(key=lambda p: (p[0], -p[1], p[2].sensor_ids))
    front = []
    running = -math.inf
    for _, group in itertools.groupby(pool, key=lambda p: p[0]):
        group = list(group)
        top = group[0][1]
        if top > running:
            for p in group:
                if p[1] == top:
                    front.append(ParetoPoint(p[0], p[1], norm(p[1]), p[2], p[3]))
            running = top
    return front


# ---------------------------------------------------------------------------
# resilience


def resilient(library: Iterable[MountedSensor], scenario: Scenario, budget: float,
              period_s: float = 5.0, *, noise: NoiseConfig | None = None,
              threads: int | None = None) -> ResiliencePlan:
    """Per-period resilient suites.

    In each period the single sensor with the highest stand-alone score is
    assumed to fail.  It is charged against the budget and removed from the
    pool, and the uniform greedy fills the remaining budget from what is
    left.  Only sensors that fit the budget are candidates for failure.
    """
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget!r}")
    pool = _pool(library)
    nthreads = _threads(threads)
    out = []
    for period in time_periods(scenario, period_s):
        ev = Evaluator(scenario, period, noise)
        info = ev.information(())
        affordable = [e for e in pool if e.cost_usd <= budget]
        if not affordable:
            out.append(PlanPeriod(period, None, Selection(), ev.logdet(info, overwrite=False),
                                  float("nan")))
            continue
        singles = _map(lambda e: ev.score_added(info, e), affordable, nthreads)
        k = max(range(len(affordable)), key=lambda i: (singles[i], -affordable[i].id))
        failed = affordable[k]
        rest = [e for e in pool if e.id != failed.id]
        remaining = budget - failed.cost_usd
        if rest and remaining > 0:
            active, _ = greedy(rest, scenario, remaining, "uniform", evaluator=ev, threads=nthreads)
        else:
            active = Selection()
        score = ev.score(active).logdet
        out.append(PlanPeriod(period, failed, active, score, singles[k]))
    return ResiliencePlan(tuple(out), float(budget))


def crippled_score(scenario: Scenario, selection: Selection, failed, *,
                   window: TimePeriod | None = None, noise: NoiseConfig | None = None,
                   evaluator: Evaluator | None = None) -> EvalScore:
    """Score of ``selection`` after ``failed`` (a member) drops out."""
    fid = failed.id if isinstance(failed, MountedSensor) else failed
    if fid not in selection:
        raise ValueError(f"sensor {fid} is not part of the selection {list(selection.sensor_ids)}")
    rest = selection.without(fid)
    if evaluator is not None:
        return evaluator.score(rest)
    return evaluate(scenario, rest, window, noise)


def resilience_report(scenario: Scenario, plan: ResiliencePlan, greedy_selection: Selection, *,
                      seeds: Iterable[int] = (), noise: NoiseConfig | None = None) -> dict:
    """Compare the resilient plan with the whole-route greedy suite under the same failures.

    Per period, the greedy suite loses the sensor the plan assumed failed
    in that period (if the greedy suite carries it).  Scores are reported per
    period and pooled over the route; with ``seeds``, seeded simulated
    solves add pose/landmark RMSEs for both designs.
    """
    rows = []
    for p in plan.periods:
        ev = Evaluator(scenario, p.period, noise)
        crippled = ev.score(greedy_selection.without(p.failed)).logdet
        rows.append({"index": p.period.index, "pose_start": p.period.start,
                     "pose_stop": p.period.stop,
                     "failed_sensor_id": None if p.failed is None else p.failed.id,
                     "resilient_score": p.score_with_failure, "crippled_greedy_score": crippled,
                     "improvement": p.score_with_failure - crippled})
    res_sched = plan.schedule()
    crip_sched = Schedule.from_periods((p.period, greedy_selection.without(p.failed))
                                       for p in plan.periods)
    full = Evaluator(scenario, None, noise)
    res_full = log_det_information(full.system(res_sched)).logdet
    crip_full = log_det_information(full.system(crip_sched)).logdet
    sum_res = float(sum(r["resilient_score"] for r in rows))
    sum_crip = float(sum(r["crippled_greedy_score"] for r in rows))
    report = {
        "periods": rows,
        "pooled": {
            "period_sum_resilient": sum_res,
            "period_sum_crippled_greedy": sum_crip,
            "period_sum_improvement": sum_res - sum_crip,
            "route_resilient": res_full,
            "route_crippled_greedy": crip_full,
            "route_improvement": res_full - crip_full,
        },
        "greedy_selection": greedy_selection.to_dict(),
    }
    seeds = list(seeds)
    if seeds:
        sims = []
        for seed in seeds:
            r = simulate_and_solve(scenario, res_sched, seed=seed, evaluator=full)
            c = simulate_and_solve(scenario, crip_sched, seed=seed, evaluator=full)
            sims.append({"seed": seed,
                         "resilient_rmse_pose_m": r.rmse_pose_m,
                         "resilient_rmse_landmark_m": r.rmse_landmark_m,
                         "crippled_greedy_rmse_pose_m": c.rmse_pose_m,
                         "crippled_greedy_rmse_landmark_m": c.rmse_landmark_m})
        report["simulation"] = {
            "runs": sims,
            "median_resilient_rmse_pose_m": float(np.median([s["resilient_rmse_pose_m"] for s in sims])),
            "median_crippled_greedy_rmse_pose_m":
                float(np.median([s["crippled_greedy_rmse_pose_m"] for s in sims])),
        }
    return report
