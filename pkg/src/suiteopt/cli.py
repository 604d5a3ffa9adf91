"""``suiteopt`` command line: generate scenarios, score suites, run searches.

Every output file is deterministic for a given configuration and carries a
fingerprint of that configuration (the output directory excluded).

Exit codes: 0 success, 2 invalid input, 3 singular information matrix.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path
from xml.sax.saxutils import escape

from . import __version__
from .selection import Selection, greedy, pareto_front, resilience_report, resilient
from .sensors import build_default_library, load_library
from .slamgraph import SingularSystemError, evaluate
from .world import (BUNDLED, ScenarioError, bundled_scenario, load_scenario, save_scenario,
                    synth_linear_scenario, synth_loop_scenario, time_periods)

DEFAULT_BUDGET = 110_000.0

_GEN_KEYS = {
    "linear": {"length": ("length_m", float), "spacing": ("pose_spacing_m", float),
               "landmarks": ("landmark_count", int), "halfwidth": ("corridor_halfwidth_m", float),
               "seed": ("seed", int), "rate": ("pose_rate_hz", float), "name": ("name", str)},
    "loop": {"loops": ("loop_count", int), "landmarks": ("landmark_count", int),
             "mean_range": ("mean_landmark_range_m", float), "seed": ("seed", int),
             "spacing": ("pose_spacing_m", float), "width": ("width_m", float),
             "height": ("height_m", float), "radius": ("corner_radius_m", float),
             "rate": ("pose_rate_hz", float), "name": ("name", str)},
}


def parse_gen_spec(spec: str):
    """``linear03`` / ``loop00`` (bundled) or ``kind[:key=value,...]``."""
    if spec in BUNDLED:
        return bundled_scenario(spec)
    kind, _, rest = spec.partition(":")
    if kind not in _GEN_KEYS:
        raise ScenarioError(f"unknown generator {kind!r}; use one of "
                            f"{sorted(_GEN_KEYS)} or a bundled name {sorted(BUNDLED)}")
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq or key not in _GEN_KEYS[kind]:
            raise ScenarioError(f"bad generator option {item!r}; keys: {sorted(_GEN_KEYS[kind])}")
        name, conv = _GEN_KEYS[kind][key]
        try:
            kwargs[name] = conv(value)
        except ValueError:
            raise ScenarioError(f"generator option {key}: cannot parse {value!r}") from None
    fn = synth_linear_scenario if kind == "linear" else synth_loop_scenario
    return fn(**kwargs)


# ---------------------------------------------------------------------------
# output helpers


def _config(args) -> dict:
    skip = {"out", "func", "svg"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(args) -> dict:
    cfg = _config(args)
    return {"tool": "suiteopt", "version": __version__, "fingerprint": _fingerprint(cfg),
            "config": cfg}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_json(path: Path, meta: dict, payload: dict) -> Path:
    path.write_text(_dump_json({"meta": meta, **payload}), encoding="utf-8")
    return path


def _write_csv(path: Path, meta: dict, rows) -> Path:
    buf = io.StringIO()
    buf.write(f"# suiteopt {meta['version']} fingerprint={meta['fingerprint']} "
              f"config={json.dumps(meta['config'], sort_keys=True, separators=(',', ':'))}\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args):
    if args.scenario and args.gen:
        raise ScenarioError("give exactly one of --scenario and --gen")
    if args.scenario:
        return load_scenario(args.scenario)
    return parse_gen_spec(args.gen or "linear03")


def _library(args):
    if args.library in (None, "default"):
        return build_default_library(disparity_sigma_px=args.disparity_sigma)
    return load_library(args.library)


def _positive_budget(args):
    if not args.budget > 0:
        raise ValueError(f"--budget must be positive, got {args.budget}")


# ---------------------------------------------------------------------------
# SVG


def pareto_svg(pool, front, width: int = 640, height: int = 420) -> str:
    """Scatter of (cost, normalized score) with the front as a dashed polyline.

    ``pool`` items are ``(cost, score_norm, objective_tag)``.
    """
    ml, mr, mt, mb = 70, 20, 20, 50
    xs = [p[0] for p in pool] or [0.0]
    xmax = max(xs) * 1.05 or 1.0
    ys = [p[1] for p in pool] or [0.0]
    ymin = min(0.0, min(ys))

    def X(c):
        return ml + (width - ml - mr) * c / xmax

    def Y(v):
        return height - mb - (height - mt - mb) * (v - ymin) / ((1.0 - ymin) or 1.0)

    colors = {"uniform": "#ff8c00", "cost_benefit": "#1f77b4"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>']
    for k in range(6):
        c = xmax * k / 5
        out.append(f'<text x="{X(c):.2f}" y="{height - mb + 16}" font-size="10" '
                   f'text-anchor="middle">{c / 1000:.0f}k</text>')
        v = ymin + (1.0 - ymin) * k / 5
        out.append(f'<text x="{ml - 6}" y="{Y(v) + 3:.2f}" font-size="10" '
                   f'text-anchor="end">{v:.2f}</text>')
    out.append(f'<text x="{(width + ml) / 2:.1f}" y="{height - 12}" font-size="12" '
               f'text-anchor="middle">{escape("cost ($)")}</text>')
    out.append(f'<text x="16" y="{height / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {height / 2:.1f})">normalized performance</text>')
    for c, v, tag in pool:
        out.append(f'<circle cx="{X(c):.2f}" cy="{Y(v):.2f}" r="3" '
                   f'fill="{colors.get(tag, "gray")}" fill-opacity="0.7"/>')
    if front:
        pts = " ".join(f"{X(p.cost_usd):.2f},{Y(p.score_norm):.2f}" for p in front)
        out.append(f'<polyline points="{pts}" fill="none" stroke="red" stroke-width="1.5" '
                   f'stroke-dasharray="6,4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def grid_svg(grid_rows, cell: int = 9) -> str:
    """Period-by-sensor activity grid: failed red, active green, off light gray."""
    header, body = grid_rows[0], grid_rows[1:]
    ids = header[3:]
    ml, mt = 40, 30
    width = ml + cell * len(ids) + 10
    height = mt + cell * len(body) + 10
    fill = {"failed": "#d62728", "active": "#2ca02c", "off": "#eeeeee"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    for c, sid in enumerate(ids):
        if c % 12 == 2 or c < 2:
            out.append(f'<text x="{ml + c * cell + cell / 2:.1f}" y="{mt - 6}" font-size="8" '
                       f'text-anchor="middle">{sid}</text>')
    for r, row in enumerate(body):
        out.append(f'<text x="{ml - 4}" y="{mt + r * cell + cell - 1}" font-size="8" '
                   f'text-anchor="end">{row[0]}</text>')
        for c, state in enumerate(row[3:]):
            out.append(f'<rect x="{ml + c * cell}" y="{mt + r * cell}" width="{cell - 1}" '
                       f'height="{cell - 1}" fill="{fill[state]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    spec = args.kind
    opts = {"seed": args.seed, "landmarks": args.landmarks, "spacing": args.spacing,
            "length": args.length, "halfwidth": args.halfwidth, "loops": args.loops,
            "mean_range": args.mean_range, "name": args.name}
    allowed = _GEN_KEYS[args.kind]
    parts = [f"{k}={v}" for k, v in opts.items() if v is not None and k in allowed]
    scenario = parse_gen_spec(spec + (":" + ",".join(parts) if parts else ""))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, out)
    print(f"{scenario.name}: {len(scenario.poses)} poses, {len(scenario.landmarks)} landmarks "
          f"-> {out}")
    return 0


def _parse_ids(text: str) -> list[int]:
    ids = []
    for tok in filter(None, (t.strip() for t in text.replace(" ", ",").split(","))):
        try:
            ids.append(int(tok))
        except ValueError:
            raise ValueError(f"--sensors: not an integer id: {tok!r}") from None
    return ids


def cmd_eval(args) -> int:
    scenario, library = _scenario(args), _library(args)
    selection = Selection.of(library, _parse_ids(args.sensors))
    window = None
    if args.window is not None:
        periods = time_periods(scenario, args.period_s)
        if not 0 <= args.window < len(periods):
            raise ValueError(f"--window {args.window}: scenario has {len(periods)} periods")
        window = periods[args.window]
    score = evaluate(scenario, selection, window)
    doc = {"meta": _meta(args), "score": score.to_dict(), "selection": selection.to_dict()}
    text = _dump_json(doc)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_greedy(args) -> int:
    _positive_budget(args)
    scenario, library = _scenario(args), _library(args)
    selection, trace = greedy(library, scenario, args.budget, args.objective, args.cardinality)
    out, meta = _outdir(args), _meta(args)
    _write_json(out / "selection.json", meta, {
        "scenario": scenario.name, "budget_usd": args.budget, "objective": trace.objective,
        "selection": selection.to_dict(), "score": trace.steps[-1].score if trace.steps else trace.baseline,
        "baseline": trace.baseline, "evaluations": trace.evaluations})
    _write_csv(out / "trace.csv", meta, trace.rows())
    print(f"{trace.objective} greedy on {scenario.name}, budget ${args.budget:,.0f}: "
          f"{len(selection)} sensors, ${selection.total_cost_usd:,.0f}, "
          f"{trace.evaluations} evaluations")
    for s in selection:
        print(f"  [{s.id:2d}] {s.name}  ${s.cost_usd:,.0f}")
    return 0


def cmd_pareto(args) -> int:
    _positive_budget(args)
    scenario, library = _scenario(args), _library(args)
    traces = [greedy(library, scenario, args.budget, obj, args.cardinality)[1]
              for obj in ("uniform", "cost_benefit")]
    baseline = traces[0].baseline
    front = pareto_front(traces, baseline)
    jmax = max((s.score for t in traces for s in t.steps), default=baseline)
    span = jmax - baseline
    pool = [(s.selection.total_cost_usd, 1.0 if span <= 0 else (s.score - baseline) / span,
             t.objective) for t in traces for s in t.steps]
    out, meta = _outdir(args), _meta(args)
    rows = [["cost_usd", "score", "score_norm", "objective", "sensor_ids"]]
    rows += [[p.cost_usd, p.score, p.score_norm, p.objective_tag,
              " ".join(map(str, p.selection.sensor_ids))] for p in front]
    _write_csv(out / "front.csv", meta, rows)
    _write_json(out / "front.json", meta, {
        "scenario": scenario.name, "budget_usd": args.budget, "baseline": baseline,
        "front": [p.to_dict() for p in front], "traces": [t.to_dict() for t in traces]})
    if args.svg:
        (out / "front.svg").write_text(pareto_svg(pool, front), encoding="utf-8")
    print(f"Pareto front on {scenario.name}: {len(front)} of {len(pool)} architectures")
    for p in front:
        print(f"  ${p.cost_usd:>9,.0f}  {p.score_norm:6.4f}  ({p.objective_tag})")
    return 0


def cmd_resilient(args) -> int:
    _positive_budget(args)
    scenario, library = _scenario(args), _library(args)
    plan = resilient(library, scenario, args.budget, args.period_s)
    greedy_sel, _ = greedy(library, scenario, args.budget, "uniform")
    seeds = list(range(args.seed, args.seed + args.runs))
    report = resilience_report(scenario, plan, greedy_sel, seeds=seeds)
    out, meta = _outdir(args), _meta(args)
    _write_json(out / "plan.json", meta, {"scenario": scenario.name, "plan": plan.to_dict()})
    grid = plan.grid(library)
    _write_csv(out / "grid.csv", meta, grid)
    if args.svg:
        (out / "grid.svg").write_text(grid_svg(grid), encoding="utf-8")
    _write_json(out / "report.json", meta, {"scenario": scenario.name, "seeds": seeds,
                                            "report": report})
    pooled = report["pooled"]
    print(f"resilient plan on {scenario.name}: {len(plan.periods)} periods of {args.period_s:g} s")
    print(f"  per-period sum: resilient {pooled['period_sum_resilient']:.2f} vs "
          f"crippled greedy {pooled['period_sum_crippled_greedy']:.2f}")
    print(f"  whole route:    resilient {pooled['route_resilient']:.2f} vs "
          f"crippled greedy {pooled['route_crippled_greedy']:.2f}")
    if "simulation" in report:
        sim = report["simulation"]
        print(f"  median pose RMSE over {len(seeds)} seeds: resilient "
              f"{sim['median_resilient_rmse_pose_m']:.4f} m vs crippled greedy "
              f"{sim['median_crippled_greedy_rmse_pose_m']:.4f} m")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suiteopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic scenario file")
    g.add_argument("--kind", choices=sorted(_GEN_KEYS), default="linear")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--landmarks", type=int)
    g.add_argument("--spacing", type=float, help="pose spacing (m)")
    g.add_argument("--length", type=float, help="route length (m), linear only")
    g.add_argument("--halfwidth", type=float, help="landmark corridor half-width (m), linear only")
    g.add_argument("--loops", type=int, help="laps, loop only")
    g.add_argument("--mean-range", type=float, help="mean landmark distance (m), loop only")
    g.add_argument("--name")
    g.add_argument("--out", default="scenario.json")
    g.set_defaults(func=cmd_gen)

    def common(p, budget=True):
        src = p.add_argument_group("scenario")
        src.add_argument("--scenario", help="scenario JSON file")
        src.add_argument("--gen", help="bundled name (linear03, loop00) or "
                                       "kind[:key=value,...]; default linear03")
        p.add_argument("--library", default="default", help="sensor library JSON or 'default'")
        p.add_argument("--disparity-sigma", type=float, default=1.0,
                       help="stereo disparity error (px) for the default library")
        if budget:
            p.add_argument("--budget", type=float, default=DEFAULT_BUDGET)
        p.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("eval", help="score one sensor selection")
    common(e, budget=False)
    e.add_argument("--sensors", default="", help="comma-separated library ids")
    e.add_argument("--window", type=int, help="score only this time period index")
    e.add_argument("--period-s", type=float, default=5.0)
    e.add_argument("--out", help="also write the JSON here")
    e.set_defaults(func=cmd_eval)

    gr = sub.add_parser("greedy", help="budgeted greedy selection")
    common(gr)
    gr.add_argument("--objective", choices=["uniform", "cost-benefit"], default="uniform")
    gr.add_argument("--cardinality", type=int)
    gr.add_argument("--out", default="out")
    gr.set_defaults(func=cmd_greedy)

    pa = sub.add_parser("pareto", help="cost/performance front from both greedy variants")
    common(pa)
    pa.add_argument("--cardinality", type=int)
    pa.add_argument("--out", default="out")
    pa.add_argument("--svg", action="store_true", help="also write front.svg")
    pa.set_defaults(func=cmd_pareto)

    re_ = sub.add_parser("resilient", help="per-period resilient plan and comparison report")
    common(re_)
    re_.add_argument("--period-s", type=float, default=5.0)
    re_.add_argument("--runs", type=int, default=20, help="simulated solves per design")
    re_.add_argument("--out", default="out")
    re_.add_argument("--svg", action="store_true", help="also write grid.svg")
    re_.set_defaults(func=cmd_resilient)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SingularSystemError as exc:
        print(f"suiteopt: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"suiteopt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
