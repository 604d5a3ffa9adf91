# %% [markdown]
# # Cost versus performance
#
# Uniform greedy maximizes the score; cost-benefit greedy maximizes score
# gained per dollar. Pooling every intermediate suite from both runs and
# keeping the non-dominated ones traces the Pareto front.

# %%
from pathlib import Path

from suiteopt import Evaluator, build_default_library, bundled_scenario, greedy, pareto_front
from suiteopt.cli import pareto_svg

scenario = bundled_scenario("linear03")
library = build_default_library()
ev = Evaluator(scenario)
uniform_sel, uniform = greedy(library, scenario, 110_000, "uniform", evaluator=ev)
_, cost_benefit = greedy(library, scenario, 110_000, "cost_benefit", evaluator=ev)
front = pareto_front([uniform, cost_benefit], ev.baseline)
print(f"{len(uniform.steps) + len(cost_benefit.steps)} suites pooled, {len(front)} on the front")

# %% [markdown]
# Cheap suites reach most of the attainable performance.

# %%
for target in (0.9, 0.95, 0.99, 1.0):
    cheapest = next(p for p in front if p.score_norm >= target)
    print(f">= {target:4.0%} of best: ${cheapest.cost_usd:>9,.0f} ({len(cheapest.selection)} sensors, "
          f"{cheapest.objective_tag})")
print(f"uniform greedy final suite: ${uniform_sel.total_cost_usd:,.0f}")

# %%
span = max(s.score for t in (uniform, cost_benefit) for s in t.steps) - ev.baseline
pool = [(s.selection.total_cost_usd, (s.score - ev.baseline) / span, t.objective)
        for t in (uniform, cost_benefit) for s in t.steps]
out = Path("pareto_front.svg")
out.write_text(pareto_svg(pool, front), encoding="utf-8")
print(f"wrote {out}")
