"""Train on the eight-switch toy problem and compare with the exhaustive optimum.

Run: python3 demos/04_exploration.py [seed]
"""

import sys

import numpy as np

from kcfg_rl import TrainConfig, evaluate_greedy, init_params, make_toy_problem, run_exploration
from kcfg_rl.kernel_env import brute_force_optimum

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
space, dataset, bench = make_toy_problem(seed)
best, best_score = brute_force_optimum(space, bench)
print(f"exhaustive search: {len(best)} optimum, score {best_score:.3f}")

result = run_exploration(dataset, space, init_params(space, dataset.groups, seed), TrainConfig(episodes=63),
                         seed=seed)
ma = lambda s: np.mean(result.curve[s:s + 20])
print(f"{len(result.curve)} steps; 20-step mean reward {ma(0):.3f} at the start, {ma(400):.3f} at step 400")

report = evaluate_greedy(result.params, space, dataset.groups, bench)
print(f"greedy policy: validity {report.validity_rate:.2f}, gain {report.perf_gain:+.1f}%")
print("matches the optimum:", report.assignment == best[0])
for name in space.names():
    flag = "" if report.assignment[name] == best[0][name] else "  <- differs"
    print(f"  {name:20s} {report.assignment[name]}{flag}")
