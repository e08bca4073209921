"""Drop reward terms one at a time and watch validity and gain move.

Run: python3 demos/05_ablation.py [n_seeds]   (about 2 s per seed)
"""

import sys

import numpy as np

from kcfg_rl import ablation_trial

n = int(sys.argv[1]) if len(sys.argv) > 1 else 10
rows = [ablation_trial(seed) for seed in range(n)]
print(f"{'scheme':15s} {'validity':>9s} {'gain %':>8s}")
for scheme in rows[0]:
    v = np.mean([r[scheme]["validity_rate"] for r in rows])
    g = np.mean([r[scheme]["perf_gain"] for r in rows])
    print(f"{scheme:15s} {v:9.3f} {g:+8.2f}")
wins_v = sum(r["format"]["validity_rate"] < r["format+answer"]["validity_rate"] for r in rows)
wins_g = sum(r["format+answer"]["perf_gain"] < r["full"]["perf_gain"] for r in rows)
print(f"\nanswer reward raises validity in {wins_v}/{n} seeds")
print(f"performance reward raises gain in {wins_g}/{n} seeds")
