"""Aggregate per-test benchmark results into one index.

Run: python3 demos/06_unixbench.py
"""

from pathlib import Path

from kcfg_rl import analysis_ratios, read_metrics_csv
from kcfg_rl.bench_score import score_report

csv_text = (Path(__file__).parents[1] / "tests/fixtures/metrics.csv").read_text()
report = score_report(read_metrics_csv(csv_text))
for e in report.entries:
    print(f"{e.test:40s} index {e.index:5.2f}")
print(f"aggregate (100 x geometric mean): {report.aggregate:.4f}")

print(analysis_ratios(valid=781, total_proposed=1000, improvement=35.0, resource_utilization=1.0))
