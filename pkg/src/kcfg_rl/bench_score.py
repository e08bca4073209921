"""UnixBench-style aggregate scores and the comprehensive-analysis ratios."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable


class MetricsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class BenchEntry:
    test: str
    measured: float
    reference: float

    @property
    def index(self) -> float:
        return self.measured / self.reference


@dataclass(frozen=True)
class BenchReport:
    entries: tuple[BenchEntry, ...]
    aggregate: float

    def to_json(self) -> str:
        body = {
            "entries": [dict(asdict(e), index=e.index) for e in self.entries],
            "aggregate": self.aggregate,
        }
        return json.dumps(body, indent=2, sort_keys=True)


def unixbench_score(entries: Iterable[BenchEntry]) -> float:
    """100 x geometric mean of measured/reference over the tests.

    One test gives exactly measured / reference * 100.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("no benchmark entries")
    for e in entries:
        if not (e.measured > 0 and e.reference > 0):
            raise ValueError(f"{e.test}: scores must be positive")
    if len(entries) == 1:
        return entries[0].measured / entries[0].reference * 100.0
    log_mean = math.fsum(math.log(e.index) for e in entries) / len(entries)
    return math.exp(log_mean) * 100.0


def read_metrics_csv(text: str) -> list[BenchEntry]:
    """Parse ``test,measured,reference`` CSV text."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["test", "measured", "reference"]:
        raise MetricsFormatError("header must be test,measured,reference")
    entries = []
    for lineno, row in enumerate(reader, 2):
        try:
            measured, reference = float(row["measured"]), float(row["reference"])
        except (TypeError, ValueError):
            raise MetricsFormatError(f"line {lineno}: measured and reference must be numbers") from None
        if not (measured > 0 and reference > 0):
            raise MetricsFormatError(f"line {lineno}: scores must be positive")
        entries.append(BenchEntry(row["test"], measured, reference))
    if not entries:
        raise MetricsFormatError("no benchmark rows")
    return entries


def score_report(entries: Iterable[BenchEntry]) -> BenchReport:
    entries = tuple(entries)
    return BenchReport(entries, unixbench_score(entries))


def _ratio(name: str, num: float, den: float) -> float:
    if den == 0:
        raise ZeroDivisionError(f"{name}: zero denominator")
    return num / den


def performance_efficiency(improvement: float, resource_utilization: float) -> float:
    return _ratio("performance efficiency", improvement, resource_utilization)


def adaptation_speed(time_to_target: float, iterations: float) -> float:
    return _ratio("adaptation speed", time_to_target, iterations)


def scaling_factor(larger_workload_perf: float, smaller_workload_perf: float) -> float:
    return _ratio("scaling factor", larger_workload_perf, smaller_workload_perf)


def configuration_accuracy(valid: float, total_proposed: float) -> float:
    return _ratio("configuration accuracy", valid, total_proposed)


def learning_efficiency(performance_gain: float, training_data: float) -> float:
    return _ratio("learning efficiency", performance_gain, training_data)


def resource_utilization(resources_used: float, max_available: float) -> float:
    return _ratio("resource utilization", resources_used, max_available)


_RATIOS = {
    "performance_efficiency": (performance_efficiency, ("improvement", "resource_utilization")),
    "adaptation_speed": (adaptation_speed, ("time_to_target", "iterations")),
    "scaling_factor": (scaling_factor, ("larger_workload_perf", "smaller_workload_perf")),
    "configuration_accuracy": (configuration_accuracy, ("valid", "total_proposed")),
    "learning_efficiency": (learning_efficiency, ("performance_gain", "training_data")),
    "resource_utilization": (resource_utilization, ("resources_used", "max_available")),
}


def analysis_ratios(**inputs: float) -> dict[str, float]:
    """Every ratio whose numerator and denominator are both supplied.

    >>> analysis_ratios(valid=781, total_proposed=1000)
    {'configuration_accuracy': 0.781}
    """
    known = {arg for _, args in _RATIOS.values() for arg in args}
    unknown = set(inputs) - known
    if unknown:
        raise TypeError(f"unknown inputs {sorted(unknown)}")
    out = {}
    for name, (fn, (num, den)) in _RATIOS.items():
        if num in inputs and den in inputs:
            out[name] = fn(inputs[num], inputs[den])
    return out
