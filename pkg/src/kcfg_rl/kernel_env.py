"""Kernel tuning environment backed by a planted-optimum synthetic benchmark.

Compiling, booting and benchmarking a real kernel is replaced by a seeded
score model: a base score plus one weight per (symbol, value), a tent-shaped
term peaking at the planted value for integer-range symbols, and nonnegative interaction terms on dependency
edges. The model is generated around a planted, dependency-valid assignment
that every term favours, so that assignment is the unique maximizer and can
be certified by exhaustive search on small spaces.
"""

from __future__ import annotations

import itertools
import json
import zlib
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .config_space import (
    BOOL_VALUES, ConfigGroup, ConfigSpace, ConfigSymbol, check_dependencies, group_by_dependency,
    load_config_space,
)
from .dataset import Dataset
from .kb import KnowledgeBase, build_knowledge_base, kb_query
from .policy import canonical_answers
from .rewards import PerfTerm, RewardBreakdown, RewardWeights, answer_reward, combined_reward, perf_reward

METRIC = "score"
SCORE_FLOOR = 3.0
PLANT_ATTEMPTS = 16


class InvalidAssignmentError(ValueError):
    pass


def _finite_values(sym: ConfigSymbol) -> list[Any] | None:
    if sym.kind == "Bool":
        return list(BOOL_VALUES)
    if sym.kind in ("Choice", "Menu"):
        return list(sym.domain)
    if not sym.domain.is_range:
        return list(sym.domain.literals)
    return None


def _vkey(v: Any) -> str:
    return json.dumps(v)


def apply_answer(space: ConfigSpace, group: ConfigGroup, answer: Any,
                 assignment: Mapping[str, Any]) -> dict[str, Any]:
    """Assignment after applying a type-valid ``answer`` for ``group``.

    Choice/Menu members named in the answer take their selected state and the
    group's other members fall back to their default.
    """
    out = dict(assignment)
    if group.group_type in ("Bool", "Value"):
        out.update(answer)
    else:
        picked = {answer} if isinstance(answer, str) else set(answer)
        for c in group.candidate:
            sym = space[c]
            out[c] = sym.selected if c in picked else sym.default
    return out


@dataclass
class SyntheticBenchmark:
    """Seeded score model; see the module docstring."""

    workload: str
    seed: int
    base: float
    value_weights: dict[str, dict[str, float]]             # symbol -> json(value) -> weight
    peaks: dict[str, tuple[int, int, int, float]]           # range symbol -> (lo, hi, peak, height)
    interactions: dict[str, dict[str, float]]               # "child|parent" -> "json(vc)|json(vp)" -> w
    optimum: dict[str, Any]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def generate(cls, space: ConfigSpace, workload: str = "unixbench", seed: int = 0,
                 groups: Sequence[ConfigGroup] | None = None, floor: float = SCORE_FLOOR) -> "SyntheticBenchmark":
        """Draw a planted optimum and coefficients that make it the unique maximizer.

        With ``groups`` the planted assignment is built by applying one
        canonical answer per group in order, so it is reachable by actions;
        it differs from the default assignment whenever that is possible.
        The base is set so no assignment scores below ``floor``.
        """
        rng = np.random.default_rng([seed, zlib.crc32(workload.encode())])
        default = space.default_assignment()
        planted = default
        if groups is not None:
            # redraw a few times if the walk lands on the default assignment,
            # which would leave nothing to improve
            for _ in range(PLANT_ATTEMPTS):
                planted = default
                for g in groups:
                    answers = list(canonical_answers(space, g))
                    for k in rng.permutation(len(answers)):
                        trial = apply_answer(space, g, answers[k], planted)
                        if not check_dependencies(space, trial):
                            planted = trial
                            break
                if planted != default:
                    break
        else:
            for name in space.topo_order:
                sym = space[name]
                finite = _finite_values(sym)
                options = finite if finite is not None else [sym.domain.lo, sym.domain.hi]
                value = options[int(rng.integers(len(options)))]
                # parents come first in topological order, so their planted values are final
                if sym.is_active(value) and any(planted[d] != v for d, v in sym.depends_on):
                    value = sym.default
                planted[name] = value

        value_weights: dict[str, dict[str, float]] = {}
        peaks: dict[str, tuple[int, int, int, float]] = {}
        worst = 0.0
        for name in space.topo_order:
            sym = space[name]
            finite = _finite_values(sym)
            if finite is None:
                mag = float(rng.uniform(1.0, 3.0))
                peaks[name] = (sym.domain.lo, sym.domain.hi, planted[name], mag)
                worst += mag
                continue
            w = {}
            for v in finite:
                w[_vkey(v)] = float(rng.uniform(-3.0, 0.0))
            w[_vkey(planted[name])] = float(rng.uniform(1.0, 3.0))
            value_weights[name] = w
            worst -= min(w.values())

        interactions: dict[str, dict[str, float]] = {}
        for name in space.topo_order:
            sym = space[name]
            fc = _finite_values(sym)
            for dep in sorted({d for d, _ in sym.depends_on}):
                fp = _finite_values(space[dep])
                if fc is None or fp is None:
                    continue
                table = {f"{_vkey(a)}|{_vkey(b)}": float(rng.uniform(0.0, 0.5))
                         for a, b in itertools.product(fc, fp)}
                table[f"{_vkey(planted[name])}|{_vkey(planted[dep])}"] = 0.6
                interactions[f"{name}|{dep}"] = table

        return cls(workload, seed, floor + worst, value_weights, peaks, interactions, planted)

    def score(self, assignment: Mapping[str, Any]) -> float:
        """Raw score; no dependency check."""
        key = tuple(sorted((k, _vkey(v)) for k, v in assignment.items()))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        total = self.base
        for name in sorted(self.value_weights):
            total += self.value_weights[name].get(_vkey(assignment[name]), 0.0)
        for name in sorted(self.peaks):
            lo, hi, peak, height = self.peaks[name]
            if hi > lo:
                total -= height * abs(assignment[name] - peak) / (hi - lo)
        for edge in sorted(self.interactions):
            child, parent = edge.split("|")
            total += self.interactions[edge].get(f"{_vkey(assignment[child])}|{_vkey(assignment[parent])}", 0.0)
        self._cache[key] = total
        return total

    def evaluate(self, space: ConfigSpace, assignment: Mapping[str, Any]) -> dict[str, float]:
        bad = check_dependencies(space, assignment)
        if bad:
            raise InvalidAssignmentError(f"dependency violations: {bad}")
        return {METRIC: self.score(assignment)}

    def to_dict(self) -> dict:
        return {
            "workload": self.workload, "seed": self.seed, "base": self.base,
            "value_weights": self.value_weights,
            "peaks": {k: list(v) for k, v in self.peaks.items()},
            "interactions": self.interactions,
            "optimum": self.optimum,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SyntheticBenchmark":
        return cls(d["workload"], d["seed"], d["base"], d["value_weights"],
                   {k: tuple(v) for k, v in d["peaks"].items()}, d["interactions"], d["optimum"])


def brute_force_optimum(space: ConfigSpace, bench: SyntheticBenchmark,
                        max_symbols: int = 16) -> tuple[list[dict[str, Any]], float]:
    """All dependency-valid assignments attaining the maximal score.

    Range symbols only need their endpoints, default, required values and
    score peak: the score is piecewise linear between those points.
    """
    if len(space) > max_symbols:
        raise ValueError(f"space has {len(space)} symbols, brute force capped at {max_symbols}")
    names = space.names()
    required: dict[str, set] = {n: set() for n in names}
    for sym in space.symbols.values():
        for dep, v in sym.depends_on:
            required[dep].add(v)
    choices = []
    for n in names:
        sym = space[n]
        finite = _finite_values(sym)
        if finite is None:
            finite = sorted({sym.domain.lo, sym.domain.hi, sym.default, bench.peaks[n][2]} | required[n])
        choices.append(finite)
    best: list[dict[str, Any]] = []
    best_score = -np.inf
    for combo in itertools.product(*choices):
        a = dict(zip(names, combo))
        if check_dependencies(space, a):
            continue
        s = bench.score(a)
        if s > best_score:
            best, best_score = [a], s
        elif s == best_score:
            best.append(a)
    return best, float(best_score)


def synthetic_benchmark(space: ConfigSpace, assignment: Mapping[str, Any], workload: str = "unixbench",
                        seed: int = 0, groups: Sequence[ConfigGroup] | None = None) -> dict[str, float]:
    return SyntheticBenchmark.generate(space, workload, seed, groups).evaluate(space, assignment)


@dataclass(frozen=True)
class KernelState:
    assignment: Mapping[str, Any]
    workload: str
    metrics: Mapping[str, float]


@dataclass(frozen=True)
class Action:
    group_index: int
    answer: Any


@dataclass(frozen=True)
class Transition:
    state: KernelState
    action: Action
    reward: RewardBreakdown
    next_state: KernelState
    valid: bool = True
    info: Mapping[str, Any] = field(default_factory=dict)


class KernelEnv:
    """Single-threaded environment over an episode's ordered group list."""

    def __init__(self, space: ConfigSpace, groups: Sequence[ConfigGroup],
                 benchmark: SyntheticBenchmark | None = None, kb: KnowledgeBase | None = None,
                 weights: RewardWeights = RewardWeights(), complexity_lambda: float = 0.0,
                 workload: str = "unixbench", seed: int = 0):
        self.space = space
        self.groups = tuple(groups)
        self.benchmark = benchmark or SyntheticBenchmark.generate(space, workload, seed, self.groups)
        self.kb = kb if kb is not None else build_knowledge_base(space)
        self.weights = weights
        self.complexity_lambda = complexity_lambda

    @property
    def workload(self) -> str:
        return self.benchmark.workload

    def reset(self) -> KernelState:
        a = self.space.default_assignment()
        return KernelState(a, self.workload, self.benchmark.evaluate(self.space, a))

    def step(self, state: KernelState, action: Action, r_format: float = 1.0,
             weights: RewardWeights | None = None) -> Transition:
        if not 0 <= action.group_index < len(self.groups):
            raise IndexError(f"group index {action.group_index} out of range")
        weights = weights or self.weights
        group = self.groups[action.group_index]
        r_answer = answer_reward(group, action.answer, self.space)
        nxt = state
        r_perf = 0.0
        valid = False
        if r_answer:
            new = apply_answer(self.space, group, action.answer, state.assignment)
            if check_dependencies(self.space, new):
                r_answer = 0.0
            else:
                valid = True
                metrics = self.benchmark.evaluate(self.space, new)
                changed = sum(new[c] != state.assignment[c] for c in group.candidate)
                term = PerfTerm(state.metrics[METRIC], metrics[METRIC], self.complexity_lambda,
                                float(changed), float(len(group.candidate)))
                r_perf = perf_reward([term])
                nxt = KernelState(new, state.workload, metrics)
        reward = combined_reward(r_answer, r_format, r_perf, weights)
        return Transition(state, action, reward, nxt, valid)

    def query(self, text: str) -> str | None:
        return kb_query(self.kb, text)


def reset(space: ConfigSpace, groups: Sequence[ConfigGroup], workload: str = "unixbench",
          seed: int = 0) -> KernelState:
    return KernelEnv(space, groups, workload=workload, seed=seed).reset()


TOY_SPACE_JSONL = """\
# eight Bool symbols, two dependency trees
{"name": "CONFIG_SMP", "kind": "Bool"}
{"name": "CONFIG_NUMA", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_SMP", "value": "Yes"}]}
{"name": "CONFIG_SCHED_MC", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_SMP", "value": "Yes"}]}
{"name": "CONFIG_SCHED_SMT", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_SMP", "value": "Yes"}]}
{"name": "CONFIG_MIGRATION", "kind": "Bool"}
{"name": "CONFIG_COMPACTION", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_MIGRATION", "value": "Yes"}]}
{"name": "CONFIG_TRANSPARENT_HUGEPAGE", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_MIGRATION", "value": "Yes"}]}
{"name": "CONFIG_KSM", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_MIGRATION", "value": "Yes"}]}
"""


def make_toy_space() -> ConfigSpace:
    """The eight-symbol Bool space used by the convergence and ablation checks."""
    return load_config_space(TOY_SPACE_JSONL)


def make_toy_problem(seed: int = 0, workload: str = "unixbench",
                     space: ConfigSpace | None = None) -> tuple[ConfigSpace, Dataset, SyntheticBenchmark]:
    """Space, one-symbol-per-group dataset (answers = planted optimum) and benchmark."""
    space = space or make_toy_space()
    skeletons = group_by_dependency(space, 1)
    bench = SyntheticBenchmark.generate(space, workload, seed, skeletons)
    groups = []
    for g in skeletons:
        if g.group_type in ("Bool", "Value"):
            answer = {c: bench.optimum[c] for c in g.candidate}
        else:
            answer = next(c for c in g.candidate if bench.optimum[c] == space[c].selected)
        groups.append(ConfigGroup(g.group_type, g.candidate, f"maximize {workload} score", answer))
    return space, Dataset(tuple(groups), ("benchmark",) * len(groups)), bench
