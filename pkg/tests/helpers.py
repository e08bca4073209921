"""Fixture loaders, independent oracles and random generators shared by the tests."""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import numpy as np

from kcfg_rl import load_config_space, read_dataset
from kcfg_rl.config_space import ConfigGroup
from kcfg_rl.dataset import Dataset

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_space():
    return load_config_space(fixture_text("space.jsonl"))


def fixture_dataset(space=None):
    return read_dataset(fixture_text("dataset.jsonl"), space or fixture_space())


def format_corpus() -> list[dict]:
    return [json.loads(line) for line in fixture_text("format_corpus.jsonl").splitlines()]


# --- answer validity oracle ----------------------------------------------------
# Written from the rule text alone: no code shared with kcfg_rl.rewards.

def oracle_answer_valid(group_type, candidates, given, domain_check=None) -> int:
    cands = list(candidates)
    if group_type == "Choice":
        if isinstance(given, str):
            return int(given in cands)
        if isinstance(given, (list, tuple)):
            return int(len(given) == 1 and given[0] in cands)
        return 0
    if group_type == "Menu":
        if isinstance(given, str):
            given = [given]
        if not isinstance(given, (list, tuple)) or len(given) == 0:
            return 0
        return int(all(g in cands for g in given))
    if not isinstance(given, dict) or sorted(given) != sorted(cands):
        return 0
    if group_type == "Bool":
        return int(all(v == "Yes" or v == "No" for v in given.values()))
    return int(all(domain_check(k, v) for k, v in given.items()))


def all_subsets(items):
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


# --- perf / normalization oracles ---------------------------------------------

def oracle_normalize(rewards):
    g = len(rewards)
    mu = sum(rewards) / g
    var = sum((r - mu) ** 2 for r in rewards) / g
    sigma = math.sqrt(var)
    if sigma == 0:
        return mu, 0.0, [0.0] * g
    return mu, sigma, [(r - mu) / sigma for r in rewards]


# --- benchmark oracle -----------------------------------------------------------

def oracle_score(bench_dict: dict, assignment: dict) -> float:
    """Recompute a synthetic score from the dumped coefficients."""
    key = lambda v: json.dumps(v)
    total = bench_dict["base"]
    for name, w in bench_dict["value_weights"].items():
        total += w.get(key(assignment[name]), 0.0)
    for name, (lo, hi, peak, height) in bench_dict["peaks"].items():
        if hi > lo:
            total -= height * abs(assignment[name] - peak) / (hi - lo)
    for edge, table in bench_dict["interactions"].items():
        child, parent = edge.split("|")
        total += table.get(f"{key(assignment[child])}|{key(assignment[parent])}", 0.0)
    return total


# --- random valid datasets --------------------------------------------------------

QUESTIONS = ["Improve throughput", "Réduire la latence", "降低延迟", "quote \" and \\ slash", ""]


def random_group(space, rng: np.random.Generator) -> ConfigGroup:
    by_kind: dict[str, list[str]] = {}
    for name in space.names():
        by_kind.setdefault(space[name].kind, []).append(name)
    kind = sorted(by_kind)[int(rng.integers(len(by_kind)))]
    pool = by_kind[kind]
    k = int(rng.integers(1, len(pool) + 1))
    cands = tuple(pool[i] for i in rng.permutation(len(pool))[:k])
    if kind == "Bool":
        answer = {c: ["Yes", "No"][int(rng.integers(2))] for c in cands}
    elif kind == "Choice":
        answer = cands[int(rng.integers(len(cands)))]
    elif kind == "Menu":
        m = int(rng.integers(1, len(cands) + 1))
        answer = tuple(sorted(cands[i] for i in rng.permutation(len(cands))[:m]))
    else:
        answer = {}
        for c in cands:
            dom = space[c].domain
            answer[c] = (int(rng.integers(dom.lo, dom.hi + 1)) if dom.is_range
                         else dom.literals[int(rng.integers(len(dom.literals)))])
    question = QUESTIONS[int(rng.integers(len(QUESTIONS)))]
    return ConfigGroup(kind, cands, question, answer)


def random_dataset(space, rng: np.random.Generator, max_groups: int = 8) -> Dataset:
    n = int(rng.integers(0, max_groups + 1))
    labels = ("official", "historical", "expert", "benchmark", "other")
    groups = tuple(random_group(space, rng) for _ in range(n))
    prov = tuple(labels[int(rng.integers(len(labels)))] for _ in range(n))
    return Dataset(groups, prov)


def relative_error(a, b, floor: float = 1e-8) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


# --- exhaustive answer-reward sweep -------------------------------------------------

def _sweep_space():
    lines = []
    for i in range(6):
        lines.append(json.dumps({"name": f"B{i}", "kind": "Bool"}))
        lines.append(json.dumps({"name": f"C{i}", "kind": "Choice", "domain": ["n", "y"]}))
        lines.append(json.dumps({"name": f"M{i}", "kind": "Menu", "domain": ["n", "y"]}))
        dom = {"range": [0, 3]} if i % 2 == 0 else {"values": [1, "x"]}
        lines.append(json.dumps({"name": f"V{i}", "kind": "Value", "domain": dom}))
    return load_config_space("\n".join(lines))


_VALUE_PROBES = {
    "range": ([0, 3, 2], [-1, 4, "x", True, 1.5]),
    "values": ([1, "x"], [2, "1", True, "X"]),
}


def _domain_oracle(name, v):
    # V0, V2, V4: integers 0..3; V1, V3, V5: exactly 1 or "x"
    if int(name[1:]) % 2 == 0:
        return type(v) is int and 0 <= v <= 3
    return (type(v) is int and v == 1) or (type(v) is str and v == "x")


def answer_reward_sweep(answer_reward) -> tuple[int, list]:
    """Compare ``answer_reward`` with the oracle on every candidate set of size 1..6.

    Returns (cases checked, mismatches).
    """
    from kcfg_rl.response_format import ParseFailure

    space = _sweep_space()
    checked, bad = 0, []

    def check(gtype, cands, given):
        nonlocal checked
        group = ConfigGroup(gtype, cands, "q", None)
        want = oracle_answer_valid(gtype, cands, given, _domain_oracle)
        got = answer_reward(group, given, space)
        checked += 1
        if got != want:
            bad.append((gtype, cands, given, got, want))

    for prefix, gtype in (("C", "Choice"), ("M", "Menu"), ("B", "Bool"), ("V", "Value")):
        names = [f"{prefix}{i}" for i in range(6)]
        for cands in all_subsets(names):
            if not cands:
                continue
            outsiders = [n for n in names if n not in cands][:1] + ["UNKNOWN"]
            pool = list(cands) + outsiders
            for junk in (None, 3, ParseFailure("missing"), "", ()):
                check(gtype, cands, junk)
            if gtype in ("Choice", "Menu"):
                for item in pool:
                    check(gtype, cands, item)
                for sub in all_subsets(pool):
                    check(gtype, cands, tuple(sub))
                    check(gtype, cands, list(sub))
                for a in cands:
                    check(gtype, cands, (a, a))
                continue
            keysets = [list(cands)] + [[c for c in cands if c != d] for d in cands] + \
                      [list(cands) + [o] for o in outsiders]
            for keys in keysets:
                if gtype == "Bool":
                    for combo in itertools.product(["Yes", "No"], repeat=len(keys)):
                        check(gtype, cands, dict(zip(keys, combo)))
                    for j, k in enumerate(keys):
                        for wrong in ("Maybe", "yes", True, 1):
                            d = {kk: "Yes" for kk in keys}
                            d[k] = wrong
                            check(gtype, cands, d)
                else:
                    for pattern in itertools.product((0, 1), repeat=len(keys)):
                        for rep in range(3):
                            d = {}
                            for k, out in zip(keys, pattern):
                                probes = _VALUE_PROBES["range" if k == "UNKNOWN" or int(k[1:]) % 2 == 0 else "values"]
                                options = probes[out]
                                d[k] = options[rep % len(options)]
                            check(gtype, cands, d)
    return checked, bad
