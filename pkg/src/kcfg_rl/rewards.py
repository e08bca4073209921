"""Rule-based rewards: answer validity, performance gain, their combination,
the warm-up reward and group-relative advantage normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .config_space import BOOL_VALUES, ConfigGroup, ConfigSpace
from .response_format import ParseFailure


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0       # answer
    beta: float = 1.0        # format
    gamma_perf: float = 1.0  # performance

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma_perf) < 0:
            raise ValueError("reward weights must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "RewardWeights":
        """``"a,b,g"`` -> weights."""
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("weights are three comma-separated numbers a,b,g")
        return cls(*parts)


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_answer: float
    r_perf: float
    weights: RewardWeights
    combined: float


@dataclass(frozen=True)
class PerfTerm:
    """One modification's contribution to the performance reward."""

    p_base: float
    p_new: float
    lam: float = 0.0
    c_config: float = 0.0
    c_max: float = 1.0

    def __post_init__(self):
        if not self.p_base > 0:
            raise ValueError(f"p_base must be positive, got {self.p_base}")
        if not self.p_new > 0:
            raise ValueError(f"p_new must be positive, got {self.p_new}")
        if not self.c_max > 0:
            raise ValueError(f"c_max must be positive, got {self.c_max}")
        if self.lam < 0 or self.c_config < 0:
            raise ValueError("lam and c_config must be nonnegative")
        if self.c_config > self.c_max:
            raise ValueError("c_config cannot exceed c_max")


PerfObservation = Sequence[PerfTerm]


def answer_reward(group: ConfigGroup, given: Any, space: ConfigSpace) -> float:
    """1.0 for a type-valid modification of ``group``, 0.0 otherwise.

    Bool: every candidate gets "Yes" or "No". Menu: a non-empty selection drawn
    only from the candidates. Choice: exactly one candidate. Value: every
    candidate gets a literal inside its domain.
    """
    if given is None or isinstance(given, ParseFailure):
        return 0.0
    cands = set(group.candidate)
    gtype = group.group_type
    if gtype in ("Bool", "Value"):
        if not isinstance(given, dict) or set(given) != cands:
            return 0.0
        if gtype == "Bool":
            return float(all(isinstance(v, str) and v in BOOL_VALUES for v in given.values()))
        return float(all(space[s].allows(v) for s, v in given.items()))
    if isinstance(given, str):
        picked = [given]
    elif isinstance(given, (list, tuple, set, frozenset)):
        picked = list(given)
    else:
        return 0.0
    if not all(isinstance(p, str) for p in picked):
        return 0.0
    if gtype == "Choice":
        return float(len(picked) == 1 and picked[0] in cands)
    if gtype == "Menu":
        return float(len(picked) > 0 and set(picked) <= cands)
    return 0.0


def perf_reward(obs: Iterable[PerfTerm]) -> float:
    """Sum over modifications of relative gain times (1 + lam * c_config / c_max)."""
    total = 0.0
    for t in obs:
        total += ((t.p_new - t.p_base) / t.p_base) * (1.0 + t.lam * t.c_config / t.c_max)
    return total


def combined_reward(r_answer: float, r_format: float, r_perf: float,
                    weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    combined = weights.alpha * r_answer + weights.beta * r_format + weights.gamma_perf * r_perf
    return RewardBreakdown(r_format, r_answer, r_perf, weights, combined)


def warmup_reward(per_group: Iterable[tuple[float, float, float, float]]) -> float:
    """Sum of alpha_i * r_answer_i + beta_i * r_format_i over groups."""
    total = 0.0
    for r_answer, r_format, alpha, beta in per_group:
        total += alpha * r_answer + beta * r_format
    return total


def normalize_group(rewards: Sequence[float]) -> tuple[float, float, np.ndarray]:
    """Group mean, population std and advantages ``(r - mu) / sigma``.

    A constant group carries no signal and gets all-zero advantages.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        raise ValueError("cannot normalize an empty group")
    mu = float(r.mean())
    if np.all(r == r[0]):
        # the float mean of equal values can be off by an ulp; don't amplify it
        return mu, 0.0, np.zeros_like(r)
    sigma = math.sqrt(float(np.mean((r - mu) ** 2)))
    if sigma == 0.0:
        return mu, sigma, np.zeros_like(r)
    return mu, sigma, (r - mu) / sigma
