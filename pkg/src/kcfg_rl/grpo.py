"""GRPO training: group rollouts, clipped objective, updates and the two phases."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .config_space import ConfigGroup, ConfigSpace
from .dataset import Dataset
from .kernel_env import METRIC, Action, KernelEnv, KernelState, Transition
from .policy import (
    PolicyParams, SampledAction, ToyPolicy, action_probs, canonical_answers, greedy_index,
    init_params, sample_action,
)
from .response_format import AgentResponse, format_reward, parse_answer, parse_response
from .rewards import (
    PerfTerm, RewardWeights, answer_reward, normalize_group, perf_reward, warmup_reward,
)

PHASES = ("warmup", "exploration")
CLIP_MODES = ("literal", "ppo")


@dataclass(frozen=True)
class TrainConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    discount: float = 0.99
    explore_eps0: float = 0.2
    explore_decay: float = 0.95
    learning_rate: float = 0.1
    smoothing_coef: float = 1.0
    steps_per_episode: int | None = None   # None: one step per group
    episodes: int = 50
    weights: RewardWeights = RewardWeights()
    phase: str = "exploration"
    format_noise: float = 0.0
    clip_mode: str = "literal"
    eval_every: int = 10
    use_tool: bool = True
    complexity_lambda: float = 0.0
    workload: str = "unixbench"

    def __post_init__(self):
        checks = [
            (self.group_size >= 2, "group_size must be >= 2"),
            (self.clip_eps > 0, "clip_eps must be > 0"),
            (0 <= self.discount <= 1, "discount must lie in [0, 1]"),
            (0 <= self.explore_eps0 <= 1, "explore_eps0 must lie in [0, 1]"),
            (0 < self.explore_decay <= 1, "explore_decay must lie in (0, 1]"),
            (self.learning_rate > 0, "learning_rate must be > 0"),
            (0 <= self.smoothing_coef <= 1, "smoothing_coef must lie in [0, 1]"),
            (self.steps_per_episode is None or self.steps_per_episode >= 1, "steps_per_episode must be >= 1"),
            (self.episodes >= 1, "episodes must be >= 1"),
            (self.phase in PHASES, f"phase must be one of {PHASES}"),
            (0 <= self.format_noise <= 1, "format_noise must lie in [0, 1]"),
            (self.clip_mode in CLIP_MODES, f"clip_mode must be one of {CLIP_MODES}"),
            (self.eval_every >= 1, "eval_every must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["weights"] = [self.weights.alpha, self.weights.beta, self.weights.gamma_perf]
        return d


@dataclass(frozen=True)
class ActionRecord:
    """One sampled action with what the update needs."""

    group_index: int
    answer_index: int
    prob_old: float
    reward: float
    advantage: float = 0.0


@dataclass
class Trajectory:
    group_size: int
    transitions: list[Transition] = field(default_factory=list)
    records: list[ActionRecord] = field(default_factory=list)


@dataclass(frozen=True)
class StepOutcome:
    action: SampledAction
    emission: str
    r_format: float
    given: Any
    transition: Transition
    tool_results: tuple[str | None, ...] = ()


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list[float] = field(default_factory=list)
    answer_curve: list[float] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)
    explore_eps: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    evaluations: list[dict] = field(default_factory=list)


def select_action(params: PolicyParams, group_index: int, explore_eps: float,
                  rng: np.random.Generator) -> SampledAction:
    """Epsilon-greedy: uniform over canonical answers with prob. explore_eps, else pi_theta."""
    if not 0.0 <= explore_eps <= 1.0:
        raise ValueError("explore_eps must lie in [0, 1]")
    if rng.random() < explore_eps:
        k = len(params.answers[group_index])
        idx = int(rng.integers(k))
        probs = action_probs(params, group_index)
        old = action_probs(params, group_index, old=True)
        return SampledAction(group_index, idx, params.answers[group_index][idx],
                             float(probs[idx]), float(old[idx]), explored=True)
    return sample_action(params, group_index, rng)


def score_emission(text: str, group: ConfigGroup) -> tuple[float, Any, AgentResponse | None]:
    """(format reward, parsed answer or failure, parsed response)."""
    parsed = parse_response(text)
    r_format = format_reward(parsed)
    if isinstance(parsed, AgentResponse):
        return r_format, parse_answer(parsed.answer, group.group_type), parsed
    return r_format, parsed, None


def rollout_group(env: KernelEnv, state: KernelState, group_index: int, params: PolicyParams,
                  config: TrainConfig, rng: np.random.Generator, explore_eps: float = 0.0,
                  policy: ToyPolicy | None = None) -> list[StepOutcome]:
    """G independent single-step outcomes branched from ``state``, in sample order."""
    if config.group_size < 2:
        raise ValueError("GRPO needs group_size >= 2")
    if params.snapshot is None:
        raise ValueError("take a snapshot (theta_old) before rolling out")
    policy = policy or ToyPolicy(params, config.format_noise, config.use_tool)
    group = env.groups[group_index]
    kb = env.kb if config.use_tool else None
    out = []
    for _ in range(config.group_size):
        a = select_action(params, group_index, explore_eps, rng)
        text = policy.emit(group, a.answer, rng, kb)
        r_format, given, parsed = score_emission(text, group)
        tr = env.step(state, Action(group_index, given), r_format, config.weights)
        tools = tuple(env.query(q.strip()) for q in parsed.tool_calls) if parsed else ()
        out.append(StepOutcome(a, text, r_format, given, tr, tools))
    return out


def clipped_objective(prob_new: float, prob_old: float, advantage: float, clip_eps: float,
                      mode: str = "literal") -> float:
    """Per-action surrogate.

    ``literal``: min(ratio, 1 + eps) * A, one-sided (no lower clip).
    ``ppo``: min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
    """
    if prob_old <= 0:
        raise ValueError("prob_old must be positive")
    ratio = prob_new / prob_old
    if mode == "literal":
        return min(ratio, 1.0 + clip_eps) * advantage
    if mode == "ppo":
        return min(ratio * advantage, min(max(ratio, 1.0 - clip_eps), 1.0 + clip_eps) * advantage)
    raise ValueError(f"unknown clip mode {mode!r}")


def _term_active(ratio: float, advantage: float, clip_eps: float, mode: str) -> bool:
    if mode == "literal":
        return ratio < 1.0 + clip_eps
    return not ((advantage > 0 and ratio > 1.0 + clip_eps) or (advantage < 0 and ratio < 1.0 - clip_eps))


def batch_objective(params: PolicyParams, records: Sequence[ActionRecord], clip_eps: float,
                    mode: str = "literal", theta: np.ndarray | None = None) -> float:
    """Mean clipped surrogate over ``records`` at ``theta`` (default: params.theta)."""
    p = params if theta is None else params.with_theta(theta)
    total = 0.0
    for rec in records:
        prob = action_probs(p, rec.group_index)[rec.answer_index]
        total += clipped_objective(prob, rec.prob_old, rec.advantage, clip_eps, mode)
    return total / len(records)


def batch_gradient(params: PolicyParams, records: Sequence[ActionRecord], clip_eps: float,
                   mode: str = "literal") -> np.ndarray:
    """Analytic gradient of :func:`batch_objective` w.r.t. theta.

    d ratio / d logits = ratio * (one_hot - probs); terms where the clip binds
    are constant and contribute nothing.
    """
    grad = np.zeros_like(params.theta)
    for rec in records:
        probs = action_probs(params, rec.group_index)
        ratio = probs[rec.answer_index] / rec.prob_old
        if rec.advantage == 0.0 or not _term_active(ratio, rec.advantage, clip_eps, mode):
            continue
        g = -probs
        g[rec.answer_index] += 1.0
        grad[params.span(rec.group_index)] += ratio * rec.advantage * g
    return grad / len(records)


def update_policy(params: PolicyParams, trajectory: Trajectory | Sequence[ActionRecord],
                  config: TrainConfig) -> tuple[PolicyParams, float]:
    """One ascent step on the batch objective, then smoothing toward theta_old.

    Returns the new params (snapshot refreshed) and the loss, i.e. minus the
    objective before the step.
    """
    records = trajectory.records if isinstance(trajectory, Trajectory) else list(trajectory)
    if params.snapshot is None:
        raise ValueError("update needs the theta_old snapshot")
    if not records:
        return params.copy(), 0.0
    for rec in records:
        if not 0 <= rec.group_index < params.n_groups or \
                not 0 <= rec.answer_index < len(params.answers[rec.group_index]):
            raise ValueError(f"record {rec} does not fit the parameter layout")
    objective = batch_objective(params, records, config.clip_eps, config.clip_mode)
    stepped = params.theta + config.learning_rate * batch_gradient(params, records, config.clip_eps, config.clip_mode)
    old = params.snapshot
    smoothed = old + config.smoothing_coef * (stepped - old)
    new = params.with_theta(smoothed)
    new.take_snapshot()
    return new, -objective


def discounted_return(rewards: Sequence[float], discount: float) -> float:
    """sum_{t=1..T} discount**t * r_t."""
    return float(sum(discount ** t * r for t, r in enumerate(rewards, 1)))


def _records_from_group(outs: Sequence[StepOutcome], rewards: Sequence[float]) -> list[ActionRecord]:
    _, _, adv = normalize_group(rewards)
    return [ActionRecord(o.action.group_index, o.action.index, o.action.prob_old, r, float(a))
            for o, r, a in zip(outs, rewards, adv)]


def run_warmup(dataset: Dataset, space: ConfigSpace, params: PolicyParams, config: TrainConfig,
               seed: int = 0) -> TrainResult:
    """Environment-free phase: answer and format rewards only (gamma_perf forced to 0).

    Each step samples one group and scores G emissions; the policy is updated
    after every batch of ``steps_per_episode`` steps.
    """
    if config.phase != "warmup":
        raise ValueError("run_warmup needs phase='warmup'")
    if not len(dataset):
        raise ValueError("empty dataset")
    if params.n_groups != len(dataset):
        raise ValueError("params layout does not match the dataset")
    config = replace(config, weights=replace(config.weights, gamma_perf=0.0))
    alpha, beta = config.weights.alpha, config.weights.beta
    rng = np.random.default_rng(seed)
    params = params.copy()
    params.take_snapshot()
    result = TrainResult(params)
    eps = config.explore_eps0
    steps = config.steps_per_episode or len(dataset)
    for _ in range(config.episodes):
        policy = ToyPolicy(params, config.format_noise, use_tool=False)
        batch: list[ActionRecord] = []
        for _ in range(steps):
            gi = int(rng.integers(len(dataset)))
            group = dataset.groups[gi]
            rewards, answers, outs = [], [], []
            for _ in range(config.group_size):
                a = select_action(params, gi, eps, rng)
                r_format, given, _ = score_emission(policy.emit(group, a.answer, rng), group)
                r_answer = answer_reward(group, given, space)
                rewards.append(warmup_reward([(r_answer, r_format, alpha, beta)]))
                answers.append(r_answer)
                outs.append(StepOutcome(a, "", r_format, given, None))
            batch.extend(_records_from_group(outs, rewards))
            result.curve.append(float(np.mean(rewards)))
            result.answer_curve.append(float(np.mean(answers)))
        result.explore_eps.append(eps)
        params, loss = update_policy(params, batch, config)
        result.losses.append(loss)
        eps *= config.explore_decay
    result.params = params
    return result


def run_exploration(dataset: Dataset, space: ConfigSpace, params: PolicyParams, config: TrainConfig,
                    seed: int = 0, env: KernelEnv | None = None,
                    eval_dataset: Dataset | None = None) -> TrainResult:
    """Environment-coupled phase with the performance reward.

    Per episode: reset, then for each step roll out G actions on the current
    group, normalize within the group, advance the state with the
    highest-reward sample (lowest index on ties) and query the KB for its
    tool calls. The policy is updated once per episode and
    the exploration rate decays geometrically.
    """
    if config.phase != "exploration":
        raise ValueError("run_exploration needs phase='exploration'")
    if not len(dataset):
        raise ValueError("empty dataset")
    if params.n_groups != len(dataset):
        raise ValueError("params layout does not match the dataset")
    env = env or KernelEnv(space, dataset.groups, weights=config.weights,
                           complexity_lambda=config.complexity_lambda,
                           workload=config.workload, seed=seed)
    rng = np.random.default_rng(seed)
    params = params.copy()
    params.take_snapshot()
    result = TrainResult(params)
    eps = config.explore_eps0
    steps = config.steps_per_episode or len(dataset)
    for episode in range(config.episodes):
        policy = ToyPolicy(params, config.format_noise, config.use_tool)
        traj = Trajectory(config.group_size)
        state = env.reset()
        executed = []
        for t in range(steps):
            gi = t % len(dataset)
            outs = rollout_group(env, state, gi, params, config, rng, eps, policy)
            rewards = [o.transition.reward.combined for o in outs]
            traj.records.extend(_records_from_group(outs, rewards))
            best = outs[int(np.argmax(rewards))]
            traj.transitions.append(best.transition)
            result.curve.append(float(np.mean(rewards)))
            result.answer_curve.append(float(np.mean([o.transition.reward.r_answer for o in outs])))
            executed.append(best.transition.reward.combined)
            state = best.transition.next_state
        result.episode_returns.append(discounted_return(executed, config.discount))
        result.explore_eps.append(eps)
        params, loss = update_policy(params, traj, config)
        result.losses.append(loss)
        eps *= config.explore_decay
        if eval_dataset is not None and (episode + 1) % config.eval_every == 0:
            report = evaluate_greedy(params, space, eval_dataset.groups, env.benchmark,
                                     layout_groups=dataset.groups)
            result.evaluations.append({"episode": episode + 1, **report.summary()})
    result.params = params
    return result


@dataclass
class EvalReport:
    answers: list[Any]
    valid: list[bool]
    assignment: dict[str, Any]
    baseline_score: float
    final_score: float
    r_perf: float

    @property
    def validity_rate(self) -> float:
        return sum(self.valid) / len(self.valid) if self.valid else 0.0

    @property
    def perf_gain(self) -> float:
        """Percent improvement of the final assignment over the default one."""
        return 100.0 * (self.final_score - self.baseline_score) / self.baseline_score

    def summary(self) -> dict:
        return {"validity_rate": self.validity_rate, "perf_gain": self.perf_gain, "r_perf": self.r_perf}


def _layout_index(layout_groups: Sequence[ConfigGroup], group: ConfigGroup) -> int | None:
    for i, g in enumerate(layout_groups):
        if g.group_type == group.group_type and g.candidate == group.candidate:
            return i
    return None


def evaluate_greedy(params: PolicyParams, space: ConfigSpace, groups: Sequence[ConfigGroup],
                    benchmark, layout_groups: Sequence[ConfigGroup] | None = None,
                    complexity_lambda: float = 0.0) -> EvalReport:
    """Argmax answer per group, applied in order from the default assignment.

    Groups unknown to the parameter layout (held-out tasks) fall back to the
    lowest-index canonical answer. Valid modifications contribute one
    performance term each.
    """
    layout_groups = groups if layout_groups is None else layout_groups
    env = KernelEnv(space, groups, benchmark=benchmark, complexity_lambda=complexity_lambda)
    state = env.reset()
    baseline = state.metrics[METRIC]
    answers, valid, terms = [], [], []
    for gi, group in enumerate(groups):
        li = _layout_index(layout_groups, group)
        if li is None:
            answer = canonical_answers(space, group)[0]
        else:
            answer = params.answers[li][greedy_index(params, li)]
        tr = env.step(state, Action(gi, answer))
        answers.append(answer)
        valid.append(tr.valid)
        if tr.valid:
            terms.append(PerfTerm(state.metrics[METRIC], tr.next_state.metrics[METRIC], complexity_lambda,
                                  float(sum(tr.next_state.assignment[c] != state.assignment[c]
                                            for c in group.candidate)),
                                  float(len(group.candidate))))
        state = tr.next_state
    return EvalReport(answers, valid, dict(state.assignment), baseline, state.metrics[METRIC], perf_reward(terms))


def evaluate_sampled(params: PolicyParams, env: KernelEnv, rng: np.random.Generator, episodes: int,
                     format_noise: float = 0.0) -> dict:
    """Stochastic evaluation: sampled answers emitted with format noise.

    Validity counts steps whose emission parsed and whose modification was
    accepted; perf gain is the mean final-vs-default percent change.
    """
    policy = ToyPolicy(params, format_noise, use_tool=False)
    n_valid = n_total = 0
    gains = []
    for _ in range(episodes):
        state = env.reset()
        base = state.metrics[METRIC]
        for gi, group in enumerate(env.groups):
            a = sample_action(params, gi, rng, with_old=False)
            r_format, given, _ = score_emission(policy.emit(group, a.answer, rng), group)
            tr = env.step(state, Action(gi, given), r_format)
            n_valid += tr.valid
            n_total += 1
            state = tr.next_state
        gains.append(100.0 * (state.metrics[METRIC] - base) / base)
    return {"validity_rate": n_valid / n_total, "perf_gain": float(np.mean(gains))}


ABLATION_SCHEMES = {
    "format": RewardWeights(0.0, 1.0, 0.0),
    "format+answer": RewardWeights(1.0, 1.0, 0.0),
    "full": RewardWeights(1.0, 1.0, 1.0),
}


def ablation_trial(seed: int, episodes: int = 63, learning_rate: float = 1.0, format_noise: float = 0.3,
                   eval_episodes: int = 20, schemes: dict[str, RewardWeights] = ABLATION_SCHEMES) -> dict:
    """Train each reward scheme on the toy problem for ``seed`` and score it.

    Validity is measured on sampled emissions with the same format noise (a
    greedy decode never shows the noise); perf gain comes from the greedy
    assignment. Returns ``{scheme: {"validity_rate", "perf_gain"}}``.
    """
    from .kernel_env import make_toy_problem

    space, ds, bench = make_toy_problem(seed)
    out = {}
    for name, weights in schemes.items():
        cfg = TrainConfig(episodes=episodes, weights=weights, format_noise=format_noise,
                          learning_rate=learning_rate)
        env = KernelEnv(space, ds.groups, benchmark=bench, weights=weights)
        res = run_exploration(ds, space, init_params(space, ds.groups, seed), cfg, seed=seed, env=env)
        sampled = evaluate_sampled(res.params, env, np.random.default_rng(seed), eval_episodes, format_noise)
        greedy = evaluate_greedy(res.params, space, ds.groups, bench)
        out[name] = {"validity_rate": sampled["validity_rate"], "perf_gain": greedy.perf_gain}
    return out
