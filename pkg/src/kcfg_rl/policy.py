"""Policies over canonical group answers.

The toy policy keeps one logit per (group, canonical answer) and is trained by
the GRPO loop. :class:`CompletionAdapter` forwards a rendered prompt to any
text-completion endpoint; its output is scored but never differentiated.
"""

from __future__ import annotations

import itertools
import json
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .config_space import BOOL_VALUES, ConfigGroup, ConfigSpace, ValueDomain
from .kb import KnowledgeBase, kb_query
from .response_format import RESPONSE_TEMPLATE, TAG_RE, render_answer

MAX_ANSWERS = 256
MENU_FULL_ENUM = 4


def _value_points(domain: ValueDomain) -> list[Any]:
    if domain.is_range:
        return list(dict.fromkeys([domain.lo, (domain.lo + domain.hi) // 2, domain.hi]))
    return list(domain.literals)


def canonical_answers(space: ConfigSpace, group: ConfigGroup) -> tuple[Any, ...]:
    """Finite answer set the toy policy chooses from.

    Bool: Yes/No per candidate (product over candidates). Choice: each
    candidate. Value: range endpoints and midpoint, or every literal (product
    over candidates). Menu: all non-empty subsets up to four candidates,
    otherwise singletons plus the full set.
    """
    cands = group.candidate
    gtype = group.group_type
    if gtype == "Bool":
        out = [dict(zip(cands, combo)) for combo in itertools.product(BOOL_VALUES, repeat=len(cands))]
    elif gtype == "Value":
        pts = [_value_points(space[c].domain) for c in cands]
        out = [dict(zip(cands, combo)) for combo in itertools.product(*pts)]
    elif gtype == "Choice":
        out = list(cands)
    elif gtype == "Menu":
        ordered = sorted(cands)
        if len(ordered) <= MENU_FULL_ENUM:
            out = [c for k in range(1, len(ordered) + 1) for c in itertools.combinations(ordered, k)]
        else:
            out = [(c,) for c in ordered] + [tuple(ordered)]
    else:
        raise ValueError(f"unknown group type {gtype!r}")
    if len(out) > MAX_ANSWERS:
        raise ValueError(f"group {cands} has {len(out)} canonical answers (max {MAX_ANSWERS})")
    return tuple(out)


@dataclass
class PolicyParams:
    """Flat logit vector plus the layout that maps it onto groups."""

    theta: np.ndarray
    answers: tuple[tuple[Any, ...], ...]
    group_types: tuple[str, ...]
    snapshot: np.ndarray | None = None
    offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        sizes = [len(a) for a in self.answers]
        self.offsets = tuple(np.concatenate([[0], np.cumsum(sizes)]).astype(int).tolist())
        if self.theta.shape != (self.offsets[-1],):
            raise ValueError(f"theta has shape {self.theta.shape}, layout needs ({self.offsets[-1]},)")
        if self.snapshot is not None and np.shape(self.snapshot) != self.theta.shape:
            raise ValueError("snapshot dimension differs from theta")

    @property
    def dimension(self) -> int:
        return self.offsets[-1]

    @property
    def n_groups(self) -> int:
        return len(self.answers)

    def span(self, group_index: int) -> slice:
        return slice(self.offsets[group_index], self.offsets[group_index + 1])

    def logits(self, group_index: int, old: bool = False) -> np.ndarray:
        src = self.theta if not old else self.snapshot
        if src is None:
            raise ValueError("no snapshot (theta_old) has been taken")
        return src[self.span(group_index)]

    def take_snapshot(self) -> None:
        self.snapshot = self.theta.copy()

    def copy(self) -> "PolicyParams":
        snap = None if self.snapshot is None else self.snapshot.copy()
        return PolicyParams(self.theta.copy(), self.answers, self.group_types, snap)

    def with_theta(self, theta: np.ndarray) -> "PolicyParams":
        snap = None if self.snapshot is None else self.snapshot.copy()
        return PolicyParams(np.array(theta, dtype=float), self.answers, self.group_types, snap)

    def answer_index(self, group_index: int, answer: Any) -> int:
        for i, a in enumerate(self.answers[group_index]):
            if a == answer:
                return i
        raise ValueError(f"{answer!r} is not a canonical answer of group {group_index}")


def build_layout(space: ConfigSpace, groups: Sequence[ConfigGroup]) -> tuple[tuple[tuple[Any, ...], ...], tuple[str, ...]]:
    return (tuple(canonical_answers(space, g) for g in groups), tuple(g.group_type for g in groups))


def init_params(space: ConfigSpace, groups: Sequence[ConfigGroup], seed: int) -> PolicyParams:
    answers, types = build_layout(space, groups)
    dim = sum(len(a) for a in answers)
    theta = np.random.default_rng(seed).uniform(-0.01, 0.01, size=dim)
    return PolicyParams(theta, answers, types, snapshot=theta.copy())


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def action_probs(params: PolicyParams, group_index: int, old: bool = False) -> np.ndarray:
    return softmax(params.logits(group_index, old=old))


@dataclass(frozen=True)
class SampledAction:
    group_index: int
    index: int
    answer: Any
    prob: float
    prob_old: float | None
    explored: bool = False


def sample_action(params: PolicyParams, group_index: int, rng: np.random.Generator,
                  with_old: bool = True) -> SampledAction:
    """Inverse-CDF draw from pi_theta; records pi_theta and pi_theta_old of the pick."""
    probs = action_probs(params, group_index)
    old = action_probs(params, group_index, old=True) if with_old else None
    u = rng.random()
    idx = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), len(probs) - 1)
    return SampledAction(
        group_index, idx, params.answers[group_index][idx], float(probs[idx]),
        None if old is None else float(old[idx]),
    )


def greedy_index(params: PolicyParams, group_index: int) -> int:
    # np.argmax returns the first maximum, i.e. the lowest canonical index on ties
    return int(np.argmax(params.logits(group_index)))


def log_prob_grad(params: PolicyParams, group_index: int, answer: Any) -> np.ndarray:
    """d log pi(answer) / d logits of that group: one_hot(answer) - probs."""
    idx = answer if isinstance(answer, (int, np.integer)) and not isinstance(answer, bool) \
        else params.answer_index(group_index, answer)
    probs = action_probs(params, group_index)
    if not 0 <= idx < len(probs):
        raise ValueError(f"answer index {idx} out of range")
    grad = -probs
    grad[idx] += 1.0
    return grad


def render_prompt(group: ConfigGroup, kb: KnowledgeBase | None = None) -> str:
    lines = [
        RESPONSE_TEMPLATE,
        f"Tuning target: {group.question or 'general performance'}",
        f"Configuration type: {group.group_type}",
        f"Candidates: {', '.join(group.candidate)}",
    ]
    if kb is not None:
        for c in group.candidate:
            hit = kb_query(kb, c)
            if hit:
                lines.append(f"Knowledge: {hit}")
    return "\n".join(lines) + "\n"


def _clean(text: str) -> str:
    return TAG_RE.sub("", text)


def _corruptions(think: str, calls: str, answer: str) -> list[str]:
    t = f"<think>{think}</think>"
    a = f"<answer>{answer}</answer>"
    return [
        f"{t}{calls}<answer>{answer}",                 # unclosed answer
        f"{a}{calls}{t}",                              # answer first
        f"{t}{t}{calls}{a}",                           # duplicate think
        f"{think}{calls}{a}",                          # think tags missing
        f"{t}{calls}{a} done.",                        # stray text
        f"{t}{a}<tool_call>{answer}</tool_call>",      # tool call after answer
    ]


class ToyPolicy:
    """Softmax policy that emits template-shaped text around a sampled answer.

    With probability ``format_noise`` the emission is deliberately malformed.
    """

    def __init__(self, params: PolicyParams, format_noise: float = 0.0, use_tool: bool = True):
        if not 0.0 <= format_noise <= 1.0:
            raise ValueError("format_noise must lie in [0, 1]")
        self.params = params
        self.format_noise = format_noise
        self.use_tool = use_tool

    def emit(self, group: ConfigGroup, answer: Any, rng: np.random.Generator,
             kb: KnowledgeBase | None = None) -> str:
        rendered = render_answer(group.group_type, answer)
        think = _clean(f"Tuning target: {group.question}. Candidates: {', '.join(group.candidate)}. "
                       f"Decision: {rendered}.")
        calls = ""
        if self.use_tool and kb is not None:
            calls = f"<tool_call>{_clean(group.candidate[0])}</tool_call>"
        noisy = rng.random() < self.format_noise
        if noisy:
            variants = _corruptions(think, calls, rendered)
            return variants[int(rng.integers(len(variants)))]
        return f"<think>{think}</think>{calls}<answer>{rendered}</answer>"


class TransportError(RuntimeError):
    """Raised by an endpoint when the completion request could not be delivered."""


@dataclass(frozen=True)
class CompletionFailure:
    reason: str
    retryable: bool = True

    def __bool__(self) -> bool:
        return False


Endpoint = Callable[[dict], dict]


class CompletionAdapter:
    """Prompt in, text out. ``endpoint`` takes ``{"prompt", "max_tokens"}`` and returns ``{"text"}``."""

    def __init__(self, endpoint: Endpoint, max_tokens: int = 512, retries: int = 2):
        self.endpoint = endpoint
        self.max_tokens = max_tokens
        self.retries = retries

    def emit(self, group: ConfigGroup, kb: KnowledgeBase | None = None) -> str | CompletionFailure:
        request = {"prompt": render_prompt(group, kb), "max_tokens": self.max_tokens}
        last = ""
        for _ in range(self.retries + 1):
            try:
                response = self.endpoint(request)
            except (TransportError, OSError) as exc:
                last = str(exc) or type(exc).__name__
                continue
            if not isinstance(response, dict) or not isinstance(response.get("text"), str):
                return CompletionFailure("malformed endpoint response", retryable=False)
            return response["text"]
        return CompletionFailure(f"transport failure: {last}")


class HttpEndpoint:
    """POSTs the request as JSON to ``url`` and decodes a JSON ``{"text": ...}`` reply."""

    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, request: dict) -> dict:
        data = json.dumps(request).encode()
        req = urllib.request.Request(self.url, data=data, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode())
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransportError(str(exc)) from exc


def emit_response(policy: ToyPolicy | CompletionAdapter, group: ConfigGroup,
                  kb: KnowledgeBase | None = None, *, group_index: int = 0,
                  rng: np.random.Generator | None = None, answer: Any = None) -> str | CompletionFailure:
    """Raw emission from either policy kind. The toy policy samples ``answer`` if not given."""
    if isinstance(policy, CompletionAdapter):
        return policy.emit(group, kb)
    if rng is None:
        raise ValueError("the toy policy needs an rng")
    if answer is None:
        answer = sample_action(policy.params, group_index, rng, with_old=False).answer
    return policy.emit(group, answer, rng, kb)
