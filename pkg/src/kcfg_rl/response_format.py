"""Parsing of tagged policy emissions and the binary format reward.

A well-formed emission is::

    <think>...</think> [<tool_call>...</tool_call> ...] <answer>...</answer>

Tags are literal, case-sensitive and never nest. Only whitespace may appear
outside the blocks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .config_space import BOOL_VALUES, KINDS

TAG_RE = re.compile(r"<(/?)(think|tool_call|answer)>")

RESPONSE_TEMPLATE = (
    "You are a kernel tuning assistant. Analyze the tuning target, then explore the "
    "kernel space and give your tuning decision. Put your reasoning inside "
    "<think> </think> and the final decision inside <answer> </answer>. If you need "
    "more knowledge, query it with <tool_call>...</tool_call> before answering."
)


@dataclass(frozen=True)
class ParseFailure:
    """In-band parse failure. ``reason`` is a short machine-readable tag."""

    reason: str
    detail: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class AgentResponse:
    think: str
    tool_calls: tuple[str, ...] = ()
    answer: str = ""
    raw: str = field(default="", compare=False)

    def reconstruct(self) -> str:
        calls = "".join(f"<tool_call>{q}</tool_call>" for q in self.tool_calls)
        return f"<think>{self.think}</think>{calls}<answer>{self.answer}</answer>"


def parse_response(raw: str) -> AgentResponse | ParseFailure:
    tokens = [(m.start(), m.end(), m.group(1) == "/", m.group(2)) for m in TAG_RE.finditer(raw)]
    opens = {t: 0 for t in ("think", "tool_call", "answer")}
    closes = dict(opens)
    for _, _, closing, tag in tokens:
        (closes if closing else opens)[tag] += 1

    for tag in ("think", "answer"):
        if opens[tag] == 0 and closes[tag] == 0:
            return ParseFailure("missing", f"no <{tag}> block")
    for tag in opens:
        if opens[tag] != closes[tag]:
            return ParseFailure("unbalanced", f"{opens[tag]} <{tag}> vs {closes[tag]} </{tag}>")
    for tag in ("think", "answer"):
        if opens[tag] > 1:
            return ParseFailure("duplicate", f"{opens[tag]} <{tag}> blocks")

    blocks: list[tuple[str, str]] = []
    cursor = 0
    for i in range(0, len(tokens), 2):
        (s0, e0, c0, t0), (s1, e1, c1, t1) = tokens[i], tokens[i + 1]
        if c0 or not c1 or t0 != t1:
            return ParseFailure("unbalanced", f"<{'/' if c0 else ''}{t0}> is not closed before the next tag")
        if raw[cursor:s0].strip():
            return ParseFailure("stray_text", f"text outside tags before <{t0}>")
        blocks.append((t0, raw[e0:s1]))
        cursor = e1
    if raw[cursor:].strip():
        return ParseFailure("stray_text", "text after the last tag")

    order = [t for t, _ in blocks]
    if order[0] != "think" or order[-1] != "answer":
        return ParseFailure("out_of_order", " -> ".join(order))
    return AgentResponse(
        think=blocks[0][1],
        tool_calls=tuple(body for _, body in blocks[1:-1]),
        answer=blocks[-1][1],
        raw=raw,
    )


def format_reward(parse_result: AgentResponse | ParseFailure | str) -> float:
    if isinstance(parse_result, str):
        parse_result = parse_response(parse_result)
    return 1.0 if isinstance(parse_result, AgentResponse) else 0.0


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _is_literal(x: Any) -> bool:
    return isinstance(x, str) or (isinstance(x, int) and not isinstance(x, bool))


def render_answer(group_type: str, answer: Any) -> str:
    """Canonical text for a typed answer (what goes between the answer tags)."""
    if group_type in ("Bool", "Value"):
        if not isinstance(answer, dict) or not all(isinstance(k, str) for k in answer):
            raise ValueError(f"{group_type} answer must map symbol -> value")
        ok = (lambda v: v in BOOL_VALUES) if group_type == "Bool" else _is_literal
        bad = [k for k, v in answer.items() if not ok(v)]
        if bad:
            raise ValueError(f"invalid {group_type} values for {sorted(bad)}")
        return _dump(answer)
    if group_type == "Menu":
        if isinstance(answer, str) or not all(isinstance(a, str) for a in answer):
            raise ValueError("Menu answer must be a collection of symbol names")
        return _dump(sorted(set(answer)))
    if group_type == "Choice":
        if not isinstance(answer, str):
            raise ValueError("Choice answer must be a single symbol name")
        return _dump(answer)
    raise ValueError(f"unknown group type {group_type!r}")


def parse_answer(text: str, expected_type: str) -> Any:
    """Inverse of :func:`render_answer` on canonical text, else a ParseFailure.

    Returns a dict (Bool, Value), a sorted tuple (Menu) or a str (Choice).
    """
    if expected_type not in KINDS:
        return ParseFailure("unknown_type", expected_type)
    body = text.strip()
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as exc:
        return ParseFailure("not_json", exc.msg)
    if expected_type == "Bool" and isinstance(obj, dict):
        bad = sorted(k for k, v in obj.items() if v not in BOOL_VALUES)
        if bad:
            return ParseFailure("domain", f"not Yes/No: {bad}")
    if expected_type == "Menu" and isinstance(obj, list):
        obj = tuple(obj)
    try:
        canonical = render_answer(expected_type, obj)
    except (ValueError, TypeError) as exc:
        return ParseFailure("shape", str(exc))
    if canonical != body:
        return ParseFailure("non_canonical", f"expected {canonical}")
    return obj
