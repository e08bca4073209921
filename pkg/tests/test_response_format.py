import pytest
from hypothesis import given, strategies as st

from kcfg_rl.response_format import (
    AgentResponse, ParseFailure, format_reward, parse_answer, parse_response, render_answer,
)
from helpers import format_corpus


def test_think_then_answer():
    r = parse_response("<think>t</think><answer>a</answer>")
    assert r == AgentResponse(think="t", tool_calls=(), answer="a")


def test_tool_call_between():
    r = parse_response("<think>t</think><tool_call>q</tool_call><answer>a</answer>")
    assert r.tool_calls == ("q",)


def test_out_of_order():
    r = parse_response("<answer>a</answer><think>t</think>")
    assert isinstance(r, ParseFailure) and r.reason == "out_of_order"
    assert not r


@pytest.mark.parametrize("raw,reason", [
    ("<think>t</think><answer>a", "unbalanced"),
    ("", "missing"),
    ("<think>t</think><think>u</think><answer>a</answer>", "duplicate"),
    ("hi <think>t</think><answer>a</answer>", "stray_text"),
    ("<think>t</think><answer>a</answer><tool_call>q</tool_call>", "out_of_order"),
])
def test_failure_reasons(raw, reason):
    r = parse_response(raw)
    assert r.reason == reason
    assert format_reward(r) == 0.0


def test_format_reward_examples():
    assert format_reward("<think>t</think><answer>a</answer>") == 1.0
    assert format_reward("<think>t</think><answer>a") == 0.0
    assert format_reward("") == 0.0


def test_corpus_matches_labels():
    cases = format_corpus()
    assert len(cases) == 200
    wrong = [c for c in cases if format_reward(c["text"]) != c["label"]]
    assert wrong == []


def test_whitespace_between_tags_is_allowed():
    r = parse_response("\n<think> t </think>\n  <tool_call>q</tool_call>\n<answer>a</answer>\n")
    assert r.think == " t " and r.answer == "a"


tag_body = st.text(alphabet=st.characters(blacklist_characters="<>"), max_size=20)


@given(tag_body, st.lists(tag_body, max_size=3), tag_body)
def test_reconstruct_reproduces_raw(think, calls, answer):
    raw = f"<think>{think}</think>" + "".join(f"<tool_call>{c}</tool_call>" for c in calls) + f"<answer>{answer}</answer>"
    r = parse_response(raw)
    assert r.reconstruct() == raw
    assert (r.think, list(r.tool_calls), r.answer) == (think, calls, answer)


def test_render_examples():
    assert render_answer("Bool", {"CFG_A": "Yes"}) == '{"CFG_A":"Yes"}'
    assert render_answer("Menu", ["B", "A"]) == '["A","B"]'
    assert render_answer("Value", {"CFG_B": 64}) == '{"CFG_B":64}'
    with pytest.raises(ValueError):
        render_answer("Choice", ["A", "B"])


def test_parse_answer_examples():
    assert parse_answer('["A"]', "Menu") == ("A",)
    bad = parse_answer('{"CFG":"Maybe"}', "Bool")
    assert isinstance(bad, ParseFailure) and bad.reason == "domain"
    assert parse_answer('"A"', "Choice") == "A"
    assert parse_answer('  "A"\n', "Choice") == "A"
    assert isinstance(parse_answer('["B","A"]', "Menu"), ParseFailure)
    assert isinstance(parse_answer('{"A": "Yes"}', "Bool"), ParseFailure)
    assert isinstance(parse_answer("A", "Choice"), ParseFailure)


names = st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789", min_size=1, max_size=12)
literals = st.one_of(st.integers(-10**6, 10**6), st.text(max_size=8))


@given(st.sampled_from(["Bool", "Choice", "Menu", "Value"]), st.data())
def test_render_parse_round_trip(kind, data):
    if kind == "Bool":
        ans = data.draw(st.dictionaries(names, st.sampled_from(["Yes", "No"]), min_size=1, max_size=5))
    elif kind == "Value":
        ans = data.draw(st.dictionaries(names, literals, min_size=1, max_size=5))
    elif kind == "Choice":
        ans = data.draw(names)
    else:
        ans = tuple(sorted(data.draw(st.sets(names, min_size=1, max_size=5))))
    assert parse_answer(render_answer(kind, ans), kind) == ans
