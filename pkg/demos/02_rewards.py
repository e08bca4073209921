"""Score a few agent emissions with the format, answer and performance rewards.

Run: python3 demos/02_rewards.py
"""

from pathlib import Path

from kcfg_rl import (
    RewardWeights, answer_reward, combined_reward, format_reward, load_config_space, normalize_group,
    parse_answer, parse_response,
)
from kcfg_rl.config_space import ConfigGroup
from kcfg_rl.rewards import PerfTerm, perf_reward

space = load_config_space((Path(__file__).parents[1] / "tests/fixtures/space.jsonl").read_text())
hz = ConfigGroup("Choice", ("CONFIG_HZ_100", "CONFIG_HZ_250", "CONFIG_HZ_1000"), "lower latency")

emissions = {
    "well formed": '<think>interactive load</think><tool_call>CONFIG_HZ_1000</tool_call>'
                   '<answer>"CONFIG_HZ_1000"</answer>',
    "answer first": '<answer>"CONFIG_HZ_1000"</answer><think>oops</think>',
    "wrong option": '<think>guess</think><answer>"CONFIG_HZ_300"</answer>',
}
for label, text in emissions.items():
    parsed = parse_response(text)
    r_format = format_reward(parsed)
    given = parse_answer(parsed.answer, "Choice") if r_format else parsed
    print(f"{label:13s} format={r_format:.0f} answer={answer_reward(hz, given, space):.0f}")

# A 100 -> 110 benchmark move is worth 0.1; a 5% regression cancels half of it.
r_perf = perf_reward([PerfTerm(100, 110), PerfTerm(100, 95)])
print(f"\nperformance reward for +10% and -5%: {r_perf:.3f}")
print("combined with unit weights:", combined_reward(1.0, 1.0, r_perf, RewardWeights()))

# Advantages are the group rewards standardized within the group.
mu, sigma, adv = normalize_group([2.1, 2.0, 1.0, 0.0])
print(f"\ngroup mean {mu:.3f}, spread {sigma:.3f}, advantages {adv.round(3)}")
