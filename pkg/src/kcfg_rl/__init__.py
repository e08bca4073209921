"""Rule-based GRPO harness for kernel configuration tuning."""

from .bench_score import BenchEntry, BenchReport, analysis_ratios, read_metrics_csv, unixbench_score
from .config_space import (
    ConfigGroup, ConfigSpace, ConfigSymbol, ValueDomain, check_dependencies, group_by_dependency,
    load_config_space, validate_group,
)
from .dataset import Dataset, read_dataset, split_dataset, write_dataset
from .grpo import (
    TrainConfig, ablation_trial, evaluate_greedy, evaluate_sampled, run_exploration, run_warmup,
    update_policy,
)
from .kb import KnowledgeBase, build_knowledge_base, kb_query, load_kb
from .kernel_env import KernelEnv, SyntheticBenchmark, make_toy_problem, make_toy_space
from .policy import PolicyParams, ToyPolicy, CompletionAdapter, init_params
from .response_format import format_reward, parse_answer, parse_response, render_answer
from .rewards import (
    RewardWeights, answer_reward, combined_reward, normalize_group, perf_reward, warmup_reward,
)

__version__ = "0.1.0"
