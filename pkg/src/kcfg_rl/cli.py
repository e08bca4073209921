"""Command line entry points: validate, train, replay, evaluate, score, toy.

Exit codes: 0 success, 1 invalid data, 2 I/O or usage failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench_score import MetricsFormatError, read_metrics_csv, score_report
from .config_space import ConfigSpaceError, load_config_space
from .dataset import DatasetError, check_dataset, read_dataset, write_dataset
from .grpo import TrainConfig, evaluate_greedy, run_exploration, run_warmup
from .kb import build_knowledge_base
from .kernel_env import KernelEnv, SyntheticBenchmark, make_toy_problem
from .policy import PolicyParams, build_layout, init_params
from .response_format import render_answer
from .rewards import RewardWeights

EXIT_OK, EXIT_DATA, EXIT_IO = 0, 1, 2
CHECKPOINT_HEADER = "# kcfg-rl checkpoint"


class CheckpointError(ValueError):
    pass


def write_checkpoint(path: Path, params: PolicyParams) -> None:
    lines = [CHECKPOINT_HEADER, f"dimension {params.dimension}"]
    lines += [repr(float(x)) for x in params.theta]
    path.write_text("\n".join(lines) + "\n")


def read_checkpoint(path: Path) -> np.ndarray:
    lines = path.read_text().splitlines()
    if len(lines) < 2 or lines[0] != CHECKPOINT_HEADER or not lines[1].startswith("dimension "):
        raise CheckpointError(f"{path}: not a kcfg-rl checkpoint")
    dim = int(lines[1].split()[1])
    theta = np.array([float(x) for x in lines[2:]], dtype=float)
    if theta.shape != (dim,):
        raise CheckpointError(f"{path}: header says {dim} values, found {theta.size}")
    return theta


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("KCFG_RL_SEED", "0"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_inputs(args):
    space = load_config_space(Path(args.space).read_text(encoding="utf-8"))
    dataset = read_dataset(Path(args.dataset).read_text(encoding="utf-8"), space)
    return space, dataset


def _params_from_checkpoint(path: Path, space, groups) -> PolicyParams:
    answers, types = build_layout(space, groups)
    theta = read_checkpoint(path)
    dim = sum(len(a) for a in answers)
    if theta.size != dim:
        raise CheckpointError(f"checkpoint dimension {theta.size} does not match dataset layout {dim}")
    return PolicyParams(theta, answers, types, snapshot=theta.copy())


def cmd_validate(args) -> int:
    space = load_config_space(Path(args.space).read_text(encoding="utf-8"))
    ds, problems = check_dataset(Path(args.dataset).read_text(encoding="utf-8"), space)
    for lineno, msg in problems:
        print(f"{args.dataset}:{lineno}: {msg}")
    print(f"{len(ds)} valid group(s), {len(problems)} invalid record(s)")
    return EXIT_OK if not problems else EXIT_DATA


def _config_from_args(args, phase: str) -> TrainConfig:
    return TrainConfig(
        group_size=args.group_size, clip_eps=args.clip_eps, discount=args.discount,
        explore_eps0=args.explore_eps, explore_decay=args.explore_decay, learning_rate=args.lr,
        smoothing_coef=args.smoothing, steps_per_episode=args.steps_per_episode,
        episodes=args.episodes, weights=RewardWeights.parse(args.weights), phase=phase,
        format_noise=args.format_noise, clip_mode=args.clip_mode, eval_every=args.eval_every,
        complexity_lambda=args.complexity_lambda, workload=args.workload,
    )


def cmd_train(args) -> int:
    started = time.time()
    seed = _seed(args)
    phase = "warmup" if args.phase == "warmup" else "exploration"
    space, dataset = _load_inputs(args)
    config = _config_from_args(args, phase)
    if args.checkpoint:
        params = _params_from_checkpoint(Path(args.checkpoint), space, dataset.groups)
    else:
        params = init_params(space, dataset.groups, seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = {"checkpoint": str(out / "checkpoint.txt"), "curve": str(out / "reward_curve.csv")}
    if phase == "warmup":
        result = run_warmup(dataset, space, params, config, seed=seed)
    else:
        bench = SyntheticBenchmark.generate(space, config.workload, seed, dataset.groups)
        env = KernelEnv(space, dataset.groups, benchmark=bench, weights=config.weights,
                        complexity_lambda=config.complexity_lambda)
        result = run_exploration(dataset, space, params, config, seed=seed, env=env)
        (out / "benchmark.json").write_text(json.dumps(bench.to_dict(), indent=2, sort_keys=True) + "\n")
        outputs["benchmark"] = str(out / "benchmark.json")

    write_checkpoint(out / "checkpoint.txt", result.params)
    rows = ["step,mean_reward,mean_r_answer"]
    rows += [f"{i},{r!r},{a!r}" for i, (r, a) in enumerate(zip(result.curve, result.answer_curve))]
    (out / "reward_curve.csv").write_text("\n".join(rows) + "\n")

    inputs = {"space": args.space, "dataset": args.dataset}
    if args.checkpoint:
        inputs["checkpoint"] = args.checkpoint
    manifest = {
        "command": "train",
        "argv": sys.argv[1:] if args.argv is None else args.argv,
        "phase": phase,
        "seed": seed,
        "config": config.to_dict(),
        "inputs": inputs,
        "input_sha256": {k: _sha256(Path(v)) for k, v in inputs.items()},
        "outputs": outputs,
        "episode_returns": result.episode_returns,
        "timing": {"started": started, "seconds": time.time() - started},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"steps": len(result.curve), "final_mean_reward": result.curve[-1], "out": str(out)}))
    return EXIT_OK


def _with_out(argv: list[str], out: str) -> list[str]:
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out" and i + 1 < len(argv):
            argv[i + 1] = out
            return argv
        if tok.startswith("--out="):
            argv[i] = f"--out={out}"
            return argv
    return argv + ["--out", out]


def cmd_replay(args) -> int:
    """Rerun a recorded training command into a new output directory."""
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest.get("argv")
    if manifest.get("command") != "train" or not isinstance(argv, list):
        raise ValueError(f"{args.manifest}: not a train manifest")
    argv = _with_out(argv, args.out)
    if not any(a == "--seed" or a.startswith("--seed=") for a in argv):
        argv += ["--seed", str(manifest["seed"])]
    return main(argv)


def cmd_evaluate(args) -> int:
    seed = _seed(args)
    space, dataset = _load_inputs(args)
    params = _params_from_checkpoint(Path(args.checkpoint), space, dataset.groups)
    if args.benchmark:
        bench = SyntheticBenchmark.from_dict(json.loads(Path(args.benchmark).read_text()))
    else:
        bench = SyntheticBenchmark.generate(space, args.workload, seed, dataset.groups)
    report = evaluate_greedy(params, space, dataset.groups, bench, complexity_lambda=args.complexity_lambda)
    body = {
        "answers": [
            {"group": i, "type": g.group_type, "answer": render_answer(g.group_type, a), "valid": v}
            for i, (g, a, v) in enumerate(zip(dataset.groups, report.answers, report.valid))
        ],
        "validity_rate": report.validity_rate,
        "perf_gain": report.perf_gain,
        "r_perf": report.r_perf,
        "baseline_score": report.baseline_score,
        "final_score": report.final_score,
    }
    if args.out:
        lines = [json.dumps({"symbol": k, "value": report.assignment[k]}, sort_keys=True)
                 for k in sorted(report.assignment)]
        Path(args.out).write_text("\n".join(lines) + "\n")
        body["assignment_file"] = args.out
    print(json.dumps(body, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_score(args) -> int:
    report = score_report(read_metrics_csv(Path(args.metrics).read_text(encoding="utf-8")))
    print(report.to_json())
    return EXIT_OK


def cmd_toy(args) -> int:
    """Write the eight-symbol toy space, its dataset, KB and benchmark fixture."""
    seed = _seed(args)
    space, dataset, bench = make_toy_problem(seed, args.workload)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "space.jsonl").write_text(space.to_jsonl())
    (out / "dataset.jsonl").write_text(write_dataset(dataset))
    (out / "kb.jsonl").write_text(build_knowledge_base(space).to_jsonl())
    (out / "benchmark.json").write_text(json.dumps(bench.to_dict(), indent=2, sort_keys=True) + "\n")
    print(json.dumps({"out": str(out), "optimum": bench.optimum}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcfg-rl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset against a configuration space")
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_validate)

    d = TrainConfig()
    p = sub.add_parser("train", help="run the warm-up or exploration phase")
    p.add_argument("--phase", choices=["warmup", "explore"], required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--checkpoint", help="start from these parameters")
    p.add_argument("--from-scratch", action="store_true", help="explore without a warm-up checkpoint")
    p.add_argument("--group-size", type=int, default=d.group_size)
    p.add_argument("--clip-eps", type=float, default=d.clip_eps)
    p.add_argument("--clip-mode", choices=["literal", "ppo"], default=d.clip_mode)
    p.add_argument("--discount", type=float, default=d.discount)
    p.add_argument("--explore-eps", type=float, default=d.explore_eps0)
    p.add_argument("--explore-decay", type=float, default=d.explore_decay)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--smoothing", type=float, default=d.smoothing_coef)
    p.add_argument("--weights", default="1,1,1", help="alpha,beta,gamma_perf")
    p.add_argument("--episodes", type=int, default=d.episodes)
    p.add_argument("--steps-per-episode", type=int, default=None)
    p.add_argument("--format-noise", type=float, default=d.format_noise)
    p.add_argument("--complexity-lambda", type=float, default=d.complexity_lambda)
    p.add_argument("--eval-every", type=int, default=d.eval_every)
    p.add_argument("--workload", default=d.workload)
    p.set_defaults(func=cmd_train, argv=None)

    p = sub.add_parser("replay", help="rerun a train command from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="new output directory")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("evaluate", help="greedy decoding, validity rate and perf gain")
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workload", default=d.workload)
    p.add_argument("--benchmark", help="benchmark fixture written by train/toy")
    p.add_argument("--complexity-lambda", type=float, default=0.0)
    p.add_argument("--out", help="write the complete assignment as JSONL")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="UnixBench-style aggregate from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("toy", help="write the eight-symbol toy problem")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workload", default=d.workload)
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train":
        if args.phase == "explore" and not (args.checkpoint or args.from_scratch):
            parser.error("--phase explore needs --checkpoint (from warm-up) or --from-scratch")
        args.argv = list(argv) if argv is not None else sys.argv[1:]
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigSpaceError, DatasetError, CheckpointError, MetricsFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
