import json
import math

import numpy as np
import pytest

from kcfg_rl.cli import CHECKPOINT_HEADER, main, read_checkpoint, write_checkpoint
from kcfg_rl.config_space import load_config_space
from kcfg_rl.dataset import read_dataset
from kcfg_rl.policy import init_params
from helpers import FIXTURES

SPACE = str(FIXTURES / "space.jsonl")
DATASET = str(FIXTURES / "dataset.jsonl")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_exit_codes(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", "--space", SPACE, "--dataset", DATASET)
    assert code == 0 and "6 valid group(s)" in out
    bad = str(FIXTURES / "bad_dataset.jsonl")
    code, out, _ = run(capsys, "validate", "--space", SPACE, "--dataset", bad)
    assert code == 1 and f"{bad}:2:" in out
    code, _, err = run(capsys, "validate", "--space", SPACE, "--dataset", str(tmp_path / "missing.jsonl"))
    assert code == 2 and "error" in err


def test_explore_requires_checkpoint_or_from_scratch(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--phase", "explore", "--space", SPACE, "--dataset", DATASET, "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "--from-scratch" in capsys.readouterr().err


def _train(capsys, out, *extra):
    code, _, err = run(capsys, "train", "--space", SPACE, "--dataset", DATASET, "--out", str(out), *extra)
    assert code == 0, err


def test_train_rerun_and_replay_are_byte_identical(capsys, tmp_path):
    args = ("--phase", "explore", "--from-scratch", "--seed", "3", "--episodes", "4", "--format-noise", "0.2")
    _train(capsys, tmp_path / "a", *args)
    _train(capsys, tmp_path / "b", *args)
    assert run(capsys, "replay", "--manifest", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "c"))[0] == 0
    for name in ("checkpoint.txt", "reward_curve.csv", "benchmark.json"):
        ref = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == ref
        assert (tmp_path / "c" / name).read_bytes() == ref
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["config"]["episodes"] == 4
    assert set(manifest["input_sha256"]) == {"space", "dataset"}


def test_seed_falls_back_to_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("KCFG_RL_SEED", "9")
    _train(capsys, tmp_path / "env", "--phase", "warmup", "--episodes", "2")
    _train(capsys, tmp_path / "flag", "--phase", "warmup", "--episodes", "2", "--seed", "9")
    assert json.loads((tmp_path / "env" / "manifest.json").read_text())["seed"] == 9
    assert (tmp_path / "env" / "checkpoint.txt").read_bytes() == (tmp_path / "flag" / "checkpoint.txt").read_bytes()


def test_warmup_then_explore_from_checkpoint(capsys, tmp_path):
    _train(capsys, tmp_path / "w", "--phase", "warmup", "--episodes", "3", "--seed", "1")
    ckpt = str(tmp_path / "w" / "checkpoint.txt")
    _train(capsys, tmp_path / "e", "--phase", "explore", "--checkpoint", ckpt, "--episodes", "2")
    theta = read_checkpoint(tmp_path / "e" / "checkpoint.txt")
    assert theta.shape == read_checkpoint(tmp_path / "w" / "checkpoint.txt").shape


def test_checkpoint_round_trip_and_corruption(tmp_path):
    space = load_config_space((FIXTURES / "space.jsonl").read_text())
    params = init_params(space, read_dataset((FIXTURES / "dataset.jsonl").read_text(), space).groups, 0)
    path = tmp_path / "ck.txt"
    write_checkpoint(path, params)
    assert np.array_equal(read_checkpoint(path), params.theta)
    path.write_text(path.read_text().replace(CHECKPOINT_HEADER, "# other"))
    with pytest.raises(ValueError):
        read_checkpoint(path)


def _choice4(tmp_path):
    space = tmp_path / "space.jsonl"
    space.write_text("".join(
        json.dumps({"name": f"C{i}", "kind": "Choice", "domain": ["n", "y"]}) + "\n" for i in range(4)))
    ds = tmp_path / "ds.jsonl"
    ds.write_text("".join(
        json.dumps({"type": "Choice", "candidate": ["C0", "C1", "C2", "C3"], "question": q, "answer": "C2"}) + "\n"
        for q in ("a", "b")))
    ck = tmp_path / "ck.txt"
    ck.write_text(CHECKPOINT_HEADER + "\ndimension 8\n" + "0.0\n" * 8)
    return str(space), str(ds), str(ck)


def test_evaluate_uniform_policy_is_valid_and_ties_pick_lowest_index(capsys, tmp_path):
    space, ds, ck = _choice4(tmp_path)
    out = tmp_path / "assign.jsonl"
    code, text, _ = run(capsys, "evaluate", "--space", space, "--dataset", ds, "--checkpoint", ck, "--out", str(out))
    body = json.loads(text)
    assert code == 0 and body["validity_rate"] == 1.0
    assert [a["answer"] for a in body["answers"]] == ['"C0"', '"C0"']
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["symbol"] for r in rows] == ["C0", "C1", "C2", "C3"]
    assert {r["symbol"]: r["value"] for r in rows}["C0"] in ("n", "y")


def test_evaluate_dimension_mismatch(capsys, tmp_path):
    space, ds, _ = _choice4(tmp_path)
    bad = tmp_path / "bad.txt"
    bad.write_text(CHECKPOINT_HEADER + "\ndimension 3\n" + "0.0\n" * 3)
    code, _, err = run(capsys, "evaluate", "--space", space, "--dataset", ds, "--checkpoint", str(bad))
    assert code == 1 and "dimension" in err


def test_evaluate_trained_toy_fixture(capsys, tmp_path):
    assert run(capsys, "toy", "--out", str(tmp_path / "toy"), "--seed", "0")[0] == 0
    toy = tmp_path / "toy"
    common = ("--space", str(toy / "space.jsonl"), "--dataset", str(toy / "dataset.jsonl"))
    code, _, _ = run(capsys, "train", *common, "--phase", "explore", "--from-scratch", "--seed", "0",
                     "--episodes", "63", "--out", str(tmp_path / "run"))
    assert code == 0
    code, text, _ = run(capsys, "evaluate", *common, "--checkpoint", str(tmp_path / "run" / "checkpoint.txt"),
                        "--benchmark", str(toy / "benchmark.json"))
    body = json.loads(text)
    assert code == 0 and body["validity_rate"] == 1.0 and body["perf_gain"] > 0


def test_score_command(capsys, tmp_path):
    code, text, _ = run(capsys, "score", "--metrics", str(FIXTURES / "metrics.csv"))
    assert code == 0 and abs(json.loads(text)["aggregate"] - 200 * math.sqrt(2)) <= 1e-9
    one = tmp_path / "one.csv"
    one.write_text("test,measured,reference\nx,42.5,42.5\n")
    assert json.loads(run(capsys, "score", "--metrics", str(one))[1])["aggregate"] == 100.0
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, err = run(capsys, "score", "--metrics", str(empty))
    assert code == 1 and "header" in err
