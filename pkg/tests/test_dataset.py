import json
from decimal import ROUND_HALF_UP, Decimal
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kcfg_rl.dataset import Dataset, DatasetError, check_dataset, read_dataset, split_dataset, write_dataset
from helpers import fixture_dataset, fixture_space, fixture_text, random_dataset


def test_reads_fixture():
    ds = fixture_dataset()
    assert len(ds) == 6
    assert ds.stats() == {"count": 6, "by_type": {"Bool": 2, "Choice": 1, "Menu": 1, "Value": 2}}
    assert ds.provenance[:3] == ("official", "expert", "historical")


def test_three_valid_groups():
    lines = fixture_text("dataset.jsonl").splitlines()[:3]
    assert len(read_dataset("\n".join(lines), fixture_space())) == 3


def test_bad_choice_record_names_line_two():
    with pytest.raises(DatasetError) as err:
        read_dataset(fixture_text("bad_dataset.jsonl"), fixture_space())
    assert [n for n, _ in err.value.problems] == [2]
    assert "line 2" in str(err.value)


def test_empty_document_is_empty_dataset():
    assert len(read_dataset("", fixture_space())) == 0
    assert write_dataset(Dataset()) == ""


def test_unknown_provenance_warns_and_maps_to_other():
    rec = json.loads(fixture_text("dataset.jsonl").splitlines()[0])
    rec["provenance"] = "mailing-list"
    with pytest.warns(UserWarning, match="provenance"):
        ds = read_dataset(json.dumps(rec), fixture_space())
    assert ds.provenance == ("other",)


def test_check_dataset_collects_every_problem():
    doc = "\n".join(["{oops", "[1, 2]", '{"type": "Bool"}', fixture_text("dataset.jsonl").splitlines()[0]])
    ds, problems = check_dataset(doc, fixture_space())
    assert len(ds) == 1
    assert [n for n, _ in problems] == [1, 2, 3]


def test_non_canonical_input_parses_equal_but_rewrites_differently():
    space = fixture_space()
    raw = fixture_text("dataset.jsonl")
    ds = read_dataset(raw, space)
    canonical = write_dataset(ds)
    assert canonical != raw
    assert read_dataset(canonical, space) == ds
    # Menu answers come back sorted whatever order they were written in
    assert ds.groups[3].answer == ("CONFIG_TCP_CONG_BBR", "CONFIG_TCP_CONG_CUBIC")


@given(st.integers(0, 2**32 - 1))
def test_round_trip_property(seed):
    space = fixture_space()
    ds = random_dataset(space, np.random.default_rng(seed))
    text = write_dataset(ds)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = read_dataset(text, space)
    assert back == ds
    assert write_dataset(back) == text


def test_split_examples():
    space = fixture_space()
    ds = random_dataset(space, np.random.default_rng(0), max_groups=0)
    ten = Dataset(tuple(fixture_dataset().groups[i % 6] for i in range(10)))
    a, b = split_dataset(ten, 0.5, 7)
    assert (len(a), len(b)) == (5, 5)
    assert split_dataset(ten, 0.5, 7) == (a, b)
    three = ten.subset([0, 1, 2])
    assert tuple(map(len, split_dataset(three, 0.5, 7))) == (2, 1)
    with pytest.raises(ValueError):
        split_dataset(ten, 1.0, 7)
    with pytest.raises(ValueError):
        split_dataset(ds, 0.5, 7)


@given(st.integers(1, 40), st.floats(0.01, 0.99), st.integers(0, 2**16))
def test_split_is_seeded_partition(n, frac, seed):
    ds = Dataset(tuple(fixture_dataset().groups[i % 6] for i in range(n)),
                 ("other",) * n)
    tagged = Dataset(tuple(g.__class__(g.group_type, g.candidate, f"q{i}", g.answer)
                           for i, g in enumerate(ds.groups)))
    warm, rest = split_dataset(tagged, frac, seed)
    qs = sorted([g.question for g in warm.groups] + [g.question for g in rest.groups], key=lambda q: int(q[1:]))
    assert qs == [f"q{i}" for i in range(n)]
    expected = Decimal(repr(frac * n)).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    assert len(warm) == int(expected)
    assert split_dataset(tagged, frac, seed) == (warm, rest)
