"""Configuration-group datasets: JSONL reading, canonical writing, phase split."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config_space import ConfigGroup, ConfigSpace, ConfigSpaceError, validate_group

PROVENANCE_LABELS = ("official", "historical", "expert", "benchmark")


class DatasetError(ValueError):
    """Raised when a dataset document has invalid records.

    ``problems`` holds ``(line_number, message)`` pairs for every bad record.
    """

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems[:10])
        more = f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""
        super().__init__(lines + more)


@dataclass(frozen=True)
class Dataset:
    groups: tuple[ConfigGroup, ...] = ()
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        prov = tuple(self.provenance) or ("other",) * len(self.groups)
        if len(prov) != len(self.groups):
            raise ValueError("one provenance label per group")
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return len(self.groups)

    def stats(self) -> dict:
        by_type: dict[str, int] = {}
        for g in self.groups:
            by_type[g.group_type] = by_type.get(g.group_type, 0) + 1
        return {"count": len(self.groups), "by_type": dict(sorted(by_type.items()))}

    def subset(self, indices: Iterable[int]) -> "Dataset":
        idx = list(indices)
        return Dataset(tuple(self.groups[i] for i in idx), tuple(self.provenance[i] for i in idx))


def check_dataset(source: str | Iterable[str], space: ConfigSpace) -> tuple[Dataset, list[tuple[int, str]]]:
    """Parse every record, returning the valid groups and all per-line problems."""
    lines = source.splitlines() if isinstance(source, str) else list(source)
    groups, provenance, problems = [], [], []
    for lineno, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text:
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            problems.append((lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(rec, dict):
            problems.append((lineno, "record must be a JSON object"))
            continue
        try:
            group = ConfigGroup.from_record(rec)
        except ConfigSpaceError as exc:
            problems.append((lineno, str(exc)))
            continue
        violations = validate_group(space, group)
        if violations:
            problems.append((lineno, "; ".join(violations)))
            continue
        label = rec.get("provenance", "other")
        if label not in PROVENANCE_LABELS and label != "other":
            warnings.warn(f"line {lineno}: unknown provenance {label!r}, using 'other'", stacklevel=2)
            label = "other"
        groups.append(group)
        provenance.append(label)
    return Dataset(tuple(groups), tuple(provenance)), problems


def read_dataset(source: str | Iterable[str], space: ConfigSpace) -> Dataset:
    ds, problems = check_dataset(source, space)
    if problems:
        raise DatasetError(problems)
    return ds


def group_to_json(group: ConfigGroup, provenance: str = "other") -> str:
    rec = group.to_record()
    rec["provenance"] = provenance
    return json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_dataset(ds: Dataset) -> str:
    """Canonical JSONL: sorted keys, compact separators, one record per line."""
    return "".join(group_to_json(g, p) + "\n" for g, p in zip(ds.groups, ds.provenance))


def split_dataset(ds: Dataset, warmup_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split; the warm-up share is round-half-up of fraction * n.

    Both halves keep the original record order.
    """
    if not 0.0 < warmup_fraction < 1.0:
        raise ValueError("warmup_fraction must lie in (0, 1)")
    if not len(ds):
        raise ValueError("cannot split an empty dataset")
    n_warm = int(np.floor(warmup_fraction * len(ds) + 0.5))
    perm = np.random.default_rng(seed).permutation(len(ds))
    warm = sorted(perm[:n_warm].tolist())
    rest = sorted(perm[n_warm:].tolist())
    return ds.subset(warm), ds.subset(rest)
