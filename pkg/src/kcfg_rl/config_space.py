"""Kernel configuration space: symbols, value domains, dependencies and groups.

A space is loaded from JSONL, one symbol per line::

    {"name": "CONFIG_SMP", "kind": "Bool", "domain": ["Yes", "No"], "depends_on": []}
    {"name": "CONFIG_NUMA", "kind": "Bool", "depends_on": [{"symbol": "CONFIG_SMP", "value": "Yes"}]}
    {"name": "CONFIG_NR_CPUS", "kind": "Value", "domain": {"range": [2, 512]}}

Choice and Menu symbols are members of a selection block. Their domain is an
ordered option list whose first entry is the unselected (default) state and
whose last entry is the selected state, e.g. ``["No", "Yes"]``.

Dependencies are conjunctive ``(symbol, value)`` pairs. They only bind while
the dependent symbol is *active*, i.e. holds a value other than its default,
which mirrors how Kconfig lets a disabled option ignore unmet ``depends on``.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

BOOL_VALUES = ("Yes", "No")
KINDS = ("Bool", "Choice", "Menu", "Value")

Requirement = tuple[str, Any]
Assignment = Mapping[str, Any]


class ConfigSpaceError(ValueError):
    """Base class for configuration space load and lookup failures."""

    def __init__(self, message: str, *, line: int | None = None, symbol: str | None = None):
        self.line = line
        self.symbol = symbol
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class MalformedRecordError(ConfigSpaceError):
    pass


class DomainError(ConfigSpaceError):
    pass


class DuplicateSymbolError(ConfigSpaceError):
    pass


class UnknownDependencyError(ConfigSpaceError):
    pass


class DependencyCycleError(ConfigSpaceError):
    def __init__(self, cycle: Sequence[str]):
        self.cycle = tuple(sorted(cycle))
        super().__init__(f"dependency cycle among {{{', '.join(self.cycle)}}}")


class UnknownSymbolError(ConfigSpaceError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


@dataclass(frozen=True)
class ValueDomain:
    """Domain of a Value symbol: an inclusive integer range or a literal set."""

    lo: int | None = None
    hi: int | None = None
    literals: tuple[Any, ...] | None = None

    def __post_init__(self):
        if self.literals is None:
            if not (_is_int(self.lo) and _is_int(self.hi)):
                raise DomainError("integer range needs integer bounds")
            if self.lo > self.hi:
                raise DomainError(f"empty range [{self.lo}, {self.hi}]")
        else:
            if self.lo is not None or self.hi is not None:
                raise DomainError("domain is either a range or a literal set")
            if not self.literals:
                raise DomainError("literal set must not be empty")
            if len(set(map(_literal_key, self.literals))) != len(self.literals):
                raise DomainError("literal set has duplicates")
            for lit in self.literals:
                if not (_is_int(lit) or isinstance(lit, str)):
                    raise DomainError(f"literal {lit!r} must be an integer or string")

    @property
    def is_range(self) -> bool:
        return self.literals is None

    def __contains__(self, value: Any) -> bool:
        if self.is_range:
            return _is_int(value) and self.lo <= value <= self.hi
        return any(_literal_key(value) == _literal_key(lit) for lit in self.literals)

    @property
    def minimum(self) -> Any:
        if self.is_range:
            return self.lo
        return self.literals[0]

    def to_json(self) -> dict:
        if self.is_range:
            return {"range": [self.lo, self.hi]}
        return {"values": list(self.literals)}

    @classmethod
    def from_json(cls, obj: Any) -> "ValueDomain":
        if not isinstance(obj, dict) or len(obj) != 1:
            raise DomainError('Value domain must be {"range": [lo, hi]} or {"values": [...]}')
        if "range" in obj:
            bounds = obj["range"]
            if not isinstance(bounds, list) or len(bounds) != 2:
                raise DomainError("range must be [lo, hi]")
            return cls(lo=bounds[0], hi=bounds[1])
        if "values" in obj:
            if not isinstance(obj["values"], list):
                raise DomainError("values must be a list")
            return cls(literals=tuple(obj["values"]))
        raise DomainError(f"unknown Value domain descriptor {sorted(obj)}")


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _literal_key(x: Any) -> tuple[str, Any]:
    # keeps 1 and True (and "1") distinct
    return (type(x).__name__, x)


@dataclass(frozen=True)
class ConfigSymbol:
    name: str
    kind: str
    domain: tuple[str, ...] | ValueDomain
    depends_on: tuple[Requirement, ...] = ()

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise MalformedRecordError("symbol name must be a non-empty string")
        if self.kind not in KINDS:
            raise MalformedRecordError(f"unknown kind {self.kind!r}", symbol=self.name)
        if self.kind == "Bool":
            if set(self.domain) != set(BOOL_VALUES) or len(self.domain) != 2:
                raise DomainError("Bool domain is exactly {Yes, No}", symbol=self.name)
        elif self.kind in ("Choice", "Menu"):
            if isinstance(self.domain, ValueDomain) or not self.domain:
                raise DomainError(f"{self.kind} symbol needs a non-empty option list", symbol=self.name)
            if len(set(self.domain)) != len(self.domain):
                raise DomainError("options must be distinct", symbol=self.name)
        elif not isinstance(self.domain, ValueDomain):
            raise DomainError("Value symbol needs a range or literal domain", symbol=self.name)

    @property
    def default(self) -> Any:
        """Conservative reset value: Bool "No", first option, or domain minimum."""
        if self.kind == "Bool":
            return "No"
        if self.kind == "Value":
            return self.domain.minimum
        return self.domain[0]

    @property
    def selected(self) -> Any:
        """State a Choice/Menu member takes when picked."""
        if self.kind not in ("Choice", "Menu"):
            raise TypeError(f"{self.kind} symbols have no selected state")
        return self.domain[-1]

    def allows(self, value: Any) -> bool:
        if self.kind == "Value":
            return value in self.domain
        return isinstance(value, str) and value in self.domain

    def is_active(self, value: Any) -> bool:
        return value != self.default

    def to_json(self) -> dict:
        domain = self.domain.to_json() if isinstance(self.domain, ValueDomain) else list(self.domain)
        return {
            "name": self.name,
            "kind": self.kind,
            "domain": domain,
            "depends_on": [{"symbol": s, "value": v} for s, v in self.depends_on],
        }


@dataclass(frozen=True)
class ConfigGroup:
    """One training sample: a typed batch of symbols plus the expected answer.

    ``answer`` shapes: Bool and Value map symbol -> value, Menu is a sorted
    tuple of selected symbols, Choice is the single selected symbol.
    """

    group_type: str
    candidate: tuple[str, ...]
    question: str = ""
    answer: Any = None

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "ConfigGroup":
        """Build a group from a dataset record, normalizing the answer shape."""
        missing = [k for k in ("type", "candidate", "question", "answer") if k not in rec]
        if missing:
            raise MalformedRecordError(f"missing fields {missing}")
        candidate = rec["candidate"]
        if isinstance(candidate, str):
            candidate = [candidate]
        if not isinstance(candidate, list) or not all(isinstance(c, str) for c in candidate):
            raise MalformedRecordError("candidate must be a symbol name or a list of names")
        if not isinstance(rec["question"], str):
            raise MalformedRecordError("question must be a string")
        return cls(
            group_type=rec["type"],
            candidate=tuple(candidate),
            question=rec["question"],
            answer=normalize_answer(rec["type"], rec["answer"]),
        )

    def to_record(self) -> dict:
        answer = self.answer
        if isinstance(answer, tuple):
            answer = list(answer)
        return {
            "type": self.group_type,
            "candidate": list(self.candidate),
            "question": self.question,
            "answer": answer,
        }


def normalize_answer(group_type: str, answer: Any) -> Any:
    """Canonicalize an answer where that is shape-preserving; leave the rest for validation."""
    if isinstance(answer, list):
        if group_type == "Menu" and all(isinstance(a, str) for a in answer):
            return tuple(sorted(answer))
        if group_type == "Choice" and len(answer) == 1 and isinstance(answer[0], str):
            return answer[0]
        return tuple(answer)
    if isinstance(answer, dict):
        return dict(answer)
    return answer


@dataclass(frozen=True)
class ConfigSpace:
    symbols: Mapping[str, ConfigSymbol]
    groups: tuple[ConfigGroup, ...] = ()
    topo_order: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "symbols", MappingProxyType(dict(self.symbols)))
        for sym in self.symbols.values():
            for dep, value in sym.depends_on:
                if dep not in self.symbols:
                    raise UnknownDependencyError(
                        f"{sym.name} depends on unknown symbol {dep}", symbol=sym.name
                    )
                if not self.symbols[dep].allows(value):
                    raise DomainError(
                        f"{sym.name} requires {dep}={value!r}, outside its domain", symbol=sym.name
                    )
        object.__setattr__(self, "topo_order", _topological_order(self.symbols))

    def __getitem__(self, name: str) -> ConfigSymbol:
        try:
            return self.symbols[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown symbol {name}", symbol=name) from None

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    def __len__(self) -> int:
        return len(self.symbols)

    def names(self) -> list[str]:
        return sorted(self.symbols)

    def default_assignment(self) -> dict[str, Any]:
        return {name: self.symbols[name].default for name in sorted(self.symbols)}

    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n: [] for n in self.symbols}
        for sym in self.symbols.values():
            for dep, _ in sym.depends_on:
                out[dep].append(sym.name)
        return {k: sorted(v) for k, v in out.items()}

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(self.symbols[n].to_json(), sort_keys=True) + "\n" for n in self.topo_order
        )


def _topological_order(symbols: Mapping[str, ConfigSymbol]) -> tuple[str, ...]:
    """Kahn's algorithm, parents first, ties broken by name."""
    indeg = {n: 0 for n in symbols}
    kids: dict[str, list[str]] = {n: [] for n in symbols}
    for sym in symbols.values():
        for dep in {d for d, _ in sym.depends_on}:
            indeg[sym.name] += 1
            kids[dep].append(sym.name)
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for k in kids[n]:
            indeg[k] -= 1
            if indeg[k] == 0:
                heapq.heappush(heap, k)
    if len(order) != len(symbols):
        raise DependencyCycleError(_find_cycle(symbols, set(symbols) - set(order)))
    return tuple(order)


def _find_cycle(symbols: Mapping[str, ConfigSymbol], remaining: set[str]) -> list[str]:
    # every node left after Kahn has a parent that is also left, so walking
    # parents must revisit a node
    node = min(remaining)
    seen: list[str] = []
    while node not in seen:
        seen.append(node)
        node = min(d for d, _ in symbols[node].depends_on if d in remaining)
    return seen[seen.index(node):]


def _parse_symbol(rec: Any, line: int) -> ConfigSymbol:
    if not isinstance(rec, dict):
        raise MalformedRecordError("record must be a JSON object", line=line)
    name = rec.get("name")
    kind = rec.get("kind")
    if not isinstance(name, str) or not name:
        raise MalformedRecordError("missing or empty 'name'", line=line)
    if kind not in KINDS:
        raise MalformedRecordError(f"{name}: kind must be one of {KINDS}", line=line, symbol=name)
    raw_domain = rec.get("domain")
    deps_raw = rec.get("depends_on", [])
    if not isinstance(deps_raw, list):
        raise MalformedRecordError(f"{name}: depends_on must be a list", line=line, symbol=name)
    deps = []
    for d in deps_raw:
        if not isinstance(d, dict) or set(d) != {"symbol", "value"}:
            raise MalformedRecordError(
                f'{name}: dependency entries are {{"symbol": ..., "value": ...}}', line=line, symbol=name
            )
        deps.append((d["symbol"], d["value"]))
    if kind == "Bool":
        domain = BOOL_VALUES if raw_domain is None else raw_domain
        domain = tuple(domain) if isinstance(domain, list) else domain
    elif kind == "Value":
        domain = raw_domain
    else:
        if not isinstance(raw_domain, list):
            raise DomainError(f"{name}: {kind} domain must be an option list", line=line, symbol=name)
        domain = tuple(raw_domain)
    try:
        if kind == "Value":
            domain = ValueDomain.from_json(domain)
        return ConfigSymbol(name=name, kind=kind, domain=domain, depends_on=tuple(deps))
    except ConfigSpaceError as exc:
        raise type(exc)(f"{name}: {exc}", line=line, symbol=name) from None
    except TypeError:
        raise DomainError(f"{name}: malformed domain", line=line, symbol=name) from None


def load_config_space(source: str | Iterable[str]) -> ConfigSpace:
    """Parse a ConfigSpace JSONL document (text or iterable of lines)."""
    lines = source.splitlines() if isinstance(source, str) else list(source)
    symbols: dict[str, ConfigSymbol] = {}
    for lineno, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(f"invalid JSON: {exc.msg}", line=lineno) from None
        sym = _parse_symbol(rec, lineno)
        if sym.name in symbols:
            raise DuplicateSymbolError(f"duplicate symbol {sym.name}", line=lineno, symbol=sym.name)
        symbols[sym.name] = sym
    return ConfigSpace(symbols)


def validate_group(space: ConfigSpace, group: ConfigGroup) -> list[str]:
    """Return the list of violated group invariants; empty means ok."""
    problems: list[str] = []
    gtype = group.group_type
    if gtype not in KINDS:
        return [f"unknown group type {gtype!r}"]
    cands = group.candidate
    if not cands:
        return ["candidate list is empty"]
    if len(set(cands)) != len(cands):
        problems.append("candidate list has duplicates")
    for c in cands:
        if c not in space:
            problems.append(f"unknown candidate symbol {c}")
        elif space[c].kind != gtype:
            problems.append(f"candidate {c} has kind {space[c].kind}, group type is {gtype}")
    if problems:
        return problems

    ans = group.answer
    if gtype in ("Bool", "Value"):
        if not isinstance(ans, dict):
            return [f"{gtype} answer must map symbol -> value"]
        if set(ans) != set(cands):
            problems.append(f"{gtype} answer keys {sorted(ans)} must equal candidate {sorted(cands)}")
        for sym, val in sorted(ans.items()):
            if sym not in cands:
                continue
            if gtype == "Bool" and val not in BOOL_VALUES:
                problems.append(f"{sym}: Bool answer must be Yes or No, got {val!r}")
            elif gtype == "Value" and not space[sym].allows(val):
                problems.append(f"{sym}: value {val!r} outside domain")
    elif gtype == "Choice":
        if isinstance(ans, (tuple, list)):
            problems.append(f"Choice requires exactly one selected symbol, got {len(ans)}")
        elif not isinstance(ans, str):
            problems.append("Choice answer must be a symbol name")
        elif ans not in cands:
            problems.append(f"Choice answer {ans} not in candidate")
    else:
        if not isinstance(ans, (tuple, list)):
            return ["Menu answer must be a list of symbols"]
        if not ans:
            problems.append("Menu answer must select at least one symbol")
        if len(set(ans)) != len(ans):
            problems.append("Menu answer has duplicates")
        extra = sorted(str(a) for a in set(ans) - set(cands))
        if extra:
            problems.append(f"Menu answer not a subset of candidate: {extra}")
    return problems


def check_dependencies(space: ConfigSpace, assignment: Assignment) -> list[tuple[str, Requirement]]:
    """Unmet ``(symbol, (required_symbol, required_value))`` pairs, sorted.

    A requirement binds only while its symbol is active. An unassigned
    required symbol counts as unmet.
    """
    for name in assignment:
        if name not in space:
            raise UnknownSymbolError(f"unknown symbol {name} in assignment", symbol=name)
    out = []
    for name in sorted(assignment):
        sym = space[name]
        if not sym.is_active(assignment[name]):
            continue
        for dep, value in sorted(sym.depends_on, key=lambda r: (r[0], str(r[1]))):
            if dep not in assignment or assignment[dep] != value:
                out.append((name, (dep, value)))
    return out


def group_by_dependency(space: ConfigSpace, max_group_size: int) -> list[ConfigGroup]:
    """Partition symbols into typed group skeletons (no question, no answer).

    Symbols of one kind that are linked by dependencies form a component.
    Components that fit are packed whole, next-fit, into groups of at most
    ``max_group_size``; larger components are cut along topological order into
    groups of their own, so parents land in earlier groups than their children.
    """
    if max_group_size < 1:
        raise ValueError("max_group_size must be >= 1")
    rank = {n: i for i, n in enumerate(space.topo_order)}

    parent = {n: n for n in space.symbols}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for sym in space.symbols.values():
        for dep, _ in sym.depends_on:
            if space[dep].kind == sym.kind:
                parent[find(sym.name)] = find(dep)

    components: dict[str, list[str]] = {}
    for n in space.symbols:
        components.setdefault(find(n), []).append(n)

    skeletons: list[ConfigGroup] = []
    for kind in KINDS:
        comps = [sorted(c, key=rank.__getitem__) for c in components.values() if space[c[0]].kind == kind]
        comps.sort(key=lambda c: rank[c[0]])
        current: list[str] = []
        for comp in comps:
            if len(comp) <= max_group_size:
                if len(current) + len(comp) > max_group_size:
                    skeletons.append(ConfigGroup(kind, tuple(current)))
                    current = []
                current.extend(comp)
                continue
            if current:
                skeletons.append(ConfigGroup(kind, tuple(current)))
                current = []
            # the tail chunk stays alone: mixing it with later components could
            # sort it ahead of the chunk that holds its parents
            for i in range(0, len(comp), max_group_size):
                skeletons.append(ConfigGroup(kind, tuple(comp[i:i + max_group_size])))
        if current:
            skeletons.append(ConfigGroup(kind, tuple(current)))
    skeletons.sort(key=lambda g: min(rank[c] for c in g.candidate))
    return skeletons
