"""Extract API call sequences from usage graphs and aggregate a counted corpus.

Sequences are extracted per single object (all API actions touching one
object node, in temporal order) and per usage-dependent object set (the
distinct API object types sharing one action node). Sequences shorter than
two calls carry no usage information and are dropped. Within one method,
identical (key, sequence) pairs from different paths are deduplicated; the
corpus then counts occurrences across methods.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .cfg import build_cfg, count_branch_nodes
from .errors import ParseError
from .ir import Method
from .usage import ActionNode, UsageGraph, build_usage_graphs

DEFAULT_API_PREFIXES = ("android.", "java.")

Sequence = tuple[str, ...]


@dataclass(frozen=True, order=True)
class ObjectKey:
    """Canonical key for a model: sorted set of object type names."""

    types: tuple[str, ...]

    def __post_init__(self):
        if not self.types:
            raise ValueError("object key must contain at least one type")
        if list(self.types) != sorted(set(self.types)):
            raise ValueError("object key types must be sorted and distinct")

    @classmethod
    def of(cls, types) -> "ObjectKey":
        return cls(tuple(sorted(set(types))))

    @property
    def display(self) -> str:
        return "+".join(self.types)

    def __len__(self) -> int:
        return len(self.types)


def _matches(name: str | None, prefixes) -> bool:
    return name is not None and any(name.startswith(p) for p in prefixes)


def _api_actions(graph: UsageGraph, object_ids: set[int],
                 prefixes) -> list[ActionNode]:
    return [a for a in graph.actions_adjacent_to(object_ids)
            if not a.pseudo and _matches(a.class_name, prefixes)]


def extract_single(graph: UsageGraph,
                   api_prefixes=DEFAULT_API_PREFIXES) -> list[tuple[ObjectKey, Sequence]]:
    """One sequence per API-typed object node with at least two API actions."""
    out = []
    for obj in graph.object_nodes:
        if not _matches(obj.type_label, api_prefixes):
            continue
        actions = _api_actions(graph, {obj.id}, api_prefixes)
        if len(actions) >= 2:
            out.append((ObjectKey.of([obj.type_label]),
                        tuple(a.label for a in actions)))
    return out


def usage_dependent_sets(graph: UsageGraph,
                         api_prefixes=DEFAULT_API_PREFIXES,
                         max_set_size: int | None = None) -> list[ObjectKey]:
    """Type sets of size >= 2 induced by single action nodes touching several
    API objects; duplicates merged, first-seen order preserved."""
    keys: list[ObjectKey] = []
    seen: set[ObjectKey] = set()
    for action in graph.action_nodes:
        if action.pseudo or not _matches(action.class_name, api_prefixes):
            continue
        types = {o.type_label for o in graph.objects_adjacent_to(action.id)
                 if _matches(o.type_label, api_prefixes)}
        if len(types) < 2:
            continue
        if max_set_size is not None and len(types) > max_set_size:
            continue
        key = ObjectKey.of(types)
        if key not in seen:
            seen.add(key)
            keys.append(key)
    return keys


def extract_multi(graph: UsageGraph, key: ObjectKey,
                  api_prefixes=DEFAULT_API_PREFIXES) -> Sequence | None:
    """Sequence of API actions touching any object whose type is in the key."""
    ids = {o.id for o in graph.object_nodes if o.type_label in key.types}
    actions = _api_actions(graph, ids, api_prefixes)
    if len(actions) < 2:
        return None
    return tuple(a.label for a in actions)


@dataclass
class MethodExtraction:
    method: str
    pairs: list[tuple[ObjectKey, Sequence]]
    skip_reason: str | None = None  # "too_short" | "branch_limit" | None


def extract_method(method: Method,
                   api_prefixes=DEFAULT_API_PREFIXES,
                   max_branch_nodes: int = 10,
                   min_instructions: int = 7,
                   max_set_size: int | None = None) -> MethodExtraction:
    """Full extraction for one method: all paths, single + multi-object
    sequences, deduplicated. Short methods (getters/setters) and methods over
    the branch cap are skipped rather than failed."""
    name = method.qualified_name
    if len(method.instructions) < min_instructions:
        return MethodExtraction(name, [], skip_reason="too_short")
    cfg = build_cfg(method)
    if count_branch_nodes(cfg) > max_branch_nodes:
        return MethodExtraction(name, [], skip_reason="branch_limit")
    pairs: list[tuple[ObjectKey, Sequence]] = []
    seen: set[tuple[ObjectKey, Sequence]] = set()
    for graph in build_usage_graphs(method, cfg, max_branch_nodes):
        found = list(extract_single(graph, api_prefixes))
        for key in usage_dependent_sets(graph, api_prefixes, max_set_size):
            seq = extract_multi(graph, key, api_prefixes)
            if seq is not None:
                found.append((key, seq))
        for pair in found:
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
    return MethodExtraction(name, pairs)


class Corpus:
    """Counted collection of (object key, call sequence) occurrences."""

    def __init__(self):
        self.entries: dict[ObjectKey, dict[Sequence, int]] = {}

    def add(self, key: ObjectKey, seq: Sequence, count: int = 1) -> None:
        if len(seq) < 2:
            raise ValueError("sequences must contain at least two calls")
        if count < 1:
            raise ValueError("count must be positive")
        per_key = self.entries.setdefault(key, {})
        per_key[tuple(seq)] = per_key.get(tuple(seq), 0) + count

    def total(self, key: ObjectKey) -> int:
        return sum(self.entries.get(key, {}).values())

    def keys(self) -> list[ObjectKey]:
        return sorted(self.entries)

    def sorted_items(self, key: ObjectKey) -> list[tuple[Sequence, int]]:
        return sorted(self.entries[key].items())

    def vocabulary(self, key: ObjectKey) -> list[str]:
        calls = {c for seq in self.entries[key] for c in seq}
        return sorted(calls)

    def __len__(self) -> int:
        return len(self.entries)

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for key in self.keys():
                for seq, count in self.sorted_items(key):
                    record = {"types": list(key.types), "seq": list(seq),
                              "count": count}
                    fh.write(json.dumps(record) + "\n")

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "Corpus":
        corpus = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    corpus.add(ObjectKey.of(record["types"]),
                               tuple(record["seq"]), int(record["count"]))
                except (ValueError, KeyError, TypeError) as exc:
                    raise ParseError(
                        f"corrupt corpus record in {path}: {exc}", lineno) from exc
        return corpus


def aggregate_corpus(extractions) -> Corpus:
    """Accumulate per-method outputs (already deduplicated per method) into a
    counted corpus."""
    corpus = Corpus()
    for extraction in extractions:
        for key, seq in extraction.pairs:
            corpus.add(key, seq)
    return corpus
