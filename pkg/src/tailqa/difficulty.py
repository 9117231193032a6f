"""Difficulty control: equalize per-property triplet counts across two datasets.

Questions generated from different properties differ wildly in difficulty
(a two-choice property vs one with hundreds of thousands of possible
objects), so the two tail datasets are matched to hold the same number of
triplets per property. After matching, difficulty differences come from
entity degree alone.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from typing import Mapping, Sequence, TypeVar

from .errors import ConfigError
from .kg import KnowledgeGraph
from .util import derive_seed

T = TypeVar("T")  # any record with a .property attribute


def property_histogram(ds: Sequence[T]) -> dict[str, int]:
    """Exact per-property counts; values sum to len(ds)."""
    return dict(Counter(item.property for item in ds))


def _subsample(items: Sequence[T], targets: Mapping[str, int], seed: int, tag: str) -> list[T]:
    positions: dict[str, list[int]] = defaultdict(list)
    for idx, item in enumerate(items):
        positions[item.property].append(idx)
    keep: set[int] = set()
    for prop in sorted(targets):
        pos = positions.get(prop, [])
        k = targets[prop]
        if k >= len(pos):
            keep.update(pos)
        else:
            rng = random.Random(derive_seed(seed, tag, prop))
            keep.update(rng.sample(pos, k))
    # survivors preserve input order, which makes matching idempotent
    return [items[i] for i in sorted(keep)]


def match_distributions(ds_a: Sequence[T], ds_b: Sequence[T],
                        seed: int) -> tuple[list[T], list[T]]:
    """Equalize per-property counts to min(count_a, count_b).

    Properties present in only one dataset are dropped from both (any
    nonzero count would break equality). Survivors within a property are a
    seeded uniform sample without replacement; output is deterministic given
    (inputs, seed) and the operation is idempotent.
    """
    hist_a = property_histogram(ds_a)
    hist_b = property_histogram(ds_b)
    targets = {p: min(n, hist_b[p]) for p, n in hist_a.items() if p in hist_b}
    return _subsample(ds_a, targets, seed, "a"), _subsample(ds_b, targets, seed, "b")


def cap_matched(ds_a: Sequence[T], ds_b: Sequence[T], cap: int,
                seed: int) -> tuple[list[T], list[T]]:
    """Optionally shrink two matched datasets to at most ``cap`` items each.

    Per-property targets are scaled proportionally (remainder distributed to
    the largest properties first), so the per-property histograms stay equal
    between the two outputs.
    """
    if cap <= 0:
        raise ConfigError("post-matching cap must be positive")
    hist = property_histogram(ds_a)
    if property_histogram(ds_b) != hist:
        raise ConfigError("cap_matched expects already-matched datasets")
    total = sum(hist.values())
    if total <= cap:
        return list(ds_a), list(ds_b)
    targets = {p: (n * cap) // total for p, n in hist.items()}
    remainder = cap - sum(targets.values())
    for p, _ in sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))[:remainder]:
        targets[p] += 1
    targets = {p: n for p, n in targets.items() if n > 0}
    return _subsample(ds_a, targets, seed, "cap_a"), _subsample(ds_b, targets, seed, "cap_b")


def answer_space(graph: KnowledgeGraph, property_id: str) -> int:
    """Distinct objects reachable via the property in the full graph."""
    return len({t.object for t in graph.all_triplets() if t.property == property_id})


def answer_space_report(graph: KnowledgeGraph) -> dict[str, int]:
    """Distinct-object counts for every property, in one pass."""
    objects: dict[str, set[str]] = defaultdict(set)
    for t in graph.all_triplets():
        objects[t.property].add(t.object)
    return {p: len(objs) for p, objs in objects.items()}


def match_report_rows(ds_before: Sequence[T], ds_after: Sequence[T],
                      answer_spaces: Mapping[str, int]) -> list[dict]:
    """Before/after per-property rows for plotting the difficulty shift."""
    before = property_histogram(ds_before)
    after = property_histogram(ds_after)
    return [
        {"property_id": p, "count_before": n, "count_after": after.get(p, 0),
         "answer_space": answer_spaces.get(p, 0)}
        for p, n in sorted(before.items())
    ]
