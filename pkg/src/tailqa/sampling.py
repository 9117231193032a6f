"""Degree-bucket classification and deterministic tail-entity sampling.

An entity's bucket is decided by its subject-role degree. Default buckets
follow the coarse/fine split used throughout the pipeline: fine-tail covers
degrees 1-2, coarse-tail 15-100, and the gap in between is intentionally
unassigned.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import ConfigError, DataError
from .kg import KnowledgeGraph, Triplet
from .util import read_jsonl, write_jsonl


@dataclass(frozen=True)
class DegreeBucket:
    name: str
    min_degree: int
    max_degree: int

    def contains(self, degree: int) -> bool:
        return self.min_degree <= degree <= self.max_degree


DEFAULT_BUCKETS = (
    DegreeBucket("fine", 1, 2),
    DegreeBucket("coarse", 15, 100),
)


def validate_buckets(buckets: Sequence[DegreeBucket]) -> Sequence[DegreeBucket]:
    """Reject malformed or overlapping bucket definitions."""
    names = set()
    for b in buckets:
        if not b.name:
            raise ConfigError("bucket name must be non-empty")
        if b.name in names:
            raise ConfigError(f"duplicate bucket name {b.name!r}")
        names.add(b.name)
        if b.min_degree < 0:
            raise ConfigError(f"bucket {b.name!r}: min_degree must be >= 0")
        if b.min_degree > b.max_degree:
            raise ConfigError(f"bucket {b.name!r}: min_degree > max_degree")
    ordered = sorted(buckets, key=lambda b: b.min_degree)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.min_degree <= prev.max_degree:
            raise ConfigError(
                f"buckets {prev.name!r} and {cur.name!r} overlap in degree range")
    return buckets


def classify(graph: KnowledgeGraph, entity_id: str,
             buckets: Sequence[DegreeBucket] = DEFAULT_BUCKETS) -> str | None:
    """Name of the unique bucket containing degree(entity), or None."""
    d = graph.degree(entity_id)
    for b in buckets:
        if b.contains(d):
            return b.name
    return None


@dataclass(frozen=True)
class SampleSpec:
    bucket: DegreeBucket
    entity_count: Union[int, str]  # positive int or "all"
    seed: int

    def __post_init__(self) -> None:
        if self.entity_count != "all":
            if not isinstance(self.entity_count, int) or self.entity_count <= 0:
                raise ConfigError(
                    f"entity_count must be a positive integer or 'all', got {self.entity_count!r}")


@dataclass
class SampleResult:
    entities: list[str]
    population: int
    truncated: bool = False  # set when entity_count exceeded the population


def bucket_members(graph: KnowledgeGraph, bucket: DegreeBucket) -> list[str]:
    """Subject entities whose degree falls in the bucket, sorted by id."""
    return [e for e in graph.subjects() if bucket.contains(graph.degree(e))]


def sample_entities(graph: KnowledgeGraph, spec: SampleSpec) -> SampleResult:
    """Uniform sample without replacement from the bucket's member set.

    Members are iterated sorted by id before sampling, so the result depends
    only on (graph contents, spec). The sampled ids are returned sorted.
    """
    members = bucket_members(graph, spec.bucket)
    if spec.entity_count == "all" or spec.entity_count >= len(members):
        truncated = spec.entity_count != "all" and spec.entity_count > len(members)
        return SampleResult(entities=list(members), population=len(members),
                            truncated=truncated)
    rng = random.Random(spec.seed)
    chosen = rng.sample(members, spec.entity_count)
    return SampleResult(entities=sorted(chosen), population=len(members))


@dataclass(frozen=True)
class Candidate:
    """A generation-candidate triplet annotated with its bucket of origin."""

    subject: str
    property: str
    object: str
    object_kind: str
    bucket: str

    def to_triplet(self) -> Triplet:
        return Triplet(self.subject, self.property, self.object, self.object_kind)

    @classmethod
    def from_triplet(cls, t: Triplet, bucket: str) -> "Candidate":
        return cls(t.subject, t.property, t.object, t.object_kind, bucket)


def extract_candidates(graph: KnowledgeGraph, entities: Iterable[str],
                       bucket_name: str) -> list[Candidate]:
    """All triplets of the sampled entities, annotated with the bucket name.

    Entities are visited sorted by id and each entity's triplets come out in
    triplets_of order, so the result is deterministic.
    """
    out: list[Candidate] = []
    for e in sorted(set(entities)):
        for t in graph.triplets_of(e):
            out.append(Candidate.from_triplet(t, bucket_name))
    return out


def write_candidates(path: str | Path, candidates: Iterable[Candidate]) -> int:
    return write_jsonl(path, (
        {"subject": c.subject, "property": c.property, "object": c.object,
         "object_kind": c.object_kind, "bucket": c.bucket}
        for c in candidates))


def read_candidates(path: str | Path) -> list[Candidate]:
    out = []
    for rec in read_jsonl(path):
        try:
            out.append(Candidate(rec["subject"], rec["property"], rec["object"],
                                 rec["object_kind"], rec["bucket"]))
        except KeyError as e:
            raise DataError(f"{path}: candidate record missing field {e}") from e
    return out
