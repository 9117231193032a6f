"""Re-rank retrieved passages with knowledge-graph path verbalizations.

For each question we enumerate simple paths outward from its subject entity
(the object/answer is unknown at inference time, so paths cannot be anchored
on it), verbalize every path as the space-joined lowercase surface forms of
the nodes and edges, and score each passage by its maximum embedding
similarity to any verbalization. One relevant fact is enough to support a
passage, hence max rather than mean aggregation.

Generation-source triplets must be removed from the graph before path
finding (holdout removal) or the verbalizations leak the gold answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingProvider
from .errors import ConfigError, DataError
from .kg import Catalog, KnowledgeGraph
from .retrieval import Passage, RankedList, recall_at_k
from .util import write_jsonl

COMBINE_RULES = ("similarity_only", "convex")


@dataclass(frozen=True)
class RerankConfig:
    max_depth: int = 2
    max_paths: int = 64
    combine: str = "similarity_only"
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.max_paths < 1:
            raise ConfigError("max_paths must be >= 1")
        if self.combine not in COMBINE_RULES:
            raise ConfigError(f"combine must be one of {COMBINE_RULES}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")


@dataclass(frozen=True)
class KGPath:
    """A simple path from a question's subject entity outward."""

    subject: str
    steps: tuple[tuple[str, str, str], ...]  # (property, object, object_kind)

    @property
    def hops(self) -> int:
        return len(self.steps)

    def id_sequence(self) -> tuple[str, ...]:
        seq: list[str] = [self.subject]
        for prop, obj, _ in self.steps:
            seq += [prop, obj]
        return tuple(seq)


def find_paths(graph: KnowledgeGraph, subject: str, cfg: RerankConfig) -> list[KGPath]:
    """Breadth-first simple paths from the subject, up to max_depth hops.

    Deterministic order: by hop count, then lexicographic id sequence;
    truncated to max_paths. Literal objects are terminal and entities never
    repeat along a path.
    """
    out: list[KGPath] = []
    frontier: list[KGPath] = [KGPath(subject=subject, steps=())]
    for _ in range(cfg.max_depth):
        level: list[KGPath] = []
        for path in frontier:
            last = path.steps[-1][1] if path.steps else path.subject
            visited = {path.subject, *(obj for _, obj, kind in path.steps if kind == "entity")}
            for t in graph.triplets_of(last):
                if t.object_kind == "entity" and t.object in visited:
                    continue
                level.append(KGPath(subject=path.subject,
                                    steps=path.steps + ((t.property, t.object, t.object_kind),)))
        level.sort(key=KGPath.id_sequence)
        for path in level:
            if len(out) >= cfg.max_paths:
                return out
            out.append(path)
        # literal-terminated paths have no outgoing edges to extend
        frontier = [p for p in level if p.steps[-1][2] == "entity"]
        if not frontier:
            break
    return out


def verbalize(path: KGPath, catalog: Catalog) -> str:
    """Lowercase surface forms of all nodes and edges, joined by spaces."""
    parts = [catalog.entity_label(path.subject)]
    for prop, obj, kind in path.steps:
        parts.append(catalog.property_label(prop))
        parts.append(catalog.entity_label(obj) if kind == "entity" else obj)
    return " ".join(p.lower() for p in parts)


def verbalize_paths(paths: Iterable[KGPath], catalog: Catalog) -> tuple[list[str], int]:
    """Verbalize all paths; paths with unresolvable labels are skipped and counted."""
    texts: list[str] = []
    skipped = 0
    for path in paths:
        try:
            texts.append(verbalize(path, catalog))
        except DataError:
            skipped += 1
    return texts, skipped


@dataclass
class RerankResult:
    ranking: RankedList
    paths_used: int
    no_paths: bool = False
    kg_scores: dict[str, float] = field(default_factory=dict)
    orig_scores: dict[str, float] = field(default_factory=dict)


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


def rerank(ranked: RankedList, paths: Sequence[KGPath], provider: EmbeddingProvider,
           cfg: RerankConfig, passages: Mapping[str, Passage],
           catalog: Catalog) -> RerankResult:
    """Reorder a ranked list by KG-path similarity.

    Each passage's KG score is the max cosine between its text embedding and
    any path verbalization embedding. similarity_only sorts by that score;
    convex blends it with the minmax-normalized original score. Ties keep
    the original rank. The output is always a permutation of the input; with
    no usable paths the input order is returned unchanged and flagged.
    """
    if not ranked.entries:
        raise DataError("cannot rerank an empty ranked list")
    orig_scores = {pid: score for pid, score in ranked.entries}
    texts, _skipped = verbalize_paths(paths, catalog)
    if not texts:
        return RerankResult(ranking=RankedList(qid=ranked.qid, entries=list(ranked.entries),
                                               retriever=ranked.retriever),
                            paths_used=0, no_paths=True, orig_scores=orig_scores)

    passage_texts = []
    for pid, _ in ranked.entries:
        passage = passages.get(pid)
        if passage is None:
            raise DataError(f"ranked list references unknown passage {pid!r}")
        passage_texts.append(passage.text)

    verb_mat = _unit_rows(np.asarray(provider.embed_many(texts), dtype=np.float32))
    pass_mat = _unit_rows(np.asarray(provider.embed_many(passage_texts), dtype=np.float32))
    kg = (pass_mat @ verb_mat.T).max(axis=1)

    if cfg.combine == "similarity_only":
        final = kg
    else:
        orig = np.asarray([s for _, s in ranked.entries], dtype=np.float64)
        spread = float(orig.max() - orig.min())
        norm_orig = (orig - orig.min()) / spread if spread > 0 else np.zeros_like(orig)
        final = cfg.alpha * norm_orig + (1.0 - cfg.alpha) * kg

    order = sorted(range(len(ranked.entries)), key=lambda i: (-float(final[i]), i))
    entries = [(ranked.entries[i][0], float(final[i])) for i in order]
    return RerankResult(
        ranking=RankedList(qid=ranked.qid, entries=entries,
                           retriever=f"{ranked.retriever}+kg"),
        paths_used=len(texts),
        kg_scores={ranked.entries[i][0]: float(kg[i]) for i in range(len(kg))},
        orig_scores=orig_scores,
    )


def rerank_report(items: Sequence, before: Mapping[str, RankedList],
                  after: Mapping[str, RankedList], k_values: Sequence[int],
                  passages: Mapping[str, Passage]) -> dict:
    """Recall@k before/after re-ranking, with deltas."""
    recall_before = recall_at_k(items, before, k_values, passages)
    recall_after = recall_at_k(items, after, k_values, passages)
    return {
        str(k): {"before": recall_before[k], "after": recall_after[k],
                 "delta": recall_after[k] - recall_before[k]}
        for k in k_values
    }


def write_rerank_output(path: str | Path, results: Sequence[RerankResult]) -> int:
    return write_jsonl(path, (
        {"qid": r.ranking.qid,
         "ranking": [{"passage": pid, "orig_score": r.orig_scores.get(pid, 0.0),
                      "kg_score": r.kg_scores.get(pid, 0.0)}
                     for pid, _ in r.ranking.entries],
         "paths_used": r.paths_used}
        for r in results))
