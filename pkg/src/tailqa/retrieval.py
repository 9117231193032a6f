"""Passage indexing, top-K retrieval, and answer-containment recall.

Two interchangeable retrievers share the RankedList output shape:
  - BM25Index: lexical scoring built from scratch (k1=1.2, b=0.75,
    lowercase/non-alphanumeric tokenization, Lucene-style smoothed idf).
  - DenseIndex: cosine over precomputed unit-normalized passage vectors,
    with the question embedded by an EmbeddingProvider.

Corpus file: JSONL {"id":, "title":, "text":}.
Vector file: binary header (magic "TQVF", version u32, dimension u32,
count u64, all little-endian) followed by row-major float32 vectors; ids
come from a row-aligned line-delimited sidecar file.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .answering import normalize
from .embeddings import EmbeddingProvider
from .errors import DataError
from .util import read_jsonl, tokenize, write_jsonl

VECTOR_MAGIC = b"TQVF"
VECTOR_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


@dataclass(frozen=True)
class Passage:
    id: str
    title: str
    text: str


@dataclass
class RankedList:
    qid: str
    entries: list[tuple[str, float]]  # (passage id, score), descending
    retriever: str

    def passage_ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def top(self, k: int) -> list[tuple[str, float]]:
        return self.entries[:k]


def rank_entries(scores: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """Descending score, ties broken by ascending passage id."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(pid, float(s)) for pid, s in ordered[:k]]


def load_corpus(path: str | Path) -> list[Passage]:
    passages: list[Passage] = []
    seen: set[str] = set()
    for rec in read_jsonl(path):
        pid = str(rec.get("id", ""))
        if not pid:
            raise DataError(f"{path}: passage record without id")
        if pid in seen:
            raise DataError(f"{path}: duplicate passage id {pid!r}")
        seen.add(pid)
        text = rec.get("text", "")
        if not text:
            raise DataError(f"{path}: passage {pid!r} has empty text")
        passages.append(Passage(id=pid, title=rec.get("title", ""), text=text))
    if not passages:
        raise DataError(f"{path}: corpus is empty")
    return passages


def corpus_by_id(passages: Iterable[Passage]) -> dict[str, Passage]:
    return {p.id: p for p in passages}


class BM25Index:
    """BM25 over passage text.

    score(q, d) = sum over query tokens t of
        idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))
    with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Repeated query tokens
    contribute once per occurrence.
    """

    name = "bm25"

    def __init__(self, passages: Sequence[Passage], k1: float = 1.2, b: float = 0.75):
        if not passages:
            raise DataError("cannot index an empty corpus")
        self.k1 = k1
        self.b = b
        self.passages = list(passages)
        self._tf: list[Counter] = []
        self._lens: list[int] = []
        df: Counter = Counter()
        for p in self.passages:
            tokens = tokenize(p.text)
            tf = Counter(tokens)
            self._tf.append(tf)
            self._lens.append(len(tokens))
            df.update(tf.keys())
        n = len(self.passages)
        self._avgdl = sum(self._lens) / n
        self._idf = {t: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}

    def __len__(self) -> int:
        return len(self.passages)

    def score(self, question: str) -> dict[str, float]:
        """BM25 score for every passage (zero when no query term matches)."""
        q_tokens = tokenize(question)
        scores: dict[str, float] = {}
        for p, tf, dl in zip(self.passages, self._tf, self._lens):
            denom_norm = self.k1 * (1.0 - self.b + self.b * dl / self._avgdl)
            s = 0.0
            for t in q_tokens:
                f = tf.get(t)
                if not f:
                    continue
                s += self._idf[t] * f * (self.k1 + 1.0) / (f + denom_norm)
            scores[p.id] = s
        return scores

    def retrieve(self, question: str, k: int, qid: str = "") -> RankedList:
        if k < 1:
            raise DataError(f"k must be >= 1, got {k}")
        return RankedList(qid=qid, entries=rank_entries(self.score(question), k),
                          retriever=self.name)


class DenseIndex:
    """Cosine retrieval over precomputed passage vectors."""

    name = "dense"

    def __init__(self, ids: Sequence[str], vectors: np.ndarray):
        if len(ids) != vectors.shape[0]:
            raise DataError(f"vector row count {vectors.shape[0]} does not match "
                            f"id count {len(ids)}")
        if len(set(ids)) != len(ids):
            raise DataError("duplicate passage ids in dense index")
        if not len(ids):
            raise DataError("cannot index an empty corpus")
        self.ids = list(ids)
        mat = np.asarray(vectors, dtype=np.float32)
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        norms[norms == 0] = 1.0  # zero vectors stay zero
        self.vectors = mat / norms
        self.dimension = int(mat.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_files(cls, vector_path: str | Path, ids_path: str | Path) -> "DenseIndex":
        ids = [ln for ln in Path(ids_path).read_text(encoding="utf-8").splitlines() if ln]
        vectors = read_vectors(vector_path)
        return cls(ids, vectors)

    def score(self, question: str, provider: EmbeddingProvider) -> dict[str, float]:
        q = np.asarray(provider.embed(question), dtype=np.float32)
        if q.shape[0] != self.dimension:
            raise DataError(f"question embedding dimension {q.shape[0]} does not match "
                            f"index dimension {self.dimension}")
        norm = float(np.linalg.norm(q))
        if norm > 0:
            q = q / norm
        sims = self.vectors @ q
        return {pid: float(s) for pid, s in zip(self.ids, sims)}

    def retrieve(self, question: str, k: int, provider: EmbeddingProvider,
                 qid: str = "") -> RankedList:
        if k < 1:
            raise DataError(f"k must be >= 1, got {k}")
        return RankedList(qid=qid, entries=rank_entries(self.score(question, provider), k),
                          retriever=self.name)


def write_vectors(path: str | Path, vectors: np.ndarray) -> None:
    mat = np.asarray(vectors, dtype="<f4")
    if mat.ndim != 2:
        raise DataError("vector matrix must be 2-dimensional")
    count, dimension = mat.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(VECTOR_MAGIC, VECTOR_VERSION, dimension, count))
        f.write(mat.tobytes(order="C"))


def read_vectors(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise DataError(f"{path}: truncated vector file header")
        magic, version, dimension, count = _HEADER.unpack(header)
        if magic != VECTOR_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != VECTOR_VERSION:
            raise DataError(f"{path}: unsupported vector file version {version}")
        data = np.frombuffer(f.read(), dtype="<f4")
    if data.size != count * dimension:
        raise DataError(f"{path}: expected {count * dimension} floats, got {data.size}")
    return data.reshape(count, dimension).copy()


def answer_in_text(normalized_text: str, answer_label: str,
                   aliases: Iterable[str] = ()) -> bool:
    """Normalized-substring answer containment, the recall hit rule."""
    for surface in (answer_label, *aliases):
        needle = normalize(surface)
        if needle and needle in normalized_text:
            return True
    return False


def recall_at_k(items: Sequence, rankings: Mapping[str, RankedList],
                k_values: Sequence[int],
                passages: Mapping[str, Passage]) -> dict[int, float]:
    """Fraction of questions whose top-k passages contain the gold answer.

    Hit status at each k depends only on the top-k prefix, so recall is
    non-decreasing in k by construction.
    """
    if not items:
        return {k: 0.0 for k in k_values}
    normalized: dict[str, str] = {}
    hits = {k: 0 for k in k_values}
    for item in items:
        ranked = rankings.get(item.qid)
        if ranked is None:
            raise DataError(f"no ranked list for qid {item.qid!r}")
        first_hit_rank: int | None = None
        for rank, (pid, _) in enumerate(ranked.entries, 1):
            text = normalized.get(pid)
            if text is None:
                passage = passages.get(pid)
                if passage is None:
                    raise DataError(f"ranked list references unknown passage {pid!r}")
                text = normalize(passage.text)
                normalized[pid] = text
            if answer_in_text(text, item.answer_label, item.answer_aliases):
                first_hit_rank = rank
                break
        if first_hit_rank is not None:
            for k in k_values:
                if first_hit_rank <= k:
                    hits[k] += 1
    return {k: hits[k] / len(items) for k in k_values}


def top1_context(ranked: RankedList, passages: Mapping[str, Passage]) -> Passage | None:
    """Highest-scored passage, or None when the list is empty (the caller
    falls back to closed-book answering and flags the question)."""
    if not ranked.entries:
        return None
    pid = ranked.entries[0][0]
    passage = passages.get(pid)
    if passage is None:
        raise DataError(f"ranked list references unknown passage {pid!r}")
    return passage


def write_rankings(path: str | Path, rankings: Iterable[RankedList]) -> int:
    return write_jsonl(path, (
        {"qid": r.qid, "retriever": r.retriever,
         "ranking": [{"passage": pid, "score": score} for pid, score in r.entries]}
        for r in rankings))


def read_rankings(path: str | Path) -> dict[str, RankedList]:
    out: dict[str, RankedList] = {}
    for rec in read_jsonl(path):
        out[rec["qid"]] = RankedList(
            qid=rec["qid"],
            entries=[(row["passage"], float(row["score"])) for row in rec["ranking"]],
            retriever=rec.get("retriever", ""))
    return out
