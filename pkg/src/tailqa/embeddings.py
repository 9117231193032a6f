"""Embedding providers for dense retrieval and KG-path re-ranking.

No model runs in-process: vectors come either from a deterministic hashed
bag-of-words (offline runs and tests) or from an HTTP endpoint
(request {"texts": [...]}, response {"vectors": [[...], ...]}).
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np
import requests

from .errors import BackendError, ConfigError
from .util import tokenize


class EmbeddingProvider:
    """Contract: same text always maps to the same fixed-dimension vector."""

    name = "base"
    dimension = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        return np.stack([self.embed(t) for t in texts])


class BagOfWordsEmbedding(EmbeddingProvider):
    """Hashed bag-of-words vectors, L2-normalized.

    Token buckets come from sha256, so vectors are identical across runs,
    platforms and instances. Identical token multisets embed to identical
    unit vectors (cosine exactly 1.0), which is what the re-rank tests rely
    on.
    """

    name = "bow"

    def __init__(self, dimension: int = 512):
        if dimension <= 0:
            raise ConfigError("embedding dimension must be positive")
        self.dimension = dimension
        self._buckets: dict[str, int] = {}

    def _bucket(self, token: str) -> int:
        cached = self._buckets.get(token)
        if cached is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            cached = int.from_bytes(digest[:8], "little") % self.dimension
            self._buckets[token] = cached
        return cached

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float32)
        for token in tokenize(text):
            vec[self._bucket(token)] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        return vec


class HTTPEmbeddingProvider(EmbeddingProvider):
    """Client for a remote embedding endpoint; batches whole requests."""

    def __init__(self, base_url: str, *, name: str = "http_embed",
                 dimension: int = 0, timeout: float = 60.0, batch_size: int = 64):
        if not base_url:
            raise ConfigError("embedding provider requires a base_url")
        self.base_url = base_url
        self.name = name
        self.dimension = dimension
        self.timeout = timeout
        self.batch_size = batch_size

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start:start + self.batch_size])
            try:
                resp = requests.post(self.base_url, json={"texts": batch},
                                     timeout=self.timeout)
                resp.raise_for_status()
                vectors = resp.json()["vectors"]
            except (requests.RequestException, KeyError, ValueError) as e:
                raise BackendError(f"{self.name}: embedding request failed: {e}") from e
            if len(vectors) != len(batch):
                raise BackendError(f"{self.name}: got {len(vectors)} vectors for "
                                   f"{len(batch)} texts")
            rows.extend(vectors)
        mat = np.asarray(rows, dtype=np.float32)
        if self.dimension and mat.shape[1] != self.dimension:
            raise BackendError(f"{self.name}: expected dimension {self.dimension}, "
                               f"got {mat.shape[1]}")
        if not self.dimension and mat.size:
            self.dimension = int(mat.shape[1])
        return mat
