"""Small shared helpers: JSONL IO, digests, tokenization, seed derivation."""

from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Any, Iterable, Iterator

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics."""
    return _TOKEN_RE.findall(text.lower())


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                from .errors import DataError

                raise DataError(f"{path}:{lineno}: invalid JSON record: {e}") from e


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    """Write records atomically (tmp file + rename). Returns row count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


def write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def stable_id(*parts: str) -> str:
    """Short content-derived identifier, stable across runs and platforms."""
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:12]


def derive_seed(seed: int, *parts: str) -> int:
    """Derive a namespaced sub-seed; avoids Python's salted hash()."""
    digest = hashlib.sha256(f"{seed}:{':'.join(parts)}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def dump_json(obj: Any) -> str:
    """Canonical JSON for reports and manifests (sorted keys, stable bytes)."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
