"""Pipeline configuration: one TOML file, every setting overridable by flag.

The config digest recorded in stage manifests is computed over the
*effective* configuration (file plus overrides) with the output directory
excluded, so the same logical run into two directories stays comparable.
Backend credentials are never config values; only the name of an
environment variable is.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from .errors import ConfigError
from .sampling import DegreeBucket, validate_buckets
from .util import sha256_text

DEFAULTS: dict[str, Any] = {
    "paths": {
        "triplets": "", "entities": "", "properties": "",
        "corpus": "", "vectors": "", "vector_ids": "",
        "blocklist": "", "output_dir": "out",
    },
    "ingest": {"on_unresolved": "lenient"},
    "sample": {"entity_count": "all", "seed": 13},
    "filter": {
        "auto_apply": False, "url_media_threshold": 0.5,
        "answer_leak_threshold": 0.5, "sample_size": 8, "seed": 17,
    },
    "difficulty": {"seed": 19, "cap": 0},
    "generation": {
        "backend": "mock", "mode": "full_triplet", "attempts": 3,
        "http": {
            "base_url": "", "model": "", "prompt_field": "prompt",
            "completion_path": "choices.0.text", "key_env": "TAILQA_API_KEY",
            "timeout": 30.0, "max_in_flight": 4,
            # decoding defaults are artifact assumptions, not documented settings
            "params": {"temperature": 0.0, "max_tokens": 64},
        },
    },
    "answering": {
        "backend": "echo_gold", "mode": "closed_book", "attempts": 3,
        "context_stage": "retrieve",
        "http": {
            "base_url": "", "model": "", "prompt_field": "prompt",
            "completion_path": "choices.0.text", "key_env": "TAILQA_API_KEY",
            "timeout": 30.0, "max_in_flight": 4,
            "params": {"temperature": 0.0, "max_tokens": 32},
        },
    },
    "retrieval": {"retriever": "bm25", "k": 20, "k_values": [1, 5, 10, 20],
                  "k1": 1.2, "b": 0.75},
    "embedding": {"provider": "bow", "dimension": 512, "base_url": "",
                  "batch_size": 64},
    "rerank": {"max_depth": 2, "max_paths": 64, "combine": "similarity_only",
               "alpha": 0.5},
    "evaluate": {"annotations": "", "annotation_sample": 100, "seed": 23},
    "service": {"host": "127.0.0.1", "port": 8765, "static_dir": "",
                "samples_per_card": 5, "preview_questions": 3, "page_size": 20},
}

DEFAULT_BUCKET_TABLES = [
    {"name": "fine", "min_degree": 1, "max_degree": 2},
    {"name": "coarse", "min_degree": 15, "max_degree": 100},
]


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(expr: str) -> tuple[list[str], Any]:
    """Parse a --set dotted.key=value override; values read as JSON scalars
    when possible, plain strings otherwise."""
    if "=" not in expr:
        raise ConfigError(f"override must look like section.key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override has an empty key: {expr!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return parts, value


@dataclass
class PipelineConfig:
    raw: dict[str, Any]
    source: Path | None = None

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["paths"]["output_dir"])

    def path(self, name: str) -> Path:
        value = self.raw["paths"].get(name, "")
        if not value:
            raise ConfigError(f"config paths.{name} is not set")
        return Path(value)

    def has_path(self, name: str) -> bool:
        return bool(self.raw["paths"].get(name, ""))

    def section(self, name: str) -> dict[str, Any]:
        return self.raw.get(name, {})

    def buckets(self) -> list[DegreeBucket]:
        tables = self.raw.get("buckets", DEFAULT_BUCKET_TABLES)
        try:
            buckets = [DegreeBucket(t["name"], int(t["min_degree"]), int(t["max_degree"]))
                       for t in tables]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid [[buckets]] table: {e}") from e
        validate_buckets(buckets)
        return buckets

    def digest(self) -> str:
        """Digest of the effective config, excluding the output directory."""
        scrubbed = copy.deepcopy(self.raw)
        scrubbed.get("paths", {}).pop("output_dir", None)
        return sha256_text(json.dumps(scrubbed, sort_keys=True))


def load_config(path: str | Path, overrides: list[str] | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from e
    raw = _deep_merge(DEFAULTS, data)
    if "buckets" not in raw:
        raw["buckets"] = copy.deepcopy(DEFAULT_BUCKET_TABLES)
    for expr in overrides or []:
        parts, value = parse_override(expr)
        node = raw
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {'.'.join(parts)}: not a table")
        node[parts[-1]] = value
    cfg = PipelineConfig(raw=raw, source=path)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig) -> None:
    for name in ("triplets", "entities", "properties"):
        if not cfg.raw["paths"].get(name):
            raise ConfigError(f"config paths.{name} is required")
    if cfg.raw["ingest"]["on_unresolved"] not in ("strict", "lenient"):
        raise ConfigError("ingest.on_unresolved must be 'strict' or 'lenient'")
    cfg.buckets()
    sample = cfg.raw["sample"]
    if sample["entity_count"] != "all":
        if not isinstance(sample["entity_count"], int) or sample["entity_count"] <= 0:
            raise ConfigError("sample.entity_count must be a positive integer or 'all'")
    if cfg.raw["retrieval"]["retriever"] not in ("bm25", "dense"):
        raise ConfigError("retrieval.retriever must be 'bm25' or 'dense'")
    if cfg.raw["embedding"]["provider"] not in ("bow", "http"):
        raise ConfigError("embedding.provider must be 'bow' or 'http'")
    if cfg.raw["generation"]["backend"] not in ("mock", "http"):
        raise ConfigError("generation.backend must be 'mock' or 'http'")
    if cfg.raw["answering"]["backend"] not in ("echo_gold", "http"):
        raise ConfigError("answering.backend must be 'echo_gold' or 'http'")
    if cfg.raw["answering"]["mode"] not in ("closed_book", "with_context"):
        raise ConfigError("answering.mode must be 'closed_book' or 'with_context'")
    if cfg.raw["answering"]["context_stage"] not in ("retrieve", "rerank"):
        raise ConfigError("answering.context_stage must be 'retrieve' or 'rerank'")
