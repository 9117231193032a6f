"""File-based pipeline stages behind the CLI.

Each stage reads the outputs of its upstream stage(s), verifies their
digests against the recorded manifests, writes its own outputs atomically,
and finishes with a manifest. All randomness flows from named config seeds,
so a stage re-run with unchanged inputs/config/seed rewrites identical
bytes. On failure a stage removes whatever outputs it already produced.
"""

from __future__ import annotations

import json
import logging
import random
from pathlib import Path
from typing import Any, Callable, Iterable

from . import answering, difficulty, filtering, generation, rerank, retrieval, sampling
from .backends import CompletionBackend, HTTPCompletionBackend, MockQuestionBackend
from .config import PipelineConfig
from .embeddings import BagOfWordsEmbedding, EmbeddingProvider, HTTPEmbeddingProvider
from .errors import ConfigError, DataError
from .kg import Catalog, KnowledgeGraph, ingest_triplets, load_catalog
from .manifest import (StageManifest, file_digests, load_manifest, require_manifest,
                       verify_outputs, write_manifest)
from .util import derive_seed, dump_json, read_jsonl, sha256_file, write_jsonl, write_text

log = logging.getLogger(__name__)

RAW_INPUTS = ("triplets", "entities", "properties")
STAGE_ORDER = ("build-index", "stats", "sample", "filter", "match-difficulty",
               "generate", "retrieve", "rerank", "answer", "evaluate", "report")

LEDGER_FILE = "ledger.jsonl"


class StageRun:
    """Tracks the files a stage writes so failures can clean them up."""

    def __init__(self, cfg: PipelineConfig, stage: str):
        self.cfg = cfg
        self.stage = stage
        self.output_dir = cfg.output_dir
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: dict[str, Path] = {}
        self.inputs: dict[str, str] = {}
        self.counts: dict[str, int] = {}
        self.seed: int | None = None

    def write_rows(self, name: str, rows: Iterable[dict]) -> int:
        path = self.output_dir / name
        n = write_jsonl(path, rows)
        self.outputs[name] = path
        return n

    def write_doc(self, name: str, obj: Any) -> None:
        path = self.output_dir / name
        write_text(path, dump_json(obj))
        self.outputs[name] = path

    def track(self, name: str, path: Path) -> None:
        self.outputs[name] = path

    def discard_outputs(self) -> None:
        for path in self.outputs.values():
            Path(path).unlink(missing_ok=True)


def _raw_paths(cfg: PipelineConfig) -> dict[str, Path]:
    return {name: cfg.path(name) for name in RAW_INPUTS}


def _require_file(path: Path, what: str) -> Path:
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    return path


def _verify_raw_inputs(cfg: PipelineConfig, run: StageRun) -> None:
    """The raw KG files must still match what build-index validated."""
    upstream = require_manifest(cfg.output_dir, "build-index")
    digests = file_digests(_raw_paths(cfg))
    for name, digest in digests.items():
        recorded = upstream.inputs.get(name)
        if recorded != digest:
            raise DataError(f"digest mismatch: paths.{name} changed since build-index; "
                            f"rerun 'build-index'")
    run.inputs.update(digests)


def _load_graph(cfg: PipelineConfig) -> tuple[KnowledgeGraph, Catalog]:
    catalog = load_catalog(cfg.path("entities"), cfg.path("properties"))
    graph = ingest_triplets(cfg.path("triplets"), catalog,
                            on_unresolved=cfg.section("ingest")["on_unresolved"])
    return graph, catalog


def _bucket_file(prefix: str, bucket: str) -> str:
    return f"{prefix}_{bucket}.jsonl"


def _generation_backend(cfg: PipelineConfig) -> CompletionBackend:
    section = cfg.section("generation")
    if section["backend"] == "mock":
        return MockQuestionBackend()
    http = section["http"]
    return HTTPCompletionBackend(
        base_url=http["base_url"], model=http["model"], prompt_field=http["prompt_field"],
        completion_path=http["completion_path"], params=http.get("params", {}),
        key_env=http["key_env"], timeout=http["timeout"],
        max_in_flight=http["max_in_flight"])


def _answer_backend(cfg: PipelineConfig, items: list) -> CompletionBackend:
    section = cfg.section("answering")
    if section["backend"] == "echo_gold":
        return answering.EchoAnswerBackend.from_items(items)
    http = section["http"]
    return HTTPCompletionBackend(
        base_url=http["base_url"], model=http["model"], prompt_field=http["prompt_field"],
        completion_path=http["completion_path"], params=http.get("params", {}),
        key_env=http["key_env"], timeout=http["timeout"],
        max_in_flight=http["max_in_flight"])


def _embedding_provider(cfg: PipelineConfig) -> EmbeddingProvider:
    section = cfg.section("embedding")
    if section["provider"] == "bow":
        return BagOfWordsEmbedding(dimension=int(section["dimension"]))
    return HTTPEmbeddingProvider(base_url=section["base_url"],
                                 dimension=int(section.get("dimension", 0) or 0),
                                 batch_size=int(section.get("batch_size", 64)))


# --- stages -----------------------------------------------------------------

def stage_build_index(cfg: PipelineConfig, run: StageRun) -> None:
    run.inputs.update(file_digests(_raw_paths(cfg)))
    graph, catalog = _load_graph(cfg)
    summary = {
        "triplet_rows": graph.stats.rows,
        "stored_triplets": graph.stats.stored,
        "duplicate_rows": graph.stats.duplicates,
        "unresolved_skipped": graph.stats.unresolved_skipped,
        "entities": len(catalog.entities),
        "properties": len(catalog.properties),
        "subject_entities": len(graph.subjects()),
    }
    run.write_doc("index_summary.json", summary)
    run.counts.update(summary)


def stage_stats(cfg: PipelineConfig, run: StageRun) -> None:
    _verify_raw_inputs(cfg, run)
    graph, _ = _load_graph(cfg)
    rows = [{"bin_lo": lo, "bin_hi": hi, "count": n}
            for lo, hi, n in graph.degree_histogram()]
    run.counts["bins"] = run.write_rows("degree_histogram.jsonl", rows)
    run.counts["subject_entities"] = sum(r["count"] for r in rows)


def stage_sample(cfg: PipelineConfig, run: StageRun) -> None:
    _verify_raw_inputs(cfg, run)
    graph, _ = _load_graph(cfg)
    section = cfg.section("sample")
    run.seed = int(section["seed"])
    for bucket in cfg.buckets():
        spec = sampling.SampleSpec(bucket=bucket, entity_count=section["entity_count"],
                                   seed=derive_seed(run.seed, bucket.name))
        result = sampling.sample_entities(graph, spec)
        if result.truncated:
            log.warning("bucket %s: requested %s entities, population is %d",
                        bucket.name, section["entity_count"], result.population)
        candidates = sampling.extract_candidates(graph, result.entities, bucket.name)
        name = _bucket_file("candidates", bucket.name)
        run.write_rows(name, (
            {"subject": c.subject, "property": c.property, "object": c.object,
             "object_kind": c.object_kind, "bucket": c.bucket} for c in candidates))
        run.counts[f"entities_{bucket.name}"] = len(result.entities)
        run.counts[f"candidates_{bucket.name}"] = len(candidates)
        run.counts[f"population_{bucket.name}"] = result.population
        run.counts[f"bucket_{bucket.name}_min_degree"] = bucket.min_degree
        run.counts[f"bucket_{bucket.name}_max_degree"] = bucket.max_degree


def _property_samples(candidates: list[sampling.Candidate], sample_size: int,
                      seed: int) -> dict[str, list]:
    """Up to sample_size triplets per property, seeded per property id."""
    by_prop: dict[str, list] = {}
    for c in candidates:
        by_prop.setdefault(c.property, []).append(c.to_triplet())
    out = {}
    for pid, triplets in by_prop.items():
        if len(triplets) <= sample_size:
            out[pid] = triplets
        else:
            rng = random.Random(derive_seed(seed, "property_sample", pid))
            idx = sorted(rng.sample(range(len(triplets)), sample_size))
            out[pid] = [triplets[i] for i in idx]
    return out


def stage_filter(cfg: PipelineConfig, run: StageRun) -> None:
    upstream = require_manifest(cfg.output_dir, "sample")
    buckets = cfg.buckets()
    candidate_files = {_bucket_file("candidates", b.name):
                       cfg.output_dir / _bucket_file("candidates", b.name)
                       for b in buckets}
    verify_outputs(cfg.output_dir, upstream, candidate_files)

    section = cfg.section("filter")
    run.seed = int(section["seed"])
    heuristic_cfg = filtering.HeuristicConfig(
        url_media_threshold=float(section["url_media_threshold"]),
        answer_leak_threshold=float(section["answer_leak_threshold"]),
        blocklist=(filtering.load_blocklist(cfg.path("blocklist"))
                   if cfg.has_path("blocklist") else filtering.DEFAULT_BLOCKLIST),
    )
    _, catalog = _load_graph(cfg)
    per_bucket = {b.name: sampling.read_candidates(cfg.output_dir / _bucket_file("candidates", b.name))
                  for b in buckets}
    all_candidates = [c for cands in per_bucket.values() for c in cands]
    samples = _property_samples(all_candidates, int(section["sample_size"]), run.seed)

    ledger_path = cfg.output_dir / LEDGER_FILE
    ledger = filtering.load_ledger(ledger_path)
    suggestions: dict[str, filtering.Verdict] = {}
    for pid in sorted(samples):
        prop = catalog.properties.get(pid)
        if prop is None:
            raise DataError(f"candidate property {pid!r} missing from the catalog")
        suggestions[pid] = filtering.heuristic_screen(prop, samples[pid], catalog,
                                                      heuristic_cfg)
    if section["auto_apply"]:
        for pid, verdict in suggestions.items():
            current = ledger.effective_map().get(pid)
            already = (current is not None and current.source == "heuristic"
                       and current.decision == verdict.decision)
            if not already:
                filtering.record_decision(ledger, pid, verdict, catalog.properties,
                                          ledger_path=ledger_path)

    report: dict[str, Any] = {"properties": {}, "buckets": {}}
    for pid in sorted(suggestions):
        verdict = ledger.effective(pid)
        report["properties"][pid] = {
            "label": catalog.properties[pid].label,
            "suggestion": suggestions[pid].decision,
            "fired_rules": list(suggestions[pid].rules),
            "effective": verdict.decision if verdict else None,
        }
    untriaged: set[str] = set()
    for b in buckets:
        outcome = filtering.apply_filter(per_bucket[b.name], ledger)
        untriaged.update(outcome.untriaged)
        name = _bucket_file("filtered", b.name)
        run.write_rows(name, (
            {"subject": c.subject, "property": c.property, "object": c.object,
             "object_kind": c.object_kind, "bucket": c.bucket} for c in outcome.kept))
        run.counts[f"kept_{b.name}"] = len(outcome.kept)
        run.counts[f"rejected_{b.name}"] = len(outcome.rejected)
        report["buckets"][b.name] = {"kept": len(outcome.kept),
                                     "rejected": len(outcome.rejected)}
    report["untriaged_properties"] = sorted(untriaged)
    run.write_doc("filter_report.json", report)
    run.counts["untriaged_properties"] = len(untriaged)


def stage_match_difficulty(cfg: PipelineConfig, run: StageRun) -> None:
    buckets = cfg.buckets()
    if len(buckets) != 2:
        raise ConfigError("match-difficulty requires exactly two buckets, "
                          f"got {len(buckets)}")
    upstream = require_manifest(cfg.output_dir, "filter")
    files = {_bucket_file("filtered", b.name): cfg.output_dir / _bucket_file("filtered", b.name)
             for b in buckets}
    verify_outputs(cfg.output_dir, upstream, files)

    section = cfg.section("difficulty")
    run.seed = int(section["seed"])
    a, b = buckets
    ds_a = sampling.read_candidates(cfg.output_dir / _bucket_file("filtered", a.name))
    ds_b = sampling.read_candidates(cfg.output_dir / _bucket_file("filtered", b.name))
    matched_a, matched_b = difficulty.match_distributions(ds_a, ds_b, run.seed)
    cap = int(section.get("cap", 0) or 0)
    if cap:
        matched_a, matched_b = difficulty.cap_matched(matched_a, matched_b, cap, run.seed)

    graph, _ = _load_graph(cfg)
    spaces = difficulty.answer_space_report(graph)
    for bucket, before, after in ((a, ds_a, matched_a), (b, ds_b, matched_b)):
        run.write_rows(_bucket_file("matched", bucket.name), (
            {"subject": c.subject, "property": c.property, "object": c.object,
             "object_kind": c.object_kind, "bucket": c.bucket} for c in after))
        run.write_rows(_bucket_file("difficulty_report", bucket.name),
                       difficulty.match_report_rows(before, after, spaces))
        run.counts[f"matched_{bucket.name}"] = len(after)
        run.counts[f"properties_{bucket.name}"] = len(difficulty.property_histogram(after))


def stage_generate(cfg: PipelineConfig, run: StageRun) -> None:
    upstream = require_manifest(cfg.output_dir, "match-difficulty")
    buckets = cfg.buckets()
    files = {_bucket_file("matched", b.name): cfg.output_dir / _bucket_file("matched", b.name)
             for b in buckets}
    verify_outputs(cfg.output_dir, upstream, files)

    section = cfg.section("generation")
    _, catalog = _load_graph(cfg)
    backend = _generation_backend(cfg)
    exemplars = section.get("exemplars")
    if exemplars:
        tpl = generation.PromptTemplate(
            mode=section["mode"],
            exemplars=tuple(tuple(str(x) for x in row) for row in exemplars))
    else:
        tpl = generation.PromptTemplate(mode=section["mode"])
    for b in buckets:
        candidates = sampling.read_candidates(cfg.output_dir / _bucket_file("matched", b.name))
        result = generation.generate_dataset(candidates, tpl, backend, catalog,
                                             attempts=int(section["attempts"]))
        ds_name = _bucket_file("dataset", b.name)
        path = cfg.output_dir / ds_name
        generation.write_dataset(path, result.items)
        run.track(ds_name, path)
        run.write_rows(_bucket_file("failures", b.name), (
            {"subject": f.candidate.subject, "property": f.candidate.property,
             "object": f.candidate.object, "object_kind": f.candidate.object_kind,
             "bucket": f.candidate.bucket, "error": f.error} for f in result.failures))
        run.counts[f"items_{b.name}"] = len(result.items)
        run.counts[f"failures_{b.name}"] = len(result.failures)


def _load_retriever(cfg: PipelineConfig, passages: list[retrieval.Passage]):
    section = cfg.section("retrieval")
    if section["retriever"] == "bm25":
        index = retrieval.BM25Index(passages, k1=float(section["k1"]), b=float(section["b"]))
        return lambda question, k, qid: index.retrieve(question, k, qid=qid)
    dense = retrieval.DenseIndex.from_files(cfg.path("vectors"), cfg.path("vector_ids"))
    provider = _embedding_provider(cfg)
    return lambda question, k, qid: dense.retrieve(question, k, provider, qid=qid)


def stage_retrieve(cfg: PipelineConfig, run: StageRun) -> None:
    upstream = require_manifest(cfg.output_dir, "generate")
    buckets = cfg.buckets()
    files = {_bucket_file("dataset", b.name): cfg.output_dir / _bucket_file("dataset", b.name)
             for b in buckets}
    verify_outputs(cfg.output_dir, upstream, files)
    run.inputs["corpus"] = sha256_file(_require_file(cfg.path("corpus"), "corpus"))

    section = cfg.section("retrieval")
    passages = retrieval.load_corpus(_require_file(cfg.path("corpus"), "corpus"))
    by_id = retrieval.corpus_by_id(passages)
    retrieve = _load_retriever(cfg, passages)
    k = int(section["k"])
    k_values = [int(x) for x in section["k_values"]]
    for b in buckets:
        items = generation.read_dataset(cfg.output_dir / _bucket_file("dataset", b.name))
        rankings = [retrieve(item.question, k, item.qid) for item in items]
        name = _bucket_file("rankings", b.name)
        path = cfg.output_dir / name
        retrieval.write_rankings(path, rankings)
        run.track(name, path)
        recall = retrieval.recall_at_k(items, {r.qid: r for r in rankings},
                                       [kv for kv in k_values if kv <= k], by_id)
        run.write_doc(f"recall_{b.name}.json",
                      {str(kv): frac for kv, frac in sorted(recall.items())})
        run.counts[f"questions_{b.name}"] = len(items)
    run.counts["passages"] = len(passages)


def stage_rerank(cfg: PipelineConfig, run: StageRun) -> None:
    retrieve_manifest = require_manifest(cfg.output_dir, "retrieve")
    match_manifest = require_manifest(cfg.output_dir, "match-difficulty")
    buckets = cfg.buckets()
    ranking_files = {_bucket_file("rankings", b.name):
                     cfg.output_dir / _bucket_file("rankings", b.name) for b in buckets}
    verify_outputs(cfg.output_dir, retrieve_manifest, ranking_files)
    matched_files = {_bucket_file("matched", b.name):
                     cfg.output_dir / _bucket_file("matched", b.name) for b in buckets}
    verify_outputs(cfg.output_dir, match_manifest, matched_files)

    section = cfg.section("rerank")
    rerank_cfg = rerank.RerankConfig(max_depth=int(section["max_depth"]),
                                     max_paths=int(section["max_paths"]),
                                     combine=section["combine"],
                                     alpha=float(section["alpha"]))
    graph, catalog = _load_graph(cfg)
    holdout = [c.to_triplet()
               for b in buckets
               for c in sampling.read_candidates(cfg.output_dir / _bucket_file("matched", b.name))]
    removed = graph.remove_holdout(holdout)
    run.counts["holdout_removed"] = removed.removed

    passages = retrieval.corpus_by_id(
        retrieval.load_corpus(_require_file(cfg.path("corpus"), "corpus")))
    provider = _embedding_provider(cfg)
    k_values = [int(x) for x in cfg.section("retrieval")["k_values"]
                if int(x) <= int(cfg.section("retrieval")["k"])]
    for b in buckets:
        items = generation.read_dataset(cfg.output_dir / _bucket_file("dataset", b.name))
        before = retrieval.read_rankings(cfg.output_dir / _bucket_file("rankings", b.name))
        results = []
        no_paths = 0
        for item in items:
            ranked = before.get(item.qid)
            if ranked is None:
                raise DataError(f"no ranked list for qid {item.qid!r}; rerun 'retrieve'")
            paths = rerank.find_paths(graph, item.subject, rerank_cfg)
            result = rerank.rerank(ranked, paths, provider, rerank_cfg, passages, catalog)
            no_paths += int(result.no_paths)
            results.append(result)
        name = _bucket_file("reranked", b.name)
        path = cfg.output_dir / name
        rerank.write_rerank_output(path, results)
        run.track(name, path)
        after = {r.ranking.qid: r.ranking for r in results}
        run.write_doc(f"rerank_report_{b.name}.json",
                      rerank.rerank_report(items, before, after, k_values, passages))
        run.counts[f"questions_{b.name}"] = len(items)
        run.counts[f"no_paths_{b.name}"] = no_paths


def _context_source(cfg: PipelineConfig, bucket: str,
                    passages: dict[str, retrieval.Passage]) -> dict[str, retrieval.Passage]:
    stage = cfg.section("answering")["context_stage"]
    if stage == "rerank":
        require_manifest(cfg.output_dir, "rerank")
        path = cfg.output_dir / _bucket_file("reranked", bucket)
        rankings = read_rerank_rankings(path)
    else:
        require_manifest(cfg.output_dir, "retrieve")
        path = cfg.output_dir / _bucket_file("rankings", bucket)
        rankings = retrieval.read_rankings(path)
    source = {}
    for qid, ranked in rankings.items():
        top = retrieval.top1_context(ranked, passages)
        if top is not None:
            source[qid] = top
    return source


def read_rerank_rankings(path: Path) -> dict[str, retrieval.RankedList]:
    """Read rerank output rows back as plain ranked lists (kg score order)."""
    out = {}
    for rec in read_jsonl(path):
        entries = [(row["passage"], float(row.get("kg_score", 0.0)))
                   for row in rec["ranking"]]
        out[rec["qid"]] = retrieval.RankedList(qid=rec["qid"], entries=entries,
                                               retriever="rerank")
    return out


def stage_answer(cfg: PipelineConfig, run: StageRun) -> None:
    upstream = require_manifest(cfg.output_dir, "generate")
    buckets = cfg.buckets()
    files = {_bucket_file("dataset", b.name): cfg.output_dir / _bucket_file("dataset", b.name)
             for b in buckets}
    verify_outputs(cfg.output_dir, upstream, files)

    section = cfg.section("answering")
    mode = section["mode"]
    passages = (retrieval.corpus_by_id(
        retrieval.load_corpus(_require_file(cfg.path("corpus"), "corpus")))
                if mode == "with_context" else {})
    exemplars = section.get("exemplars")
    if exemplars:
        exemplars = tuple((str(q), str(a)) for q, a in exemplars)
    else:
        exemplars = answering.DEFAULT_ANSWER_EXEMPLARS
    for b in buckets:
        items = generation.read_dataset(cfg.output_dir / _bucket_file("dataset", b.name))
        backend = _answer_backend(cfg, items)
        context = _context_source(cfg, b.name, passages) if mode == "with_context" else None
        predictions = answering.answer_dataset(items, backend, mode=mode,
                                               exemplars=exemplars,
                                               context_source=context,
                                               attempts=int(section["attempts"]))
        name = _bucket_file("predictions", b.name)
        path = cfg.output_dir / name
        answering.write_predictions(path, predictions)
        run.track(name, path)
        run.counts[f"predictions_{b.name}"] = len(predictions)
        run.counts[f"fallback_closed_book_{b.name}"] = sum(
            "no_context" in p.flags for p in predictions)


def stage_evaluate(cfg: PipelineConfig, run: StageRun) -> None:
    generate_manifest = require_manifest(cfg.output_dir, "generate")
    answer_manifest = require_manifest(cfg.output_dir, "answer")
    buckets = cfg.buckets()
    verify_outputs(cfg.output_dir, generate_manifest,
                   {_bucket_file("dataset", b.name): cfg.output_dir / _bucket_file("dataset", b.name)
                    for b in buckets})
    verify_outputs(cfg.output_dir, answer_manifest,
                   {_bucket_file("predictions", b.name): cfg.output_dir / _bucket_file("predictions", b.name)
                    for b in buckets})

    section = cfg.section("evaluate")
    run.seed = int(section["seed"])
    for b in buckets:
        items = generation.read_dataset(cfg.output_dir / _bucket_file("dataset", b.name))
        predictions = answering.read_predictions(cfg.output_dir / _bucket_file("predictions", b.name))
        report, records = answering.score(items, predictions, dataset_name=b.name)
        if section["annotations"]:
            answering.import_error_annotations(records, Path(section["annotations"]),
                                               report)
        sample = answering.sample_misses(records, seed=derive_seed(run.seed, b.name),
                                         n=int(section["annotation_sample"]))
        run.write_doc(f"eval_{b.name}.json", report.to_dict())
        run.write_rows(_bucket_file("eval_records", b.name), (
            {"qid": r.qid, "correct": r.correct, "matched_surface": r.matched_surface,
             "error_category": r.error_category} for r in records))
        run.write_doc(f"annotation_sample_{b.name}.json", sample)
        run.counts[f"scored_{b.name}"] = report.item_count
        run.counts[f"correct_{b.name}"] = report.correct_count


def stage_report(cfg: PipelineConfig, run: StageRun) -> None:
    """Aggregate manifests and per-stage reports into one document.

    Timestamps are deliberately excluded so the report is byte-identical
    across re-runs of the same config and seeds.
    """
    buckets = cfg.buckets()
    doc: dict[str, Any] = {"config_digest": cfg.digest(), "stages": {}, "datasets": {}}
    for stage in STAGE_ORDER:
        if stage == "report":
            continue
        manifest = load_manifest(cfg.output_dir, stage)
        if manifest is None:
            continue
        doc["stages"][stage] = {
            "seed": manifest.seed,
            "counts": manifest.counts,
            "outputs": manifest.outputs,
        }
    filter_report_path = cfg.output_dir / "filter_report.json"
    if filter_report_path.exists():
        filter_report = json.loads(filter_report_path.read_text(encoding="utf-8"))
        doc["untriaged_properties"] = filter_report.get("untriaged_properties", [])

    for b in buckets:
        entry: dict[str, Any] = {
            "bucket": {"name": b.name, "min_degree": b.min_degree,
                       "max_degree": b.max_degree},
        }
        matched = cfg.output_dir / _bucket_file("matched", b.name)
        if matched.exists():
            candidates = sampling.read_candidates(matched)
            entry["triplets"] = len(candidates)
            entry["unique_properties"] = len(difficulty.property_histogram(candidates))
        eval_path = cfg.output_dir / f"eval_{b.name}.json"
        if eval_path.exists():
            entry["evaluation"] = json.loads(eval_path.read_text(encoding="utf-8"))
        recall_path = cfg.output_dir / f"recall_{b.name}.json"
        if recall_path.exists():
            entry["recall"] = json.loads(recall_path.read_text(encoding="utf-8"))
        rerank_path = cfg.output_dir / f"rerank_report_{b.name}.json"
        if rerank_path.exists():
            entry["rerank"] = json.loads(rerank_path.read_text(encoding="utf-8"))
        doc["datasets"][b.name] = entry
    run.write_doc("report.json", doc)


STAGES: dict[str, Callable[[PipelineConfig, StageRun], None]] = {
    "build-index": stage_build_index,
    "stats": stage_stats,
    "sample": stage_sample,
    "filter": stage_filter,
    "match-difficulty": stage_match_difficulty,
    "generate": stage_generate,
    "retrieve": stage_retrieve,
    "rerank": stage_rerank,
    "answer": stage_answer,
    "evaluate": stage_evaluate,
    "report": stage_report,
}


def run_stage(cfg: PipelineConfig, stage: str) -> StageManifest:
    fn = STAGES.get(stage)
    if fn is None:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {sorted(STAGES)}")
    run = StageRun(cfg, stage)
    log.info("running stage %s -> %s", stage, cfg.output_dir)
    try:
        fn(cfg, run)
    except Exception:
        run.discard_outputs()
        raise
    manifest = StageManifest(
        stage=stage, config_digest=cfg.digest(), seed=run.seed,
        inputs=run.inputs,
        outputs={name: sha256_file(path) for name, path in run.outputs.items()},
        counts=run.counts)
    write_manifest(cfg.output_dir, manifest)
    return manifest
