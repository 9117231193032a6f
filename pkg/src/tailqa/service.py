"""Local HTTP service behind the property-triage UI.

Serves pending/kept/rejected property cards (heuristic suggestion, sample
facts rendered with surface forms, deterministic mock preview questions)
and records human keep/reject decisions into the same append-only ledger
file the CLI batch mode uses. Binds localhost by default; it is a
single-curator desk tool with no auth.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import filtering, generation
from .backends import MockQuestionBackend
from .errors import BackendError, DataError
from .kg import Catalog
from .sampling import Candidate
from .util import derive_seed

STATUSES = ("pending", "kept", "rejected")


@dataclass
class PropertyCard:
    property_id: str
    label: str
    suggestion: filtering.Verdict
    samples: list[dict]
    preview_questions: list[str]
    triplet_count: int


@dataclass
class TriageState:
    catalog: Catalog
    candidates: list[Candidate]
    ledger_path: Path
    heuristic_cfg: filtering.HeuristicConfig = field(default_factory=filtering.HeuristicConfig)
    seed: int = 17
    samples_per_card: int = 5
    preview_questions: int = 3
    page_size: int = 20

    def __post_init__(self) -> None:
        self.ledger = filtering.load_ledger(self.ledger_path)
        self._lock = threading.Lock()
        self._cards = self._build_cards()

    def _build_cards(self) -> dict[str, PropertyCard]:
        by_prop: dict[str, list[Candidate]] = {}
        for c in self.candidates:
            by_prop.setdefault(c.property, []).append(c)
        backend = MockQuestionBackend()
        tpl = generation.PromptTemplate()
        cards: dict[str, PropertyCard] = {}
        for pid in sorted(by_prop):
            prop = self.catalog.properties.get(pid)
            if prop is None:
                raise DataError(f"candidate property {pid!r} missing from the catalog")
            group = by_prop[pid]
            rng = random.Random(derive_seed(self.seed, "triage", pid))
            if len(group) > self.samples_per_card:
                idx = sorted(rng.sample(range(len(group)), self.samples_per_card))
                picked = [group[i] for i in idx]
            else:
                picked = list(group)
            triplets = [c.to_triplet() for c in picked]
            suggestion = filtering.heuristic_screen(prop, triplets, self.catalog,
                                                    self.heuristic_cfg)
            samples = []
            previews = []
            for t in triplets:
                samples.append({
                    "subject": self.catalog.entity_label(t.subject),
                    "property": prop.label,
                    "object": self.catalog.object_surface(t),
                })
                if len(previews) < self.preview_questions:
                    try:
                        item = generation.generate_question(t, tpl, backend, self.catalog)
                        previews.append(item.question)
                    except BackendError:
                        pass
            cards[pid] = PropertyCard(
                property_id=pid, label=prop.label, suggestion=suggestion,
                samples=samples, preview_questions=previews,
                triplet_count=len(group))
        return cards

    def status_of(self, pid: str) -> str:
        verdict = self.ledger.effective(pid)
        if verdict is None:
            return "pending"
        return "kept" if verdict.decision == "keep" else "rejected"

    def card_payload(self, pid: str) -> dict[str, Any]:
        card = self._cards[pid]
        verdict = self.ledger.effective(pid)
        return {
            "property_id": card.property_id,
            "label": card.label,
            "triplet_count": card.triplet_count,
            "suggestion": {
                "verdict": card.suggestion.decision,
                "fired_rules": list(card.suggestion.rules),
                "reason": card.suggestion.reason,
            },
            "samples": card.samples,
            "preview_questions": card.preview_questions,
            "effective_verdict": verdict.decision if verdict else None,
            "status": self.status_of(pid),
        }

    def listing(self, status: str) -> list[str]:
        """Stable ordering: pending (untriaged) first, then by descending
        triplet count, then property id."""
        pids = [pid for pid in self._cards if self.status_of(pid) == status]
        pids.sort(key=lambda pid: (-self._cards[pid].triplet_count, pid))
        return pids

    def decide(self, pid: str, verdict: filtering.Verdict) -> None:
        with self._lock:
            filtering.record_decision(self.ledger, pid, verdict,
                                      self.catalog.properties,
                                      ledger_path=self.ledger_path)

    def stats(self) -> dict[str, Any]:
        counts = {s: 0 for s in STATUSES}
        triplets = {s: 0 for s in STATUSES}
        for pid, card in self._cards.items():
            status = self.status_of(pid)
            counts[status] += 1
            triplets[status] += card.triplet_count
        return {**counts, "total": len(self._cards), "triplets": triplets}


class DecisionBody(BaseModel):
    verdict: str
    reason: str = ""


def create_app(state: TriageState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tailqa property triage")

    @app.get("/api/properties")
    def list_properties(status: str = "pending", page: int = 1,
                        page_size: int = 0) -> dict:
        if status not in STATUSES:
            raise HTTPException(status_code=400,
                                detail=f"status must be one of {STATUSES}")
        if page < 1:
            raise HTTPException(status_code=400, detail="page must be >= 1")
        size = page_size or state.page_size
        if size < 1:
            raise HTTPException(status_code=400, detail="page_size must be >= 1")
        pids = state.listing(status)
        pages = max(1, -(-len(pids) // size))
        start = (page - 1) * size
        return {
            "status": status,
            "page": page,
            "page_count": pages,
            "page_size": size,
            "total": len(pids),
            "items": [state.card_payload(pid) for pid in pids[start:start + size]],
        }

    @app.post("/api/properties/{pid}/decision")
    def post_decision(pid: str, body: DecisionBody) -> dict:
        if pid not in state._cards:
            raise HTTPException(status_code=404, detail=f"unknown property {pid!r}")
        if body.verdict not in filtering.DECISIONS:
            raise HTTPException(status_code=422,
                                detail="verdict must be 'keep' or 'reject'")
        if body.verdict == "reject" and not body.reason.strip():
            raise HTTPException(status_code=422,
                                detail="reject decisions require a reason")
        verdict = filtering.Verdict(decision=body.verdict,
                                    reason=body.reason.strip() or "human keep",
                                    source="human")
        state.decide(pid, verdict)
        return state.card_payload(pid)

    @app.get("/api/stats")
    def get_stats() -> dict:
        return state.stats()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def build_state_from_pipeline(cfg) -> TriageState:
    """Assemble triage state from a pipeline's sample-stage outputs."""
    from .kg import load_catalog
    from .pipeline import LEDGER_FILE, _bucket_file
    from .sampling import read_candidates

    catalog = load_catalog(cfg.path("entities"), cfg.path("properties"))
    candidates: list[Candidate] = []
    for bucket in cfg.buckets():
        path = cfg.output_dir / _bucket_file("candidates", bucket.name)
        if not path.exists():
            raise DataError(f"candidates file not found: {path}; run 'sample' first")
        candidates.extend(read_candidates(path))
    section = cfg.section("filter")
    service = cfg.section("service")
    heuristic_cfg = filtering.HeuristicConfig(
        url_media_threshold=float(section["url_media_threshold"]),
        answer_leak_threshold=float(section["answer_leak_threshold"]),
        blocklist=(filtering.load_blocklist(cfg.path("blocklist"))
                   if cfg.has_path("blocklist") else filtering.DEFAULT_BLOCKLIST),
    )
    return TriageState(
        catalog=catalog, candidates=candidates,
        ledger_path=cfg.output_dir / LEDGER_FILE,
        heuristic_cfg=heuristic_cfg, seed=int(section["seed"]),
        samples_per_card=int(service["samples_per_card"]),
        preview_questions=int(service["preview_questions"]),
        page_size=int(service["page_size"]))
