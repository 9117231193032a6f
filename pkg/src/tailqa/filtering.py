"""Property screening: automatic heuristics plus an append-only decision ledger.

Heuristics only suggest; a rejection becomes effective when recorded in the
ledger, either automatically (auto-apply mode) or by a human through the
triage service. Human entries always override heuristic ones, and within the
same source the last entry wins.

Ledger file: append-only JSONL
  {"property_id":, "verdict":, "reason":, "source":, "ts":}
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .answering import normalize
from .errors import DataError
from .kg import Catalog, Property, Triplet
from .util import read_jsonl

DECISIONS = ("keep", "reject")
SOURCES = ("heuristic", "human")

DEFAULT_BLOCKLIST = ("instance of", "subclass of", "part of")
DEFAULT_LABEL_KEYWORDS = ("url", "image", "logo", "website", "blog")
DEFAULT_MEDIA_EXTENSIONS = (
    ".jpg", ".jpeg", ".png", ".gif", ".svg", ".webp", ".tif", ".tiff",
    ".bmp", ".ico", ".mp3", ".mp4", ".ogg", ".ogv", ".webm", ".pdf",
)

_URL_RE = re.compile(r"^(https?|ftp)://|^www\.", re.IGNORECASE)


@dataclass(frozen=True)
class Verdict:
    decision: str
    reason: str = ""
    source: str = "heuristic"
    rules: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.decision not in DECISIONS:
            raise DataError(f"verdict decision must be keep/reject, got {self.decision!r}")
        if self.source not in SOURCES:
            raise DataError(f"verdict source must be heuristic/human, got {self.source!r}")
        if self.decision == "reject" and not self.reason:
            raise DataError("reject verdicts require a non-empty reason")


@dataclass(frozen=True)
class LedgerEntry:
    property_id: str
    verdict: Verdict
    ts: str


class FilterLedger:
    """Ordered, append-only record of property keep/reject decisions.

    The effective verdict of a property is its last human entry if any human
    entry exists, otherwise its last heuristic entry.
    """

    def __init__(self) -> None:
        self.entries: list[LedgerEntry] = []
        self._last_human: dict[str, Verdict] = {}
        self._last_heuristic: dict[str, Verdict] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, property_id: str, verdict: Verdict, ts: str | None = None) -> LedgerEntry:
        entry = LedgerEntry(property_id=property_id, verdict=verdict,
                            ts=ts or _now_iso())
        self.entries.append(entry)
        if verdict.source == "human":
            self._last_human[property_id] = verdict
        else:
            self._last_heuristic[property_id] = verdict
        return entry

    def effective(self, property_id: str) -> Verdict | None:
        return self._last_human.get(property_id) or self._last_heuristic.get(property_id)

    def effective_map(self) -> dict[str, Verdict]:
        out = dict(self._last_heuristic)
        out.update(self._last_human)
        return out

    def decided_properties(self) -> set[str]:
        return set(self._last_heuristic) | set(self._last_human)


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def record_decision(ledger: FilterLedger, property_id: str, verdict: Verdict,
                    properties: Mapping[str, Property] | None = None,
                    ledger_path: str | Path | None = None) -> LedgerEntry:
    """Append a decision; optionally validate the property id and persist."""
    if properties is not None and property_id not in properties:
        raise DataError(f"unknown property id {property_id!r}")
    entry = ledger.append(property_id, verdict)
    if ledger_path is not None:
        append_ledger_entry(ledger_path, entry)
    return entry


def append_ledger_entry(path: str | Path, entry: LedgerEntry) -> None:
    line = json.dumps({
        "property_id": entry.property_id,
        "verdict": entry.verdict.decision,
        "reason": entry.verdict.reason,
        "source": entry.verdict.source,
        "ts": entry.ts,
    }, ensure_ascii=False)
    with open(path, "a", encoding="utf-8") as f:
        f.write(line + "\n")
        f.flush()


def load_ledger(path: str | Path, missing_ok: bool = True) -> FilterLedger:
    """Replay a ledger file; effective verdicts are a pure function of its rows."""
    ledger = FilterLedger()
    path = Path(path)
    if not path.exists():
        if missing_ok:
            return ledger
        raise DataError(f"ledger file not found: {path}")
    for rec in read_jsonl(path):
        verdict = Verdict(decision=rec.get("verdict", ""), reason=rec.get("reason", ""),
                          source=rec.get("source", "heuristic"))
        ledger.append(rec["property_id"], verdict, ts=rec.get("ts", ""))
    return ledger


def load_blocklist(path: str | Path) -> tuple[str, ...]:
    """One property label per line; blank lines and '#' comments ignored."""
    labels = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            labels.append(line.lower())
    return tuple(labels)


@dataclass(frozen=True)
class HeuristicConfig:
    url_media_threshold: float = 0.5
    answer_leak_threshold: float = 0.5
    label_keywords: tuple[str, ...] = DEFAULT_LABEL_KEYWORDS
    blocklist: tuple[str, ...] = DEFAULT_BLOCKLIST
    media_extensions: tuple[str, ...] = DEFAULT_MEDIA_EXTENSIONS


def _looks_like_url_or_media(literal: str, cfg: HeuristicConfig) -> bool:
    value = literal.strip().lower()
    return bool(_URL_RE.match(value)) or value.endswith(cfg.media_extensions)


def heuristic_screen(prop: Property, sample: Sequence[Triplet], catalog: Catalog,
                     cfg: HeuristicConfig = HeuristicConfig()) -> Verdict:
    """Suggest keep/reject for a property from a sample of its triplets.

    Rules: url_media (URL/media-valued literals or a URL-ish label),
    answer_leak (object surface hides inside the subject label, e.g. family
    name) and blocklist (structural properties). Anything else keeps.
    """
    for t in sample:
        if t.property != prop.id:
            raise DataError(f"sample for {prop.id} contains triplet of {t.property}")

    fired: list[str] = []
    label = prop.label.strip().lower()

    literals = [t.object for t in sample if t.object_kind == "literal"]
    url_hits = sum(_looks_like_url_or_media(x, cfg) for x in literals)
    label_hit = any(k in label for k in cfg.label_keywords)
    if label_hit or (literals and url_hits / len(literals) >= cfg.url_media_threshold):
        fired.append("url_media")

    leaks = 0
    comparable = 0
    for t in sample:
        try:
            subject = normalize(catalog.entity_label(t.subject))
            obj = normalize(catalog.object_surface(t))
        except DataError:
            continue
        if not obj:
            continue
        comparable += 1
        if obj in subject:
            leaks += 1
    if comparable and leaks / comparable >= cfg.answer_leak_threshold:
        fired.append("answer_leak")

    if label in cfg.blocklist:
        fired.append("blocklist")

    if fired:
        return Verdict(decision="reject", reason="rules fired: " + ", ".join(fired),
                       source="heuristic", rules=tuple(fired))
    return Verdict(decision="keep", reason="no heuristic rule fired", source="heuristic")


@dataclass
class FilterOutcome:
    kept: list
    rejected: list
    untriaged: list[str] = field(default_factory=list)  # property ids defaulted to keep


def apply_filter(candidates: Sequence, ledger: FilterLedger) -> FilterOutcome:
    """Partition candidates by effective verdict; no triplet lost or duplicated.

    Properties with no ledger entry default to keep and are reported as
    untriaged so the pipeline stays runnable but loud about it.
    """
    verdicts = ledger.effective_map()
    kept, rejected = [], []
    untriaged: set[str] = set()
    for c in candidates:
        verdict = verdicts.get(c.property)
        if verdict is None:
            untriaged.add(c.property)
            kept.append(c)
        elif verdict.decision == "reject":
            rejected.append(c)
        else:
            kept.append(c)
    return FilterOutcome(kept=kept, rejected=rejected, untriaged=sorted(untriaged))
