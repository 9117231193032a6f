"""Triplet-format knowledge graph store with label/alias catalogs.

The graph holds (subject, property, object) facts, keeps a subject-role
degree index, and supports holdout removal. Label and alias catalogs are
loaded separately so the same triplet file can be re-labeled.

File formats:
  triplets:   one record per line, 4 tab-separated fields:
              subject_id, property_id, object, object_kind in {entity, literal}.
              Lines starting with '#' are ignored.
  entities:   JSONL {"id": ..., "label": ..., "aliases": [...]}
  properties: JSONL {"id": ..., "label": ...}
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, DataError
from .util import read_jsonl

log = logging.getLogger(__name__)

OBJECT_KINDS = ("entity", "literal")


def _check_id(value: str, what: str, where: str) -> str:
    if not value or "\t" in value or "\n" in value:
        raise DataError(f"{where}: {what} must be non-empty without tab/newline, got {value!r}")
    return value


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Property:
    id: str
    label: str


@dataclass(frozen=True, order=True)
class Triplet:
    """One (subject, property, object) fact; object is an entity id or literal text."""

    subject: str
    property: str
    object: str
    object_kind: str = "entity"

    def __post_init__(self) -> None:
        if self.object_kind not in OBJECT_KINDS:
            raise DataError(f"object_kind must be one of {OBJECT_KINDS}, got {self.object_kind!r}")


class Catalog:
    """Entity and property label/alias lookup."""

    def __init__(self, entities: dict[str, Entity] | None = None,
                 properties: dict[str, Property] | None = None):
        self.entities = entities or {}
        self.properties = properties or {}

    def entity_label(self, entity_id: str) -> str:
        ent = self.entities.get(entity_id)
        if ent is None:
            raise DataError(f"unknown entity id {entity_id!r}")
        return ent.label

    def property_label(self, property_id: str) -> str:
        prop = self.properties.get(property_id)
        if prop is None:
            raise DataError(f"unknown property id {property_id!r}")
        return prop.label

    def aliases(self, entity_id: str) -> tuple[str, ...]:
        ent = self.entities.get(entity_id)
        return ent.aliases if ent is not None else ()

    def object_surface(self, t: Triplet) -> str:
        """Surface form of a triplet object: entity label, or the literal itself."""
        return self.entity_label(t.object) if t.object_kind == "entity" else t.object

    def object_aliases(self, t: Triplet) -> tuple[str, ...]:
        return self.aliases(t.object) if t.object_kind == "entity" else ()


def load_entities(path: str | Path) -> dict[str, Entity]:
    entities: dict[str, Entity] = {}
    for rec in read_jsonl(path):
        eid = _check_id(str(rec.get("id", "")), "entity id", str(path))
        label = rec.get("label", "")
        if not label:
            raise DataError(f"{path}: entity {eid} has empty label")
        if eid in entities:
            raise DataError(f"{path}: duplicate entity id {eid}")
        raw_aliases = rec.get("aliases", []) or []
        # dedup, drop the label itself, keep deterministic order
        aliases = tuple(sorted({a for a in raw_aliases if a and a != label}))
        entities[eid] = Entity(id=eid, label=label, aliases=aliases)
    return entities


def load_properties(path: str | Path) -> dict[str, Property]:
    properties: dict[str, Property] = {}
    for rec in read_jsonl(path):
        pid = _check_id(str(rec.get("id", "")), "property id", str(path))
        label = rec.get("label", "")
        if not label:
            raise DataError(f"{path}: property {pid} has empty label")
        if pid in properties:
            raise DataError(f"{path}: duplicate property id {pid}")
        properties[pid] = Property(id=pid, label=label)
    return properties


def load_catalog(entities_path: str | Path, properties_path: str | Path) -> Catalog:
    return Catalog(load_entities(entities_path), load_properties(properties_path))


@dataclass
class IngestStats:
    rows: int = 0
    stored: int = 0
    duplicates: int = 0
    unresolved_skipped: int = 0


@dataclass
class HoldoutResult:
    removed: int = 0
    missing: int = 0


class KnowledgeGraph:
    """Triplet set with a subject adjacency/degree index.

    Build phase is single-writer; after build the graph is immutable except
    via remove_holdout, which callers must serialize externally. Reads are
    safe for unsynchronized concurrent use on the immutable graph.
    """

    def __init__(self) -> None:
        self._adj: dict[str, list[Triplet]] = {}
        self._members: set[Triplet] = set()
        self.stats = IngestStats()

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, t: Triplet) -> bool:
        return t in self._members

    def add(self, t: Triplet) -> bool:
        """Insert one triplet; returns False for an exact duplicate."""
        if t in self._members:
            return False
        self._members.add(t)
        self._adj.setdefault(t.subject, []).append(t)
        return True

    def degree(self, entity_id: str) -> int:
        """Count of stored triplets with the entity in subject role."""
        return len(self._adj.get(entity_id, ()))

    def triplets_of(self, entity_id: str) -> list[Triplet]:
        """Stored triplets with subject = entity_id, sorted by (property, object)."""
        return sorted(self._adj.get(entity_id, ()),
                      key=lambda t: (t.property, t.object, t.object_kind))

    def subjects(self) -> list[str]:
        """All distinct subject entity ids, sorted."""
        return sorted(self._adj)

    def all_triplets(self) -> list[Triplet]:
        """Every stored triplet in deterministic order."""
        return sorted(self._members)

    def remove_holdout(self, triplets: Iterable[Triplet]) -> HoldoutResult:
        """Remove the listed triplets; absent ones are counted, not errors. Idempotent."""
        result = HoldoutResult()
        for t in set(triplets):
            if t not in self._members:
                result.missing += 1
                continue
            self._members.discard(t)
            remaining = [x for x in self._adj[t.subject] if x != t]
            if remaining:
                self._adj[t.subject] = remaining
            else:
                del self._adj[t.subject]
            result.removed += 1
        return result

    def degree_histogram(
        self, bins: Sequence[tuple[int, int]] | None = None
    ) -> list[tuple[int, int, int]]:
        """(bin_lo, bin_hi, count) rows partitioning all subject entities.

        Default binning: one bin per exact degree up to 100, then
        power-of-two ranges (101-128, 129-256, ...). Empty bins are omitted.
        """
        counts: dict[tuple[int, int], int] = {}
        for subject, rows in self._adj.items():
            d = len(rows)
            counts_key = _bin_for(d, bins)
            counts[counts_key] = counts.get(counts_key, 0) + 1
        return [(lo, hi, n) for (lo, hi), n in sorted(counts.items())]


def _bin_for(degree: int, bins: Sequence[tuple[int, int]] | None) -> tuple[int, int]:
    if bins is not None:
        for lo, hi in bins:
            if lo <= degree <= hi:
                return (lo, hi)
        raise DataError(f"degree {degree} not covered by configured histogram bins")
    if degree <= 100:
        return (degree, degree)
    hi = 128
    while hi < degree:
        hi *= 2
    lo = max(101, hi // 2 + 1)
    return (lo, hi)


def parse_triplet_line(line: str, where: str) -> Triplet:
    fields = line.split("\t")
    if len(fields) != 4:
        raise DataError(f"{where}: expected 4 tab-separated fields, got {len(fields)}")
    subject, prop, obj, kind = fields
    _check_id(subject, "subject id", where)
    _check_id(prop, "property id", where)
    if not obj:
        raise DataError(f"{where}: empty object field")
    if kind not in OBJECT_KINDS:
        raise DataError(f"{where}: object_kind must be 'entity' or 'literal', got {kind!r}")
    return Triplet(subject=subject, property=prop, object=obj, object_kind=kind)


def ingest_triplets(
    path: str | Path,
    catalog: Catalog | None = None,
    on_unresolved: str = "lenient",
) -> KnowledgeGraph:
    """Load a triplet file into a KnowledgeGraph.

    Duplicate identical rows collapse to one stored triplet. When a catalog
    is given, rows whose subject/property/object ids do not resolve are
    rejected (strict) or skipped and counted (lenient, the default).
    """
    if on_unresolved not in ("strict", "lenient"):
        raise ConfigError(f"on_unresolved must be 'strict' or 'lenient', got {on_unresolved!r}")
    graph = KnowledgeGraph()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            t = parse_triplet_line(line, f"{path}:{lineno}")
            graph.stats.rows += 1
            if catalog is not None:
                problem = _unresolved(t, catalog)
                if problem:
                    if on_unresolved == "strict":
                        raise DataError(f"{path}:{lineno}: {problem}")
                    graph.stats.unresolved_skipped += 1
                    continue
            if graph.add(t):
                graph.stats.stored += 1
            else:
                graph.stats.duplicates += 1
    if graph.stats.unresolved_skipped:
        log.warning("%s: skipped %d rows with unresolved references",
                    path, graph.stats.unresolved_skipped)
    return graph


def _unresolved(t: Triplet, catalog: Catalog) -> str | None:
    if t.subject not in catalog.entities:
        return f"unresolved subject entity {t.subject!r}"
    if t.property not in catalog.properties:
        return f"unresolved property {t.property!r}"
    if t.object_kind == "entity" and t.object not in catalog.entities:
        return f"unresolved object entity {t.object!r}"
    return None


def write_triplets(path: str | Path, triplets: Iterable[Triplet]) -> int:
    """Write triplets in the tab-separated file format. Returns row count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as f:
        for t in triplets:
            f.write(f"{t.subject}\t{t.property}\t{t.object}\t{t.object_kind}\n")
            n += 1
    os.replace(tmp, path)
    return n
