"""Shared fixtures: seeded synthetic knowledge graphs with catalogs and corpora."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import pytest

from tailqa.kg import Catalog, Entity, KnowledgeGraph, Property, Triplet

ADJECTIVES = ("amber", "bright", "calm", "deep", "early", "fabled", "grand",
              "hollow", "iron", "jade", "keen", "lunar", "mossy", "north")
NOUNS = ("archive", "bridge", "canyon", "delta", "engine", "forest", "glacier",
         "harbor", "island", "junction", "kroot", "lagoon", "meadow", "outpost")
VERBS = ("anchored", "built", "carved", "drafted", "etched", "formed", "guarded",
         "hosted", "issued", "joined", "kept", "linked", "mapped", "named")


@dataclass
class SynthKG:
    """A deterministic synthetic KG with a Zipf-like subject degree profile."""

    triplets: list[Triplet]
    entities: dict[str, Entity]
    properties: dict[str, Property]

    def catalog(self) -> Catalog:
        return Catalog(self.entities, self.properties)

    def graph(self) -> KnowledgeGraph:
        g = KnowledgeGraph()
        for t in self.triplets:
            g.add(t)
        return g

    def write(self, directory: Path) -> dict[str, Path]:
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "triplets": directory / "triplets.tsv",
            "entities": directory / "entities.jsonl",
            "properties": directory / "properties.jsonl",
        }
        with open(paths["triplets"], "w", encoding="utf-8") as f:
            f.write("# synthetic knowledge graph\n")
            for t in self.triplets:
                f.write(f"{t.subject}\t{t.property}\t{t.object}\t{t.object_kind}\n")
        with open(paths["entities"], "w", encoding="utf-8") as f:
            for e in self.entities.values():
                f.write(json.dumps({"id": e.id, "label": e.label,
                                    "aliases": list(e.aliases)}) + "\n")
        with open(paths["properties"], "w", encoding="utf-8") as f:
            for p in self.properties.values():
                f.write(json.dumps({"id": p.id, "label": p.label}) + "\n")
        return paths


def entity_label(i: int) -> str:
    return f"{ADJECTIVES[i % len(ADJECTIVES)]} {NOUNS[(i // 3) % len(NOUNS)]} {i:05d}"


def property_label(i: int) -> str:
    return f"{VERBS[i % len(VERBS)]} by {i:03d}"


def make_synth_kg(seed: int, n_entities: int = 1000, n_properties: int = 40,
                  scale: float = 130.0, exponent: float = 0.75,
                  literal_fraction: float = 0.2, alias_fraction: float = 0.3) -> SynthKG:
    """Degrees follow floor(scale / rank^exponent): a few heads above 100,
    a coarse band, a gap band, a long fine tail, and catalog-only entities."""
    rng = random.Random(seed)
    entity_ids = [f"Q{i}" for i in range(1, n_entities + 1)]
    property_ids = [f"P{i}" for i in range(1, n_properties + 1)]

    entities = {}
    for idx, eid in enumerate(entity_ids):
        label = entity_label(idx)
        aliases = []
        if rng.random() < alias_fraction:
            aliases.append(f"{label} alias")
        if rng.random() < alias_fraction / 3:
            aliases.append(f"aka {label}")
        entities[eid] = Entity(id=eid, label=label, aliases=tuple(aliases))
    properties = {pid: Property(id=pid, label=property_label(i))
                  for i, pid in enumerate(property_ids)}

    triplets: list[Triplet] = []
    for rank, eid in enumerate(entity_ids, start=1):
        degree = int(scale / rank ** exponent)
        seen: set[tuple[str, str, str]] = set()
        guard = 0
        while len(seen) < degree and guard < degree * 20:
            guard += 1
            pid = rng.choice(property_ids)
            if rng.random() < literal_fraction:
                obj, kind = str(1900 + rng.randrange(120)), "literal"
            else:
                obj, kind = rng.choice(entity_ids), "entity"
            key = (pid, obj, kind)
            if key in seen:
                continue
            seen.add(key)
            triplets.append(Triplet(eid, pid, obj, kind))
    return SynthKG(triplets=triplets, entities=entities, properties=properties)


def make_corpus(kg: SynthKG, path: Path, max_passages: int = 400,
                distractors: int = 20) -> Path:
    """One passage per subject entity verbalizing its facts, plus distractors."""
    catalog = kg.catalog()
    graph = kg.graph()
    rows = []
    for i, subject in enumerate(graph.subjects()[:max_passages]):
        facts = []
        for t in graph.triplets_of(subject)[:6]:
            facts.append(f"{catalog.entity_label(t.subject)} was "
                         f"{catalog.property_label(t.property)} "
                         f"{catalog.object_surface(t)}")
        rows.append({"id": f"D{i:05d}", "title": catalog.entity_label(subject),
                     "text": ". ".join(facts) + "."})
    for j in range(distractors):
        rows.append({"id": f"X{j:05d}", "title": f"distractor {j}",
                     "text": f"unrelated filler text number {j} about nothing."})
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return path


@pytest.fixture(scope="session")
def synth_kg() -> SynthKG:
    return make_synth_kg(seed=2024, n_entities=1000)


@pytest.fixture(scope="session")
def small_kg() -> SynthKG:
    return make_synth_kg(seed=77, n_entities=120, n_properties=12, scale=40.0)
