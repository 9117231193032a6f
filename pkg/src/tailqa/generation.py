"""Turn triplets into natural-language questions via few-shot prompting.

Prompts render each fact as lowercase surface forms joined by " | ", with
the exemplar pair format "subject | property | object => question". The
full_triplet mode includes the object in the target slot (it measurably
improves live-backend question quality); subject_property is retained for
ablation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .answering import normalize
from .backends import CompletionBackend, generate_with_retries
from .errors import BackendError, ConfigError
from .kg import Catalog, Triplet
from .sampling import Candidate
from .util import read_jsonl, stable_id, tokenize, write_jsonl

MODES = ("full_triplet", "subject_property")

GENERATION_INSTRUCTION = "Generate questions:"
DEFAULT_EXEMPLARS = (
    ("obama", "born", "hawaii", "where was obama born?"),
    ("sky", "color", "blue", "what color is the sky?"),
)


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str = GENERATION_INSTRUCTION
    exemplars: tuple[tuple[str, str, str, str], ...] = DEFAULT_EXEMPLARS
    mode: str = "full_triplet"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"template mode must be one of {MODES}, got {self.mode!r}")
        for row in self.exemplars:
            if len(row) != 4:
                raise ConfigError("each exemplar needs 4 fields: "
                                  "subject, property, object, question")


def build_prompt(t: Triplet, tpl: PromptTemplate, catalog: Catalog) -> str:
    """Render instruction, exemplars in order, then the target slot."""
    lines = [tpl.instruction]
    for subj, prop, obj, question in tpl.exemplars:
        if tpl.mode == "full_triplet":
            lines.append(f"{subj} | {prop} | {obj} => {question}")
        else:
            lines.append(f"{subj} | {prop} => {question}")
    subject = catalog.entity_label(t.subject).lower()
    prop = catalog.property_label(t.property).lower()
    if tpl.mode == "full_triplet":
        obj = catalog.object_surface(t).lower()
        lines.append(f"{subject} | {prop} | {obj} =>")
    else:
        lines.append(f"{subject} | {prop} =>")
    return "\n".join(lines)


@dataclass
class QAItem:
    qid: str
    question: str
    answer_label: str
    answer_aliases: tuple[str, ...]
    subject: str
    property: str
    object: str
    object_kind: str
    bucket: str = ""
    mode: str = "full_triplet"
    backend: str = ""
    flags: list[str] = field(default_factory=list)

    def source_triplet(self) -> Triplet:
        return Triplet(self.subject, self.property, self.object, self.object_kind)


def item_qid(t: Triplet, bucket: str, mode: str) -> str:
    return "q" + stable_id(t.subject, t.property, t.object, t.object_kind, bucket, mode)


def generate_question(t: Triplet, tpl: PromptTemplate, backend: CompletionBackend,
                      catalog: Catalog, bucket: str = "", attempts: int = 3) -> QAItem:
    """Generate one QA item; the gold answer comes from the catalogs, never
    from the completion. Raises BackendError after exhausting retries."""
    prompt = build_prompt(t, tpl, catalog)
    completion = generate_with_retries(backend, prompt, attempts=attempts)
    question = completion.strip().split("\n", 1)[0].strip()
    item = QAItem(
        qid=item_qid(t, bucket, tpl.mode),
        question=question,
        answer_label=catalog.object_surface(t),
        answer_aliases=catalog.object_aliases(t),
        subject=t.subject,
        property=t.property,
        object=t.object,
        object_kind=t.object_kind,
        bucket=bucket,
        mode=tpl.mode,
        backend=backend.name,
    )
    item.flags = validate_question(item, catalog)
    return item


def validate_question(item: QAItem, catalog: Catalog | None = None) -> list[str]:
    """Cheap sanity flags; flagged items stay in the dataset.

    The subject check needs a surface form: resolved from the catalog when
    given, otherwise the raw subject id is used (fine for synthetic graphs
    whose ids are labels).
    """
    question = item.question.strip()
    if not question:
        return ["empty"]
    flags = []
    subject_label = catalog.entity_label(item.subject) if catalog else item.subject
    subject_tokens = set(tokenize(subject_label))
    if subject_tokens and not (set(tokenize(question)) & subject_tokens):
        flags.append("missing_subject")
    answer = normalize(item.answer_label)
    if answer and answer in normalize(question):
        flags.append("answer_leak")
    if not question.endswith("?"):
        flags.append("missing_question_mark")
    return flags


@dataclass
class GenerationFailure:
    candidate: Candidate
    error: str


@dataclass
class GenerationResult:
    items: list[QAItem]
    failures: list[GenerationFailure]


def generate_dataset(candidates: Sequence[Candidate], tpl: PromptTemplate,
                     backend: CompletionBackend, catalog: Catalog,
                     attempts: int = 3) -> GenerationResult:
    """Generate over all candidates; failures are recorded, never dropped
    silently, so len(items) + len(failures) == len(candidates)."""

    def run(c: Candidate) -> tuple[QAItem | None, GenerationFailure | None]:
        try:
            item = generate_question(c.to_triplet(), tpl, backend, catalog,
                                     bucket=c.bucket, attempts=attempts)
            return item, None
        except BackendError as e:
            return None, GenerationFailure(candidate=c, error=str(e))

    with ThreadPoolExecutor(max_workers=max(1, backend.max_in_flight)) as ex:
        results = list(ex.map(run, candidates))
    items = [item for item, _ in results if item is not None]
    failures = [fail for _, fail in results if fail is not None]
    return GenerationResult(items=items, failures=failures)


def write_dataset(path: str | Path, items: Iterable[QAItem]) -> int:
    return write_jsonl(path, (
        {"qid": i.qid, "question": i.question, "answer": i.answer_label,
         "aliases": list(i.answer_aliases), "subject": i.subject,
         "property": i.property, "object": i.object, "object_kind": i.object_kind,
         "bucket": i.bucket, "flags": i.flags}
        for i in items))


def read_dataset(path: str | Path) -> list[QAItem]:
    out = []
    for rec in read_jsonl(path):
        out.append(QAItem(
            qid=rec["qid"], question=rec["question"], answer_label=rec["answer"],
            answer_aliases=tuple(rec.get("aliases", [])), subject=rec["subject"],
            property=rec["property"], object=rec["object"],
            object_kind=rec.get("object_kind", "entity"), bucket=rec.get("bucket", ""),
            flags=list(rec.get("flags", []))))
    return out
