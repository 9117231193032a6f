"""Question answering over a generated dataset and alias-aware exact-match scoring.

The match rule is the usual open-domain QA convention: lowercase, strip
punctuation, collapse whitespace, drop leading articles, then compare the
prediction against the gold label and every catalog alias. This convention
is an artifact assumption; it affects any numeric comparison to externally
reported accuracy figures.
"""

from __future__ import annotations

import random
import string
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

from .backends import CompletionBackend, _final_slot, generate_with_retries
from .errors import BackendError, ConfigError, DataError
from .util import read_jsonl, write_jsonl

if TYPE_CHECKING:
    from .generation import QAItem

ERROR_CATEGORIES = (
    "incorrect",
    "granularity",
    "incorrect_question",
    "exact_match",
    "multiple_answers",
    "other",
)

ANSWER_INSTRUCTION = "Answer the given question:"
DEFAULT_ANSWER_EXEMPLARS = (
    ("where was obama born?", "hawaii"),
    ("what color is the sky?", "blue"),
)

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_ARTICLES = ("a", "an", "the")


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace, drop leading articles."""
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    while tokens and tokens[0] in _ARTICLES:
        tokens.pop(0)
    return " ".join(tokens)


def match_surface(pred: str, gold_label: str, aliases: Iterable[str] = ()) -> str | None:
    """The gold surface form the prediction matches after normalization, if any."""
    p = normalize(pred)
    if p == normalize(gold_label):
        return gold_label
    for alias in aliases:
        if p == normalize(alias):
            return alias
    return None


def exact_match(pred: str, gold_label: str, aliases: Iterable[str] = ()) -> bool:
    return match_surface(pred, gold_label, aliases) is not None


def build_answer_prompt(question: str,
                        exemplars: Sequence[tuple[str, str]] = DEFAULT_ANSWER_EXEMPLARS,
                        instruction: str = ANSWER_INSTRUCTION) -> str:
    lines = [instruction]
    lines += [f"{q} => {a}" for q, a in exemplars]
    lines.append(f"{question} =>")
    return "\n".join(lines)


def build_context_prompt(question: str, document: str) -> str:
    return f"Question: {question}\nDocument: {document}\nAnswer:"


class EchoAnswerBackend(CompletionBackend):
    """Evaluator sanity oracle: echoes each item's gold answer.

    Duplicate question texts (different triplets can render to the same
    crude mock question) are served first-in first-out, which lines up with
    answer_dataset's in-order prompting, so accuracy is exactly 1.0 on any
    dataset the backend was built from. Understands both the closed-book
    "question =>" slot and the "Question:" context layout; unknown
    questions complete to "".
    """

    name = "echo_gold"
    max_in_flight = 1  # FIFO answer queues require in-order prompting

    def __init__(self, answers_by_question: Mapping[str, str]):
        self._queues: dict[str, deque[str]] = {
            normalize(q): deque([a]) for q, a in answers_by_question.items()}

    @classmethod
    def from_items(cls, items: Iterable["QAItem"]) -> "EchoAnswerBackend":
        backend = cls({})
        for item in items:
            backend._queues.setdefault(normalize(item.question),
                                       deque()).append(item.answer_label)
        return backend

    def generate(self, prompt: str) -> str:
        question = None
        for line in prompt.splitlines():
            if line.startswith("Question:"):
                question = line[len("Question:"):].strip()
        if question is None:
            question = _final_slot(prompt)
        queue = self._queues.get(normalize(question))
        if not queue:
            return ""
        # keep the last answer around so a reused backend still responds
        return queue.popleft() if len(queue) > 1 else queue[0]


@dataclass
class Prediction:
    qid: str
    prediction: str
    context_passage: str | None = None
    backend: str = ""
    mode: str = "closed_book"
    flags: list[str] = field(default_factory=list)


def answer_dataset(items: Sequence["QAItem"], backend: CompletionBackend,
                   mode: str = "closed_book",
                   exemplars: Sequence[tuple[str, str]] = DEFAULT_ANSWER_EXEMPLARS,
                   instruction: str = ANSWER_INSTRUCTION,
                   context_source: Mapping[str, Any] | None = None,
                   attempts: int = 3) -> list[Prediction]:
    """One prediction per item, emitted in input order.

    In with_context mode each question's passage comes from context_source
    (qid -> passage with .id/.text); a question with no passage falls back to
    closed-book and is flagged. Backend failures are retried, then flagged.
    """
    if mode not in ("closed_book", "with_context"):
        raise ConfigError(f"unknown answering mode {mode!r}")
    if mode == "with_context" and context_source is None:
        raise ConfigError("with_context mode requires a context_source")

    def run(item: "QAItem") -> Prediction:
        flags: list[str] = []
        passage = context_source.get(item.qid) if context_source is not None else None
        if mode == "with_context" and passage is not None:
            prompt = build_context_prompt(item.question, passage.text)
            pred_mode, passage_id = "with_context", passage.id
        else:
            if mode == "with_context":
                flags.append("no_context")
            prompt = build_answer_prompt(item.question, exemplars, instruction)
            pred_mode, passage_id = "closed_book", None
        try:
            completion = generate_with_retries(backend, prompt, attempts=attempts)
            text = completion.strip().split("\n", 1)[0].strip()
        except BackendError:
            flags.append("backend_failed")
            text = ""
        return Prediction(qid=item.qid, prediction=text, context_passage=passage_id,
                          backend=backend.name, mode=pred_mode, flags=flags)

    with ThreadPoolExecutor(max_workers=max(1, backend.max_in_flight)) as ex:
        return list(ex.map(run, items))


def write_predictions(path: str | Path, predictions: Iterable[Prediction]) -> int:
    return write_jsonl(path, (
        {"qid": p.qid, "prediction": p.prediction, "context_passage": p.context_passage,
         "mode": p.mode, "backend": p.backend, "flags": p.flags}
        for p in predictions))


def read_predictions(path: str | Path) -> list[Prediction]:
    out = []
    for rec in read_jsonl(path):
        out.append(Prediction(qid=rec["qid"], prediction=rec.get("prediction", ""),
                              context_passage=rec.get("context_passage"),
                              backend=rec.get("backend", ""),
                              mode=rec.get("mode", "closed_book"),
                              flags=list(rec.get("flags", []))))
    return out


@dataclass
class EvalRecord:
    qid: str
    correct: bool
    matched_surface: str | None = None
    error_category: str | None = None


@dataclass
class AccuracyReport:
    dataset: str
    item_count: int
    correct_count: int
    accuracy: float
    per_bucket: dict[str, dict[str, float]]
    missing_predictions: int
    error_categories: dict[str, int] = field(default_factory=dict)
    category_ratios: dict[str, float] = field(default_factory=dict)
    annotated_misses: int = 0

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "item_count": self.item_count,
            "correct_count": self.correct_count,
            "accuracy": self.accuracy,
            "per_bucket": self.per_bucket,
            "missing_predictions": self.missing_predictions,
            "error_categories": dict(sorted(self.error_categories.items())),
            "category_ratios": dict(sorted(self.category_ratios.items())),
            "annotated_misses": self.annotated_misses,
        }


def score(items: Sequence["QAItem"], predictions: Iterable[Prediction],
          dataset_name: str = "dataset") -> tuple[AccuracyReport, list[EvalRecord]]:
    """Alias-aware exact-match scoring with per-bucket breakdown.

    Items without a prediction count as incorrect (and are reported), so the
    denominator is stable across backends.
    """
    by_qid: dict[str, Prediction] = {}
    for p in predictions:
        by_qid[p.qid] = p

    records: list[EvalRecord] = []
    missing = 0
    bucket_counts: dict[str, list[int]] = {}
    for item in items:
        pred = by_qid.get(item.qid)
        if pred is None:
            missing += 1
            surface = None
        else:
            surface = match_surface(pred.prediction, item.answer_label, item.answer_aliases)
        correct = surface is not None
        records.append(EvalRecord(qid=item.qid, correct=correct, matched_surface=surface))
        count = bucket_counts.setdefault(item.bucket, [0, 0])
        count[0] += 1
        count[1] += int(correct)

    correct_count = sum(r.correct for r in records)
    n = len(records)
    report = AccuracyReport(
        dataset=dataset_name,
        item_count=n,
        correct_count=correct_count,
        accuracy=correct_count / n if n else 0.0,
        per_bucket={
            b: {"count": c, "correct": ok, "accuracy": ok / c if c else 0.0}
            for b, (c, ok) in sorted(bucket_counts.items())
        },
        missing_predictions=missing,
    )
    return report, records


def sample_misses(records: Sequence[EvalRecord], seed: int, n: int = 100) -> list[str]:
    """Seeded random subset of missed qids for manual error annotation."""
    misses = sorted(r.qid for r in records if not r.correct)
    if len(misses) <= n:
        return misses
    return sorted(random.Random(seed).sample(misses, n))


def import_error_annotations(records: Sequence[EvalRecord],
                             annotations: Iterable[dict] | str | Path,
                             report: AccuracyReport | None = None,
                             ) -> dict[str, float]:
    """Apply manual error-category annotations to eval records.

    Annotations are {"qid":, "category":} rows over the six categories;
    annotating a correct item is rejected. Returns the ratio distribution
    over annotated misses and, when a report is given, stores counts and
    ratios on it.
    """
    if isinstance(annotations, (str, Path)):
        annotations = list(read_jsonl(annotations))
    by_qid = {r.qid: r for r in records}
    counts: dict[str, int] = {}
    annotated = 0
    for rec in annotations:
        qid, category = rec.get("qid"), rec.get("category")
        if category not in ERROR_CATEGORIES:
            raise DataError(f"unknown error category {category!r} for qid {qid!r}")
        target = by_qid.get(qid)
        if target is None:
            raise DataError(f"annotation references unknown qid {qid!r}")
        if target.correct:
            raise DataError(f"cannot annotate correct item {qid!r} with an error category")
        target.error_category = category
        counts[category] = counts.get(category, 0) + 1
        annotated += 1
    ratios = {cat: cnt / annotated for cat, cnt in counts.items()} if annotated else {}
    if report is not None:
        report.error_categories = counts
        report.category_ratios = ratios
        report.annotated_misses = annotated
    return ratios
