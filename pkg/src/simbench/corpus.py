"""Dataset ingestion, persistence, and deterministic sampling.

Two record kinds live in line-delimited JSON files (UTF-8, LF):

  documents:  {"id": str, "text": str, "meta": {str: str}}
  tasks:      {"id": str, "input": str, "instruction": str|null,
               "targets": [str, ...], "correct_index": int}

Ingestion validates every line, persists a normalized copy into the store,
and returns a handle carrying the exact record count plus, for task
datasets, the random-chance baseline (mean over examples of 1/#targets).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Literal

from numpy.random import Generator, Philox

from .errors import EmptyDatasetError, IngestError

log = logging.getLogger(__name__)

DatasetKind = Literal["reference_corpus", "task_dataset"]

REFERENCE_CORPUS: DatasetKind = "reference_corpus"
TASK_DATASET: DatasetKind = "task_dataset"


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    meta: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class TaskExample:
    id: str
    input: str
    targets: tuple[str, ...]
    correct_index: int
    instruction: str | None = None

    @property
    def chance_accuracy(self) -> Fraction:
        return Fraction(1, len(self.targets))


@dataclass(frozen=True)
class DatasetHandle:
    name: str
    kind: DatasetKind
    example_count: int
    num_choices_baseline: float | None  # None for reference corpora
    path: Path  # normalized records file inside the store


def _require(condition: bool, message: str, line: int) -> None:
    if not condition:
        raise IngestError(message, line=line)


def parse_document(obj: dict, line: int) -> Document:
    _require(isinstance(obj.get("id"), str) and obj["id"] != "", "missing or empty 'id'", line)
    _require(isinstance(obj.get("text"), str), "missing 'text'", line)
    _require(obj["text"].strip() != "", "'text' is empty after trimming", line)
    meta = obj.get("meta", {})
    _require(
        isinstance(meta, dict) and all(isinstance(k, str) and isinstance(v, str) for k, v in meta.items()),
        "'meta' must be a string-to-string map",
        line,
    )
    return Document(id=obj["id"], text=obj["text"], meta=dict(meta))


def parse_task_example(obj: dict, line: int) -> TaskExample:
    _require(isinstance(obj.get("id"), str) and obj["id"] != "", "missing or empty 'id'", line)
    _require(isinstance(obj.get("input"), str), "missing 'input'", line)
    targets = obj.get("targets")
    _require(isinstance(targets, list) and len(targets) >= 2, "'targets' must list at least 2 choices", line)
    _require(all(isinstance(t, str) for t in targets), "'targets' entries must be strings", line)
    _require(len(set(targets)) == len(targets), "'targets' must be pairwise distinct", line)
    ci = obj.get("correct_index")
    _require(isinstance(ci, int) and not isinstance(ci, bool), "'correct_index' must be an integer", line)
    _require(0 <= ci < len(targets), f"'correct_index' {ci} out of range for {len(targets)} targets", line)
    instruction = obj.get("instruction")
    _require(instruction is None or isinstance(instruction, str), "'instruction' must be a string or null", line)
    return TaskExample(
        id=obj["id"],
        input=obj["input"],
        targets=tuple(targets),
        correct_index=ci,
        instruction=instruction,
    )


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise IngestError(f"invalid JSON ({e.msg})", line=lineno) from e
            if not isinstance(obj, dict):
                raise IngestError("record is not a JSON object", line=lineno)
            yield lineno, obj


def read_documents(path: Path | str) -> list[Document]:
    """Read and validate a document file without going through a store."""
    docs = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(Path(path)):
        doc = parse_document(obj, lineno)
        _require(doc.id not in seen, f"duplicate id '{doc.id}'", lineno)
        seen.add(doc.id)
        docs.append(doc)
    if not docs:
        raise EmptyDatasetError(f"{path}: no records")
    return docs


def read_task_examples(path: Path | str) -> list[TaskExample]:
    """Read and validate a task file without going through a store."""
    examples = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(Path(path)):
        ex = parse_task_example(obj, lineno)
        _require(ex.id not in seen, f"duplicate id '{ex.id}'", lineno)
        seen.add(ex.id)
        examples.append(ex)
    if not examples:
        raise EmptyDatasetError(f"{path}: no records")
    return examples


def task_document(example: TaskExample) -> Document:
    """Document view of a task example: similarity metrics see the input text."""
    return Document(id=example.id, text=example.input)


def write_documents(path: Path | str, docs: Iterable[Document]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for doc in docs:
            rec = {"id": doc.id, "text": doc.text, "meta": doc.meta}
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
            n += 1
    return n


def write_task_examples(path: Path | str, examples: Iterable[TaskExample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for ex in examples:
            rec = {
                "id": ex.id,
                "input": ex.input,
                "instruction": ex.instruction,
                "targets": list(ex.targets),
                "correct_index": ex.correct_index,
            }
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
            n += 1
    return n


class CorpusStore:
    """Directory-backed store of ingested datasets.

    Reads are shareable; ingestion is single-writer (one dataset directory is
    written once and never mutated afterwards).
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dataset_dir(self, name: str) -> Path:
        return self.root / name

    def ingest(self, path: Path | str, kind: DatasetKind, name: str | None = None) -> DatasetHandle:
        path = Path(path)
        name = name or path.stem
        out_dir = self._dataset_dir(name)
        out_dir.mkdir(parents=True, exist_ok=True)
        records = out_dir / "records.jsonl"

        if kind == REFERENCE_CORPUS:
            docs = read_documents(path)
            count = write_documents(records, docs)
            baseline = None
        elif kind == TASK_DATASET:
            examples = read_task_examples(path)
            count = write_task_examples(records, examples)
            baseline = float(sum((ex.chance_accuracy for ex in examples), Fraction(0)) / len(examples))
        else:
            raise IngestError(f"unknown dataset kind '{kind}'")

        handle = DatasetHandle(
            name=name, kind=kind, example_count=count, num_choices_baseline=baseline, path=records
        )
        meta = {
            "name": name,
            "kind": kind,
            "example_count": count,
            "num_choices_baseline": baseline,
        }
        (out_dir / "handle.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
        )
        log.info("ingested %s (%s, %d records)", name, kind, count)
        return handle

    def handle(self, name: str) -> DatasetHandle:
        meta_path = self._dataset_dir(name) / "handle.json"
        if not meta_path.exists():
            raise EmptyDatasetError(f"no dataset named '{name}' in store {self.root}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return DatasetHandle(
            name=meta["name"],
            kind=meta["kind"],
            example_count=meta["example_count"],
            num_choices_baseline=meta["num_choices_baseline"],
            path=self._dataset_dir(name) / "records.jsonl",
        )

    def documents(self, handle: DatasetHandle) -> list[Document]:
        if handle.kind == REFERENCE_CORPUS:
            return read_documents(handle.path)
        return [task_document(ex) for ex in read_task_examples(handle.path)]

    def task_examples(self, handle: DatasetHandle) -> list[TaskExample]:
        if handle.kind != TASK_DATASET:
            raise EmptyDatasetError(f"'{handle.name}' is not a task dataset")
        return read_task_examples(handle.path)


def _iter_handle_documents(handle: DatasetHandle) -> Iterator[Document]:
    for lineno, obj in _iter_jsonl(handle.path):
        if handle.kind == REFERENCE_CORPUS:
            yield parse_document(obj, lineno)
        else:
            yield task_document(parse_task_example(obj, lineno))


def sample(handle: DatasetHandle, n: int, seed: int) -> list[Document]:
    """Uniform sample without replacement, deterministic under (seed, file order).

    Single-pass reservoir sampling; the counter-based Philox generator makes
    the draw sequence a pure function of the seed, so the corpus never has to
    fit in memory. Returns the selected documents in corpus order.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = Generator(Philox(key=seed))
    reservoir: list[tuple[int, Document]] = []
    for i, doc in enumerate(_iter_handle_documents(handle)):
        if i < n:
            reservoir.append((i, doc))
        else:
            j = int(rng.integers(0, i + 1))
            if j < n:
                reservoir[j] = (i, doc)
    reservoir.sort(key=lambda pair: pair[0])
    return [doc for _, doc in reservoir]
