"""BEIR-format corpus, query and qrels loading.

On-disk layout follows BEIR verbatim::

    <dataset>/corpus.jsonl
    <dataset>/queries.jsonl
    <dataset>/qrels/test.tsv
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    BadHeader,
    DuplicateId,
    DuplicateJudgment,
    MalformedJson,
    MissingField,
    NonIntegerGrade,
)

QRELS_HEADER = ("query-id", "corpus-id", "score")


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str

    @property
    def text(self) -> str:
        """Text handed to the tokenizer: title and body joined by one space."""
        return self.title + " " + self.body


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


class Corpus:
    """Ordered, immutable collection of documents with unique ids."""

    def __init__(self, documents: Iterable[Document] = ()):
        self._docs = tuple(documents)
        self._by_id: dict[str, int] = {}
        for i, doc in enumerate(self._docs):
            if not doc.doc_id:
                raise ValueError(f"document {i} has an empty id")
            if doc.doc_id in self._by_id:
                raise DuplicateId("<memory>", i + 1, doc.doc_id)
            self._by_id[doc.doc_id] = i

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def __getitem__(self, i: int) -> Document:
        return self._docs[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Corpus) and self._docs == other._docs

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self._by_id

    def get(self, doc_id: str) -> Document | None:
        i = self._by_id.get(doc_id)
        return None if i is None else self._docs[i]


@dataclass(frozen=True)
class Qrels:
    """Graded judgments; absent (query, doc) pairs are grade 0."""

    judgments: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def grade(self, query_id: str, doc_id: str) -> int:
        return self.judgments.get((query_id, doc_id), 0)

    def for_query(self, query_id: str) -> dict[str, int]:
        return {d: g for (q, d), g in self.judgments.items() if q == query_id}

    def by_query(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for (q, d), g in self.judgments.items():
            out.setdefault(q, {})[d] = g
        return out

    def query_ids(self) -> list[str]:
        return list(dict.fromkeys(q for q, _ in self.judgments))

    def __len__(self) -> int:
        return len(self.judgments)


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedJson(path, line_no, exc.msg) from None
            if not isinstance(record, dict):
                raise MalformedJson(path, line_no, "expected a JSON object")
            yield line_no, record


def _require_str(record: dict, key: str, path: Path, line_no: int) -> str:
    if key not in record or record[key] is None:
        raise MissingField(path, line_no, key)
    value = record[key]
    if not isinstance(value, str):
        value = str(value)
    return value


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    for line_no, rec in _iter_jsonl(path):
        doc_id = _require_str(rec, "_id", path, line_no)
        if not doc_id:
            raise MissingField(path, line_no, "_id")
        body = _require_str(rec, "text", path, line_no)
        title = rec.get("title") or ""
        if doc_id in seen:
            raise DuplicateId(path, line_no, doc_id)
        seen.add(doc_id)
        docs.append(Document(doc_id, str(title), body))
    return Corpus(docs)


def load_queries(path: str | Path) -> list[Query]:
    path = Path(path)
    queries: list[Query] = []
    seen: set[str] = set()
    for line_no, rec in _iter_jsonl(path):
        qid = _require_str(rec, "_id", path, line_no)
        if not qid:
            raise MissingField(path, line_no, "_id")
        text = _require_str(rec, "text", path, line_no)
        if qid in seen:
            raise DuplicateId(path, line_no, qid)
        seen.add(qid)
        queries.append(Query(qid, text))
    return queries


def load_qrels(path: str | Path) -> Qrels:
    path = Path(path)
    judgments: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != QRELS_HEADER:
            raise BadHeader(
                f"{path}:1: expected header 'query-id<TAB>corpus-id<TAB>score', got {header!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise NonIntegerGrade(f"{path}:{line_no}: expected 3 columns, got {len(row)}")
            qid, did, raw = (c.strip() for c in row)
            try:
                grade = int(raw)
            except ValueError:
                raise NonIntegerGrade(f"{path}:{line_no}: grade {raw!r} is not an integer") from None
            if grade < 0:
                raise NonIntegerGrade(f"{path}:{line_no}: negative grade {grade}")
            if (qid, did) in judgments:
                raise DuplicateJudgment(f"{path}:{line_no}: duplicate judgment ({qid}, {did})")
            judgments[(qid, did)] = grade
    return Qrels(judgments)


def write_corpus(corpus: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            rec = {"_id": doc.doc_id, "title": doc.title, "text": doc.body}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def write_queries(queries: Iterable[Query], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(json.dumps({"_id": q.query_id, "text": q.text}, ensure_ascii=False) + "\n")


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(QRELS_HEADER) + "\n")
        for (qid, did), grade in qrels.judgments.items():
            fh.write(f"{qid}\t{did}\t{grade}\n")


@dataclass(frozen=True)
class Dataset:
    corpus: Corpus
    queries: list[Query]
    qrels: Qrels | None


def load_dataset(root: str | Path, split: str = "test") -> Dataset:
    """Load a BEIR dataset directory; qrels are optional."""
    root = Path(root)
    qrels_path = root / "qrels" / f"{split}.tsv"
    queries = load_queries(root / "queries.jsonl")
    qrels = load_qrels(qrels_path) if qrels_path.exists() else None
    if qrels is not None:
        # BEIR ships all queries in one file; keep those judged in this split.
        judged = set(qrels.query_ids())
        queries = [q for q in queries if q.query_id in judged]
    return Dataset(load_corpus(root / "corpus.jsonl"), queries, qrels)
