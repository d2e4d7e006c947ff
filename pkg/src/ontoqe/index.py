"""Tokenizer, inverted index and BM25 ranking.

Scoring uses the Lucene flavour of BM25::

    idf(t)   = ln(1 + (N - df + 0.5) / (df + 0.5))
    score    = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))

Query tokens are not deduplicated: a token that occurs ``n`` times in the
query contributes ``n`` times. Expanded queries rely on this to weight the
original query against the pseudo-document.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import math
import re
from array import array
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataError, EmptyCorpus, OrdinalOutOfRange

DEFAULT_K1 = 0.9
DEFAULT_B = 0.4

INDEX_FORMAT = "ontoqe-bm25-index"
INDEX_FORMAT_VERSION = 1

_NON_ALNUM = re.compile(r"[\W_]+")


@lru_cache(maxsize=1)
def _porter():
    from nltk.stem import PorterStemmer

    return PorterStemmer()


def tokenize(text: str, stem: bool = False) -> list[str]:
    """Lowercase and split on every non-alphanumeric character.

    Alphanumeric means Unicode letters and digits, so accented and Greek
    characters stay inside tokens. No stopword removal.

    >>> tokenize("Crohn's Disease")
    ['crohn', 's', 'disease']
    """
    tokens = [t for t in _NON_ALNUM.split(text.lower()) if t]
    if stem:
        porter = _porter()
        tokens = [porter.stem(t, to_lowercase=False) for t in tokens]
    return tokens


@dataclass(frozen=True)
class ScoredHit:
    doc_id: str
    score: float
    rank: int


class InvertedIndex:
    """Immutable postings plus the collection statistics BM25 needs.

    ``postings[term]`` is a pair of parallel arrays ``(ordinals, tfs)``
    sorted by ascending document ordinal.
    """

    def __init__(self, postings, doc_lengths, doc_ids, k1=DEFAULT_K1, b=DEFAULT_B, stem=False):
        self.postings: dict[str, tuple[np.ndarray, np.ndarray]] = postings
        self.doc_lengths = np.asarray(doc_lengths, dtype=np.int64)
        self.doc_ids: list[str] = list(doc_ids)
        self.doc_count = len(self.doc_ids)
        self.avg_doc_len = float(self.doc_lengths.sum()) / self.doc_count if self.doc_count else 0.0
        self.k1 = float(k1)
        self.b = float(b)
        self.stem = stem
        self._ordinal = {d: i for i, d in enumerate(self.doc_ids)}
        # Per-document denominator term k1 * (1 - b + b * dl / avgdl).
        if self.doc_count:
            # All-empty corpora have avgdl 0; nothing can match, so any finite divisor works.
            avgdl = self.avg_doc_len or 1.0
            self._norm = self.k1 * (1.0 - self.b + self.b * self.doc_lengths / avgdl)
        else:
            self._norm = np.zeros(0)

    @property
    def vocab_size(self) -> int:
        return len(self.postings)

    def df(self, term: str) -> int:
        entry = self.postings.get(term)
        return 0 if entry is None else len(entry[0])

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def postings_list(self, term: str) -> list[tuple[int, int]]:
        entry = self.postings.get(term)
        if entry is None:
            return []
        return list(zip(entry[0].tolist(), entry[1].tolist()))

    def ordinal(self, doc_id: str) -> int:
        return self._ordinal[doc_id]

    def with_params(self, k1: float, b: float) -> "InvertedIndex":
        return InvertedIndex(self.postings, self.doc_lengths, self.doc_ids, k1=k1, b=b, stem=self.stem)

    def tokenize(self, text: str) -> list[str]:
        return tokenize(text, stem=self.stem)

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_FORMAT_VERSION,
            "params": {"k1": self.k1, "b": self.b, "stem": self.stem},
            "doc_ids": self.doc_ids,
            "doc_lengths": self.doc_lengths.tolist(),
            "postings": {
                t: [self.postings[t][0].tolist(), self.postings[t][1].tolist()]
                for t in sorted(self.postings)
            },
        }

    def checksum(self) -> str:
        """SHA-256 over the canonical serialization (independent of build order)."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        path = Path(path)
        data = json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False).encode("utf-8")
        if path.suffix == ".gz":
            data = gzip.compress(data, mtime=0)
        path.write_bytes(data)

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        path = Path(path)
        raw = path.read_bytes()
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        data = json.loads(raw)
        if data.get("format") != INDEX_FORMAT:
            raise DataError(f"{path}: not an index snapshot")
        if data.get("version") != INDEX_FORMAT_VERSION:
            raise DataError(f"{path}: unsupported index format version {data.get('version')}")
        postings = {
            t: (np.asarray(o, dtype=np.int64), np.asarray(f, dtype=np.int64))
            for t, (o, f) in data["postings"].items()
        }
        p = data["params"]
        return cls(postings, data["doc_lengths"], data["doc_ids"], k1=p["k1"], b=p["b"], stem=p["stem"])


def _count_chunk(args):
    texts, stem = args
    return [Counter(tokenize(t, stem=stem)) for t in texts]


def build_index(corpus: Corpus, k1: float = DEFAULT_K1, b: float = DEFAULT_B,
                stem: bool = False, jobs: int = 1) -> InvertedIndex:
    """Build an inverted index over ``title + " " + body`` of every document.

    With ``jobs > 1`` tokenization is spread over worker processes; the
    merged index is identical to the single-process one.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot index an empty corpus")
    texts = [doc.text for doc in corpus]
    if jobs > 1 and len(texts) > 1:
        size = math.ceil(len(texts) / jobs)
        chunks = [(texts[i:i + size], stem) for i in range(0, len(texts), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = [c for part in pool.map(_count_chunk, chunks) for c in part]
    else:
        counts = _count_chunk((texts, stem))

    ords: dict[str, array] = {}
    tfs: dict[str, array] = {}
    lengths = []
    for ordinal, counter in enumerate(counts):
        lengths.append(sum(counter.values()))
        for term, tf in counter.items():
            if term not in ords:
                ords[term] = array("q")
                tfs[term] = array("q")
            ords[term].append(ordinal)
            tfs[term].append(tf)
    postings = {
        t: (np.frombuffer(ords[t], dtype=np.int64).copy(), np.frombuffer(tfs[t], dtype=np.int64).copy())
        for t in ords
    }
    return InvertedIndex(postings, lengths, [d.doc_id for d in corpus], k1=k1, b=b, stem=stem)


def bm25_score(index: InvertedIndex, query_tokens: Sequence[str], ordinal: int) -> float:
    if not 0 <= ordinal < index.doc_count:
        raise OrdinalOutOfRange(f"ordinal {ordinal} outside [0, {index.doc_count})")
    parts = []
    for term, qtf in Counter(query_tokens).items():
        entry = index.postings.get(term)
        if entry is None:
            continue
        ords, tfs = entry
        pos = int(np.searchsorted(ords, ordinal))
        if pos == len(ords) or ords[pos] != ordinal:
            continue
        tf = float(tfs[pos])
        parts.append(qtf * (index.idf(term) * tf * (index.k1 + 1.0) / (tf + float(index._norm[ordinal]))))
    return math.fsum(parts)


def score_all(index: InvertedIndex, query_tokens: Iterable[str]) -> np.ndarray:
    """Dense score vector over all documents.

    Per-term contributions are added with Neumaier compensation so the sum
    does not depend on term order: documents whose scores are equal in
    exact arithmetic come out bit-identical and tie-break by doc_id.
    """
    scores = np.zeros(index.doc_count, dtype=np.float64)
    carry = np.zeros(index.doc_count, dtype=np.float64)
    k1p1 = index.k1 + 1.0
    for term, qtf in sorted(Counter(query_tokens).items()):
        entry = index.postings.get(term)
        if entry is None:
            continue
        ords, tfs = entry
        tf = tfs.astype(np.float64)
        x = qtf * (index.idf(term) * tf * k1p1 / (tf + index._norm[ords]))
        s = scores[ords]
        t = s + x
        carry[ords] += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        scores[ords] = t
    return scores + carry


def top_k(index: InvertedIndex, scores: np.ndarray, k: int) -> list[ScoredHit]:
    """Top-k positive scores, ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates = np.flatnonzero(scores > 0.0)
    if len(candidates) > k:
        # Keep everything tied with the k-th best so tie-breaking stays exact.
        kth = np.partition(scores[candidates], len(candidates) - k)[len(candidates) - k]
        candidates = candidates[scores[candidates] >= kth]
    ids = index.doc_ids
    ranked = sorted(candidates.tolist(), key=lambda o: (-scores[o], ids[o]))[:k]
    return [ScoredHit(ids[o], float(scores[o]), r) for r, o in enumerate(ranked, start=1)]


def search(index: InvertedIndex, query_text: str, k: int = 10) -> list[ScoredHit]:
    return search_tokens(index, index.tokenize(query_text), k)


def search_tokens(index: InvertedIndex, query_tokens: Sequence[str], k: int = 10) -> list[ScoredHit]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return top_k(index, score_all(index, query_tokens), k)
