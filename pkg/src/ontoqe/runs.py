"""TREC run files: ``qid Q0 docid rank score tag``."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError


@dataclass
class RunResult:
    """Ranked (doc_id, score) lists per query, in canonical query order."""

    tag: str = "run"
    rankings: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def add(self, query_id: str, hits) -> None:
        seen = set()
        ranked = []
        for doc_id, score in hits:
            if doc_id in seen:
                raise DataError(f"duplicate document {doc_id!r} in ranking for query {query_id!r}")
            seen.add(doc_id)
            ranked.append((doc_id, float(score)))
        self.rankings[query_id] = ranked

    def doc_ids(self, query_id: str) -> list[str]:
        return [d for d, _ in self.rankings.get(query_id, ())]

    def __len__(self) -> int:
        return len(self.rankings)

    def lines(self):
        for qid, ranked in self.rankings.items():
            for rank, (doc_id, score) in enumerate(ranked, start=1):
                yield f"{qid} Q0 {doc_id} {rank} {score:.6f} {self.tag}\n"

    def to_text(self) -> str:
        return "".join(self.lines())


def write_run(run: RunResult, path: str | Path) -> str:
    """Write the run and return the SHA-256 of the bytes written."""
    data = run.to_text().encode("utf-8")
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_run(path: str | Path) -> RunResult:
    """Parse a run file; rankings follow the rank column."""
    path = Path(path)
    rows: dict[str, list[tuple[int, str, float]]] = {}
    tag = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise DataError(f"{path}:{line_no}: expected 6 columns, got {len(parts)}")
            qid, _, doc_id, rank, score, run_tag = parts
            try:
                rows.setdefault(qid, []).append((int(rank), doc_id, float(score)))
            except ValueError:
                raise DataError(f"{path}:{line_no}: bad rank or score") from None
            tag = tag or run_tag
    run = RunResult(tag or "run")
    for qid, entries in rows.items():
        entries.sort(key=lambda e: (e[0], -e[2], e[1]))
        run.add(qid, [(d, s) for _, d, s in entries])
    return run
