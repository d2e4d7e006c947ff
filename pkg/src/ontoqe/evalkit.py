"""Retrieval metrics (NDCG@k, mAP@k, Recall@k) and report generation.

Conventions follow trec_eval's ``ndcg_cut``, ``map_cut`` and ``recall``:

* NDCG gains are linear in the grade; the ideal ranking is built from all
  judged grades, not just the retrieved ones.
* AP@k divides by the total number of relevant documents R, even when
  R > k. On collections with hundreds of relevant documents per query
  this makes mAP@10 tiny.
* Relevant means grade > 0; unjudged documents count as non-relevant.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Qrels
from .errors import EmptyIntersection
from .runs import RunResult

log = logging.getLogger(__name__)

METRICS = ("ndcg", "map", "recall")


def _gain(grade: int, exponential: bool) -> float:
    return float(2 ** grade - 1) if exponential else float(grade)


def dcg(grades: Sequence[int], k: int, exponential: bool = False) -> float:
    return sum(_gain(g, exponential) / math.log2(i + 2) for i, g in enumerate(grades[:k]) if g > 0)


def ndcg_at_k(ranking: Sequence[str], qrels: Mapping[str, int], k: int = 10,
              exponential: bool = False) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = dcg(sorted(qrels.values(), reverse=True), k, exponential)
    if ideal == 0.0:
        return 0.0
    return dcg([qrels.get(d, 0) for d in ranking], k, exponential) / ideal


def map_at_k(ranking: Sequence[str], qrels: Mapping[str, int], k: int = 10) -> float:
    """Average precision cut at k, normalized by the total relevant count."""
    if k < 1:
        raise ValueError("k must be >= 1")
    total_relevant = sum(1 for g in qrels.values() if g > 0)
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for i, doc_id in enumerate(ranking[:k], start=1):
        if qrels.get(doc_id, 0) > 0:
            hits += 1
            precision_sum += hits / i
    return precision_sum / total_relevant


def recall_at_k(ranking: Sequence[str], qrels: Mapping[str, int], k: int = 10) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    total_relevant = sum(1 for g in qrels.values() if g > 0)
    if total_relevant == 0:
        return 0.0
    return sum(1 for d in ranking[:k] if qrels.get(d, 0) > 0) / total_relevant


@dataclass
class MetricReport:
    k: int
    per_query: dict[str, dict[str, float]] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    skipped: int = 0

    @property
    def query_count(self) -> int:
        return len(self.per_query)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "queries": self.query_count,
            "skipped": self.skipped,
            "means": {f"{m}@{self.k}": v for m, v in self.means.items()},
            "per_query": self.per_query,
        }

    def format_text(self) -> str:
        lines = [f"queries evaluated: {self.query_count} (skipped {self.skipped} unjudged)"]
        for m in METRICS:
            lines.append(f"{m.upper() + '@' + str(self.k):<12}{self.means[m]:.4f}")
        return "\n".join(lines)


def evaluate(run: RunResult, qrels: Qrels, k: int = 10, exponential: bool = False) -> MetricReport:
    """Score every judged query; judged queries missing from the run score 0."""
    judged = qrels.by_query()
    shared = judged.keys() & run.rankings.keys()
    if not shared:
        raise EmptyIntersection("run and qrels share no query ids")
    skipped = len(run.rankings.keys() - judged.keys())
    if skipped:
        log.warning("%d run queries have no judgments and were skipped", skipped)
    report = MetricReport(k=k, skipped=skipped)
    for qid, grades in judged.items():
        ranking = run.doc_ids(qid)
        report.per_query[qid] = {
            "ndcg": ndcg_at_k(ranking, grades, k, exponential),
            "map": map_at_k(ranking, grades, k),
            "recall": recall_at_k(ranking, grades, k),
        }
    n = len(report.per_query)
    # fsum is exactly rounded, so means do not depend on query order.
    report.means = {m: math.fsum(v[m] for v in report.per_query.values()) / n for m in METRICS}
    return report


ABLATION_ROWS = (
    ("plain_bm25", "BM25 Baseline"),
    ("no_llm", "w/o LLM"),
    ("definitions_only", "Definitions Only"),
    ("relations_only", "Relations Only"),
    ("full", "Definitions + Relations"),
)


@dataclass
class AblationTable:
    k: int
    rows: list[tuple[str, str, MetricReport]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "rows": [
                {"mode": mode, "configuration": label,
                 **{f"{m}@{self.k}": round(r.means[m], 6) for m in METRICS}}
                for mode, label, r in self.rows
            ],
        }

    def format_text(self) -> str:
        k = self.k
        header = f"{'Configuration':<26}{'NDCG@' + str(k):>10}{'mAP@' + str(k):>10}{'Recall@' + str(k):>11}"
        lines = [header, "-" * len(header)]
        for _, label, r in self.rows:
            lines.append(f"{label:<26}{r.means['ndcg']:>10.3f}{r.means['map']:>10.3f}{r.means['recall']:>11.3f}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def ablation_report(dataset, index, backends, config=None, k: int = 10,
                    exponential: bool = False) -> AblationTable:
    """Run every ablation mode over ``dataset`` and tabulate the metrics."""
    from dataclasses import replace

    from .pipeline import PipelineConfig, run_batch

    base = config or PipelineConfig()
    table = AblationTable(k=k)
    for mode, label in ABLATION_ROWS:
        # An unset alpha lets each mode take its own default (50 without the LLM).
        batch = run_batch(dataset.queries, index, replace(base, mode=mode), backends)
        table.rows.append((mode, label, evaluate(batch.run, dataset.qrels, k, exponential)))
    return table
