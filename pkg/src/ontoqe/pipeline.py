"""End-to-end query expansion and batch retrieval.

``expand`` runs term extraction, concept linking, definition and
neighborhood retrieval, serialization and pseudo-document generation,
then composes the weighted query. Any per-query failure falls back to the
unexpanded query so a batch always completes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .context import SerializedContext, serialize_definitions, serialize_relations
from .corpus import Query
from .errors import ConfigError, InvalidAlpha, OntoQEError
from .index import DEFAULT_B, DEFAULT_K1, InvertedIndex, search_tokens
from .llm import LLMGate, PseudoDocument, extract_terms, generate_pseudo_document, paraphrase_query
from .ontology import (
    DEFAULT_MAX_EDGES,
    OntologyBackend,
    fetch_concept,
    fetch_neighborhood,
    link_concept,
    prune_edges,
)
from .runs import RunResult

log = logging.getLogger(__name__)

MODES = ("full", "no_llm", "definitions_only", "relations_only", "plain_bm25")
LLM_ALPHA = 5
NO_LLM_ALPHA = 50


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "full"
    alpha: int | None = None
    cot: bool = False
    edge_cap: int = DEFAULT_MAX_EDGES
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    depth: int = 1000
    jobs: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha is not None and self.alpha < 1:
            raise InvalidAlpha(f"alpha must be >= 1, got {self.alpha}")

    @property
    def effective_alpha(self) -> int:
        if self.alpha is not None:
            return self.alpha
        return NO_LLM_ALPHA if self.mode == "no_llm" else LLM_ALPHA


@dataclass(frozen=True)
class Backends:
    llm: LLMGate | None = None
    ontology: OntologyBackend | None = None


@dataclass(frozen=True)
class ExpandedQuery:
    original: Query
    alpha: int
    composed_text: str
    pseudo_doc: PseudoDocument | None = None
    terms: tuple[str, ...] = ()
    cuis: tuple[str, ...] = ()
    context: SerializedContext = field(default_factory=SerializedContext)
    fallback: str | None = None


def compose_expanded_query(query: str, pseudo_doc: str | None, alpha: int) -> str:
    """``alpha`` copies of the query followed by the pseudo-document, space separated."""
    if alpha < 1:
        raise InvalidAlpha(f"alpha must be >= 1, got {alpha}")
    parts = [query] * alpha
    if pseudo_doc is not None:
        parts.append(pseudo_doc)
    return " ".join(parts)


def build_context(terms: Sequence[str], ontology: OntologyBackend, mode: str = "full",
                  edge_cap: int = DEFAULT_MAX_EDGES) -> tuple[tuple[str, ...], SerializedContext]:
    """Link terms and serialize their definitions and pruned graphs.

    Concepts keep term order; a CUI reached by two terms is used once.
    """
    linked = []
    for term in terms:
        if not term.strip():
            continue
        hit = link_concept(term, ontology)
        if hit is not None and hit[0] not in {c for c, _ in linked}:
            linked.append(hit)
    definitions = relations = ""
    if mode != "relations_only":
        definitions = serialize_definitions(fetch_concept(c, n, ontology) for c, n in linked)
    if mode != "definitions_only":
        graphs = [prune_edges(fetch_neighborhood(c, ontology, edge_cap, name=n)) for c, n in linked]
        relations = serialize_relations(graphs)
    return tuple(c for c, _ in linked), SerializedContext(definitions, relations)


def expand(query: Query, config: PipelineConfig, backends: Backends) -> ExpandedQuery:
    alpha = config.effective_alpha
    plain = ExpandedQuery(query, alpha, query.text)
    if config.mode == "plain_bm25":
        return plain
    try:
        terms = tuple(extract_terms(query.text, backends.llm))
        if not terms:
            return replace(plain, fallback="no terms")
        cuis, context = build_context(terms, backends.ontology, config.mode, config.edge_cap)
        if not cuis:
            return replace(plain, terms=terms, fallback="no linked concepts")
        if config.mode == "no_llm":
            keywords = "\n".join(t for t in (context.definitions_text, context.relations_text) if t)
            if not keywords:
                return replace(plain, terms=terms, cuis=cuis, context=context, fallback="empty context")
            return ExpandedQuery(query, alpha, compose_expanded_query(query.text, keywords, alpha),
                                 terms=terms, cuis=cuis, context=context)
        pseudo = generate_pseudo_document(query.text, context, backends.llm, cot=config.cot)
    except OntoQEError as exc:
        log.warning("query %s fell back to plain BM25: %s", query.query_id, exc)
        return replace(plain, fallback=f"{type(exc).__name__}: {exc}")
    return ExpandedQuery(query, alpha, compose_expanded_query(query.text, pseudo.text, alpha),
                         pseudo_doc=pseudo, terms=terms, cuis=cuis, context=context)


@dataclass
class BatchResult:
    run: RunResult
    expansions: list[ExpandedQuery]

    @property
    def failures(self) -> list[ExpandedQuery]:
        """Queries that fell back because of an error (not an empty term set)."""
        return [e for e in self.expansions
                if e.fallback and e.fallback not in ("no terms", "no linked concepts", "empty context")]


def run_batch(queries: Sequence[Query], index: InvertedIndex, config: PipelineConfig,
              backends: Backends) -> BatchResult:
    """Expand and retrieve every query; output keeps input query order."""
    if config.mode != "plain_bm25" and (backends.llm is None or backends.ontology is None):
        raise ConfigError(f"mode {config.mode!r} needs both an LLM and an ontology backend")
    if (config.k1, config.b) != (index.k1, index.b):
        index = index.with_params(config.k1, config.b)

    def one(query: Query):
        expanded = expand(query, config, backends)
        hits = search_tokens(index, index.tokenize(expanded.composed_text), config.depth)
        return expanded, hits

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(one, queries))
    else:
        results = [one(q) for q in queries]
    run = RunResult(tag=config.mode)
    for query, (_, hits) in zip(queries, results):
        run.add(query.query_id, [(h.doc_id, h.score) for h in hits])
    return BatchResult(run, [e for e, _ in results])


def perturb_queries(queries: Sequence[Query], gate: LLMGate, strict: bool = False):
    """Paraphrase each query. Returns ``(paraphrased, failed_ids)``.

    A failed paraphrase keeps the original text unless ``strict``.
    """
    out, failed = [], []
    for q in queries:
        try:
            out.append(Query(q.query_id, paraphrase_query(q.text, gate)))
        except OntoQEError as exc:
            if strict:
                raise
            log.warning("paraphrase failed for %s: %s", q.query_id, exc)
            failed.append(q.query_id)
            out.append(q)
    return out, failed
