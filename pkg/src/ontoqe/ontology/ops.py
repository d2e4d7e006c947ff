"""Concept linking, definition retrieval and neighborhood construction."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .backends import OntologyBackend
from .model import Concept, Cui, DefinitionEntry, Edge, SemanticGraph, filter_definitions

DEFAULT_MAX_EDGES = 50


def link_concept(term: str, backend: OntologyBackend) -> tuple[Cui, str] | None:
    """Exact-match ``term`` and return the top hit, or None when nothing matches."""
    term = term.strip()
    if not term:
        raise ValueError("cannot link an empty term")
    hits = backend.search_exact(term)
    return hits[0] if hits else None


def fetch_definitions(cui: Cui, backend: OntologyBackend) -> list[DefinitionEntry]:
    return filter_definitions(backend.raw_definitions(Cui(cui)))


def fetch_neighborhood(cui: Cui, backend: OntologyBackend, max_edges: int = DEFAULT_MAX_EDGES,
                       name: str | None = None) -> SemanticGraph:
    """Unpruned one-hop graph, at most ``max_edges`` edges in backend order."""
    cui = Cui(cui)
    center_name = name if name is not None else backend.concept_name(cui)
    nodes = {cui: center_name}
    edges = []
    for target, target_name, label in backend.raw_relations(cui, max_edges)[:max_edges]:
        nodes.setdefault(target, target_name)
        edges.append(Edge(cui, target, label))
    return SemanticGraph(cui, nodes, tuple(edges))


def fetch_concept(cui: Cui, name: str, backend: OntologyBackend) -> Concept:
    return Concept(Cui(cui), name, tuple(fetch_definitions(cui, backend)))


def build_snapshot(terms: Iterable[str], backend: OntologyBackend,
                   max_edges: int = DEFAULT_MAX_EDGES) -> list[dict]:
    """Materialize snapshot records for every linkable term.

    Each linked term is stored as an alias of its concept so the snapshot
    resolves the same terms offline.
    """
    records: dict[str, dict] = {}
    for term in terms:
        term = term.strip()
        if not term:
            continue
        hit = link_concept(term, backend)
        if hit is None:
            continue
        cui, name = hit
        rec = records.get(cui)
        if rec is None:
            graph = fetch_neighborhood(cui, backend, max_edges, name=name)
            rec = {
                "cui": str(cui),
                "name": name,
                "aliases": [],
                "definitions": [{"text": d.text, "source": d.source}
                                for d in fetch_definitions(cui, backend)],
                "relations": [{"to": str(e.target), "to_name": graph.nodes[e.target],
                               "label": e.label.canonical} for e in graph.edges],
            }
            records[cui] = rec
        if term != name and term not in rec["aliases"]:
            rec["aliases"].append(term)
    return list(records.values())


def write_snapshot(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
