"""Concept, definition and relation-graph types plus edge pruning."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import InvalidCui

_CUI = re.compile(r"C[0-9]{7}")

# Vocabularies definitions are drawn from, in display order.
DEFINITION_SOURCES = ("MSH", "SNOMEDCT_US", "NCI", "CSP")


class Cui(str):
    """UMLS concept identifier: ``C`` followed by seven digits."""

    def __new__(cls, value: str):
        if isinstance(value, Cui):
            return value
        if not isinstance(value, str) or not _CUI.fullmatch(value):
            raise InvalidCui(f"not a CUI: {value!r}")
        return super().__new__(cls, value)


@dataclass(frozen=True)
class DefinitionEntry:
    text: str
    source: str

    def __post_init__(self):
        if self.source not in DEFINITION_SOURCES:
            raise ValueError(f"definition source must be one of {DEFINITION_SOURCES}, got {self.source!r}")


@dataclass(frozen=True)
class Concept:
    cui: Cui
    preferred_name: str
    definitions: tuple[DefinitionEntry, ...] = ()


@dataclass(frozen=True)
class RelationLabel:
    code: str
    qualifier: str | None = None

    @property
    def canonical(self) -> str:
        return f"{self.code}:{self.qualifier}" if self.qualifier else self.code

    @classmethod
    def parse(cls, text: str) -> "RelationLabel":
        code, _, qualifier = text.partition(":")
        return cls(code.strip(), qualifier.strip() or None)

    def __str__(self) -> str:
        return self.canonical


@dataclass(frozen=True)
class Edge:
    source: Cui
    target: Cui
    label: RelationLabel


@dataclass(frozen=True)
class SemanticGraph:
    """One-hop labelled graph around ``center``.

    ``nodes`` maps CUI to display name and always contains the center.
    """

    center: Cui
    nodes: Mapping[Cui, str]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.center not in self.nodes:
            raise ValueError("center must be a node of the graph")
        for e in self.edges:
            if e.source not in self.nodes or e.target not in self.nodes:
                raise ValueError(f"edge endpoint missing from nodes: {e}")

    @property
    def center_name(self) -> str:
        return self.nodes[self.center]

    @classmethod
    def single(cls, center: Cui, name: str) -> "SemanticGraph":
        return cls(center, {center: name}, ())


WHITELIST = frozenset(
    RelationLabel.parse(s) for s in ("CHD", "PAR", "SY", "RO", "RO:has_associated_morphology")
)


@dataclass(frozen=True)
class RelationFilter:
    whitelist: frozenset = field(default=WHITELIST)

    def allows(self, label: RelationLabel) -> bool:
        return label in self.whitelist


DEFAULT_FILTER = RelationFilter()


def prune_edges(graph: SemanticGraph, relation_filter: RelationFilter = DEFAULT_FILTER) -> SemanticGraph:
    """Keep whitelisted edges; drop nodes left without edges (the center stays).

    Labels are compared in canonical form, so ``RO`` with an unlisted
    qualifier is not the same label as bare ``RO``.
    """
    kept = tuple(e for e in graph.edges if relation_filter.allows(e.label))
    touched = {graph.center}
    for e in kept:
        touched.add(e.source)
        touched.add(e.target)
    nodes = {c: n for c, n in graph.nodes.items() if c in touched}
    return SemanticGraph(graph.center, nodes, kept)


def filter_definitions(entries: Iterable[tuple[str, str]]) -> list[DefinitionEntry]:
    """Keep (text, source) pairs from the four definition vocabularies, in order."""
    return [DefinitionEntry(text, src) for text, src in entries if src in DEFINITION_SOURCES]
