"""Text serialization of concept definitions and pruned relation graphs.

Output is byte-stable: the same concepts and graphs always render to the
same string, which the golden tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import UnknownLabel
from .ontology.model import Concept, RelationLabel, SemanticGraph

SOURCE_DISPLAY_NAMES = {
    "MSH": "MeSH",
    "SNOMEDCT_US": "SNOMED CT, US Edition",
    "NCI": "National Cancer Institute (NCI) Thesaurus",
    "CSP": "CRISP Thesaurus",
}

RELATION_PHRASES = {
    RelationLabel("PAR"): "has parent",
    RelationLabel("CHD"): "has child",
    RelationLabel("SY"): "is synonymous with",
    RelationLabel("RO"): "is related to",
    RelationLabel("RO", "has_associated_morphology"): "has associated morphology",
}

EDGE_PREFIX = "    ∟ "


@dataclass(frozen=True)
class SerializedContext:
    definitions_text: str = ""
    relations_text: str = ""


def serialize_concept_definitions(concept: Concept) -> str:
    parts = [f"{d.text} (Source: {SOURCE_DISPLAY_NAMES[d.source]})" for d in concept.definitions]
    return f"{concept.preferred_name}: " + "; ".join(parts) + ";"


def serialize_definitions(concepts: Iterable[Concept]) -> str:
    """One line per concept with at least one definition, joined by newlines."""
    return "\n".join(serialize_concept_definitions(c) for c in concepts if c.definitions)


def serialize_graph(graph: SemanticGraph) -> str:
    lines = [f"{graph.center_name}:"]
    for edge in graph.edges:
        phrase = RELATION_PHRASES.get(edge.label)
        if phrase is None:
            raise UnknownLabel(f"relation {edge.label.canonical!r} is not serializable; was the graph pruned?")
        lines.append(f"{EDGE_PREFIX}{phrase}: {graph.nodes[edge.target]}")
    return "\n".join(lines)


def serialize_relations(graphs: Iterable[SemanticGraph]) -> str:
    return "\n".join(serialize_graph(g) for g in graphs if g.edges)


def serialize_context(concepts: Iterable[Concept], graphs: Iterable[SemanticGraph]) -> SerializedContext:
    return SerializedContext(serialize_definitions(concepts), serialize_relations(graphs))
