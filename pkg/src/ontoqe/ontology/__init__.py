from .backends import OntologyBackend, SnapshotBackend, UmlsRestBackend
from .model import (
    DEFAULT_FILTER,
    DEFINITION_SOURCES,
    WHITELIST,
    Concept,
    Cui,
    DefinitionEntry,
    Edge,
    RelationFilter,
    RelationLabel,
    SemanticGraph,
    prune_edges,
)
from .ops import (
    DEFAULT_MAX_EDGES,
    build_snapshot,
    fetch_concept,
    fetch_definitions,
    fetch_neighborhood,
    link_concept,
    write_snapshot,
)

__all__ = [
    "Concept", "Cui", "DefinitionEntry", "Edge", "RelationFilter", "RelationLabel",
    "SemanticGraph", "OntologyBackend", "SnapshotBackend", "UmlsRestBackend",
    "DEFAULT_FILTER", "DEFAULT_MAX_EDGES", "DEFINITION_SOURCES", "WHITELIST",
    "build_snapshot", "fetch_concept", "fetch_definitions", "fetch_neighborhood",
    "link_concept", "prune_edges", "write_snapshot",
]
