"""Ontology-guided biomedical query expansion over an embedded BM25 engine."""

__version__ = "0.1.0"
