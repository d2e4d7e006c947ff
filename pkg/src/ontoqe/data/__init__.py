"""Bundled fixture dataset (20 queries, 60 documents, ontology snapshot)."""

from pathlib import Path


def fixture_path() -> Path:
    return Path(__file__).parent / "fixture"
