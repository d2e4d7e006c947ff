import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ontoqe.data import fixture_path  # noqa: E402
from ontoqe.ontology import SnapshotBackend  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return fixture_path()


@pytest.fixture(scope="session")
def snapshot(fixture_dir) -> SnapshotBackend:
    return SnapshotBackend.load(fixture_dir / "snapshot.jsonl")


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(name, records):
        path = tmp_path / name
        path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
        return path

    return _write


def read_golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def snapshot_lexicon(snapshot: SnapshotBackend) -> list[str]:
    return [s for rec in snapshot.records() for s in [rec["name"], *rec.get("aliases", ())]]


@pytest.fixture
def mock_backends(snapshot):
    from ontoqe.llm import LLMGate, MockBackend
    from ontoqe.pipeline import Backends

    return Backends(LLMGate(MockBackend("canned", snapshot_lexicon(snapshot)), "fixture-mock"), snapshot)


@pytest.fixture(scope="session")
def fixture_dataset(fixture_dir):
    from ontoqe.corpus import load_dataset

    return load_dataset(fixture_dir)


@pytest.fixture(scope="session")
def fixture_index(fixture_dataset):
    from ontoqe.index import build_index

    return build_index(fixture_dataset.corpus)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
