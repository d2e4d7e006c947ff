import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontoqe.corpus import (
    Corpus,
    Document,
    Qrels,
    Query,
    load_corpus,
    load_dataset,
    load_qrels,
    load_queries,
    write_corpus,
    write_qrels,
    write_queries,
)
from ontoqe.errors import (
    BadHeader,
    DuplicateId,
    DuplicateJudgment,
    MalformedJson,
    MissingField,
    NonIntegerGrade,
)


def test_minimal_record(write_jsonl):
    path = write_jsonl("c.jsonl", [{"_id": "d1", "title": "", "text": "aspirin"}])
    corpus = load_corpus(path)
    assert len(corpus) == 1
    doc = corpus[0]
    assert (doc.doc_id, doc.title, doc.body) == ("d1", "", "aspirin")
    assert doc.text == " aspirin"


def test_empty_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("")
    assert len(load_corpus(path)) == 0


def test_order_and_count_preserved(write_jsonl):
    recs = [{"_id": f"d{i}", "title": f"t{i}", "text": f"body {i}", "extra": i} for i in range(50, 0, -1)]
    corpus = load_corpus(write_jsonl("c.jsonl", recs))
    assert [d.doc_id for d in corpus] == [r["_id"] for r in recs]


def test_missing_title_is_empty(write_jsonl):
    corpus = load_corpus(write_jsonl("c.jsonl", [{"_id": "d1", "text": "x"}]))
    assert corpus[0].title == ""


@pytest.mark.parametrize("record, field", [({"title": "t", "text": "x"}, "_id"), ({"_id": "d1", "title": "t"}, "text")])
def test_missing_field(write_jsonl, record, field):
    path = write_jsonl("c.jsonl", [{"_id": "d0", "text": "ok"}, record])
    with pytest.raises(MissingField) as err:
        load_corpus(path)
    assert err.value.line_no == 2
    assert err.value.field == field


def test_duplicate_id(write_jsonl):
    path = write_jsonl("c.jsonl", [{"_id": "d1", "text": "a"}, {"_id": "d1", "text": "b"}])
    with pytest.raises(DuplicateId, match=":2:"):
        load_corpus(path)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"_id": "d1", "text": "a"}\n{"_id": "d2", "text": \n')
    with pytest.raises(MalformedJson) as err:
        load_corpus(path)
    assert err.value.line_no == 2


def test_unicode_kept_verbatim(write_jsonl):
    corpus = load_corpus(write_jsonl("c.jsonl", [{"_id": "d1", "title": "Sjögren", "text": "β-blockers  ∟"}]))
    assert corpus[0].title == "Sjögren"
    assert corpus[0].body == "β-blockers  ∟"


def test_load_queries(write_jsonl):
    path = write_jsonl("q.jsonl", [{"_id": "q1", "text": "BPH"}])
    assert load_queries(path) == [Query("q1", "BPH")]
    with pytest.raises(DuplicateId):
        load_queries(write_jsonl("q2.jsonl", [{"_id": "q1", "text": "a"}, {"_id": "q1", "text": "b"}]))


def _qrels_file(tmp_path, body, header="query-id\tcorpus-id\tscore\n"):
    path = tmp_path / "test.tsv"
    path.write_text(header + body)
    return path


def test_qrels_row(tmp_path):
    qrels = load_qrels(_qrels_file(tmp_path, "q1\td1\t2\n"))
    assert qrels.grade("q1", "d1") == 2
    assert qrels.grade("q1", "missing") == 0


def test_qrels_header_only(tmp_path):
    assert len(load_qrels(_qrels_file(tmp_path, ""))) == 0


@pytest.mark.parametrize("row", ["q1\td1\t-1\n", "q1\td1\t1.5\n", "q1\td1\tx\n"])
def test_qrels_bad_grade(tmp_path, row):
    with pytest.raises(NonIntegerGrade):
        load_qrels(_qrels_file(tmp_path, row))


def test_qrels_bad_header(tmp_path):
    with pytest.raises(BadHeader):
        load_qrels(_qrels_file(tmp_path, "q1\td1\t1\n", header="qid\tdocid\trel\n"))


def test_qrels_duplicate(tmp_path):
    with pytest.raises(DuplicateJudgment):
        load_qrels(_qrels_file(tmp_path, "q1\td1\t1\nq1\td1\t2\n"))


def test_fixture_dataset(fixture_dir):
    ds = load_dataset(fixture_dir)
    assert len(ds.corpus) == 60
    assert len(ds.queries) == 20
    assert ds.qrels is not None and len(ds.qrels.query_ids()) == 20


def test_corpus_is_immutable_and_shareable():
    corpus = Corpus([Document("a", "", "x")])
    with pytest.raises(AttributeError):
        corpus[0].body = "y"
    with pytest.raises(DuplicateId):
        Corpus([Document("a", "", "x"), Document("a", "", "y")])


_text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=30)
_ident = st.text(st.characters(blacklist_categories=("Cs", "Zs", "Cc")), min_size=1, max_size=8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_ident, _text, _text), max_size=15, unique_by=lambda t: t[0]))
def test_corpus_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "corpus.jsonl"
    corpus = Corpus(Document(i, t, b) for i, t, b in rows)
    write_corpus(corpus, path)
    assert load_corpus(path) == corpus


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.tuples(st.from_regex(r"[A-Za-z0-9_-]{1,6}", fullmatch=True),
                                 st.from_regex(r"[A-Za-z0-9_.-]{1,6}", fullmatch=True)),
                       st.integers(0, 5), max_size=20))
def test_qrels_round_trip(tmp_path_factory, judgments):
    path = tmp_path_factory.mktemp("rt") / "test.tsv"
    write_qrels(Qrels(judgments), path)
    assert load_qrels(path).judgments == judgments


def test_queries_round_trip(tmp_path):
    queries = [Query("q1", "what causes death from Covid-19?"), Query("q2", "Crohn’s “disease”")]
    write_queries(queries, tmp_path / "q.jsonl")
    assert load_queries(tmp_path / "q.jsonl") == queries
    assert json.loads((tmp_path / "q.jsonl").read_text().splitlines()[1])["text"] == "Crohn’s “disease”"
