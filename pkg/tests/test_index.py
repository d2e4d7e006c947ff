import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bm25_scores, ranked
from ontoqe.corpus import Corpus, Document
from ontoqe.errors import EmptyCorpus, OrdinalOutOfRange
from ontoqe.index import InvertedIndex, bm25_score, build_index, search, search_tokens, tokenize

THREE_DOCS = ["a b b c", "b c d e f", "a c c"]
# Frozen from the brute-force oracle before the engine existed.
FROZEN = {
    ("b",): [0.615866824528895, 0.44874718370195854, 0.0],
    ("a", "c", "c"): [0.7370664144947807, 0.25498456883074655, 0.854526496428681],
}


def make_corpus(texts):
    return Corpus(Document(f"d{i:04d}", "", t) for i, t in enumerate(texts))


@pytest.mark.parametrize("text, tokens", [
    ("Crohn's Disease", ["crohn", "s", "disease"]),
    ("", []),
    ("COVID-19 vaccine!", ["covid", "19", "vaccine"]),
    ("snake_case  tabs\tand\nnewlines", ["snake", "case", "tabs", "and", "newlines"]),
    ("Sjögren β-blocker", ["sjögren", "β", "blocker"]),
])
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


def test_tokenize_stemmed():
    assert tokenize("Running treatments", stem=True) == ["run", "treatment"]


@given(st.text())
def test_tokens_are_clean(text):
    for tok in tokenize(text):
        assert tok and tok == tok.lower() and not any(ch.isspace() for ch in tok)


def test_build_two_docs():
    index = build_index(Corpus([Document("x", "", "a b"), Document("y", "", "b c")]))
    assert index.postings_list("a") == [(0, 1)]
    assert index.postings_list("b") == [(0, 1), (1, 1)]
    assert index.postings_list("c") == [(1, 1)]
    assert index.avg_doc_len == 2


def test_build_single_doc():
    index = build_index(make_corpus(["x x x"]))
    assert index.postings_list("x") == [(0, 3)]
    assert list(index.doc_lengths) == [3]


def test_build_empty():
    with pytest.raises(EmptyCorpus):
        build_index(Corpus([]))


def test_title_is_indexed():
    index = build_index(Corpus([Document("d1", "Aspirin", "pain relief")]))
    assert index.df("aspirin") == 1
    assert list(index.doc_lengths) == [3]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=12), min_size=1, max_size=12))
def test_index_invariants(docs):
    index = build_index(make_corpus([" ".join(d) for d in docs]))
    assert index.doc_count == len(docs)
    assert set(index.postings) == {t for d in docs for t in d}
    for term in index.postings:
        plist = index.postings_list(term)
        assert all(tf >= 1 for _, tf in plist)
        assert sum(tf for _, tf in plist) == sum(d.count(term) for d in docs)
    assert index.avg_doc_len == pytest.approx(sum(map(len, docs)) / len(docs))


@pytest.mark.parametrize("query", list(FROZEN))
def test_three_doc_frozen_scores(query):
    index = build_index(make_corpus(THREE_DOCS))
    for ordinal, expected in enumerate(FROZEN[query]):
        assert bm25_score(index, list(query), ordinal) == pytest.approx(expected, abs=1e-9)


def test_empty_and_absent_queries():
    index = build_index(make_corpus(THREE_DOCS))
    assert all(bm25_score(index, [], o) == 0.0 for o in range(3))
    assert bm25_score(index, ["zzz"], 0) == 0.0
    assert bm25_score(index, ["zzz", "b"], 0) == bm25_score(index, ["b"], 0)
    assert search(index, "zzz", 10) == []


def test_ordinal_out_of_range():
    index = build_index(make_corpus(THREE_DOCS))
    with pytest.raises(OrdinalOutOfRange):
        bm25_score(index, ["b"], 3)
    with pytest.raises(OrdinalOutOfRange):
        bm25_score(index, ["b"], -1)


def test_k_larger_than_corpus():
    index = build_index(make_corpus(THREE_DOCS))
    hits = search(index, "b", 100)
    assert [h.doc_id for h in hits] == ["d0000", "d0001"]
    assert [h.rank for h in hits] == [1, 2]


def test_ties_by_doc_id():
    corpus = Corpus([Document("z", "", "same text"), Document("m", "", "same text"), Document("a", "", "same text")])
    hits = search(build_index(corpus), "same", 2)
    assert [h.doc_id for h in hits] == ["a", "m"]
    assert hits[0].score == hits[1].score


def test_search_rejects_bad_k():
    with pytest.raises(ValueError):
        search(build_index(make_corpus(THREE_DOCS)), "b", 0)


def test_repeated_query_tokens_add_up():
    index = build_index(make_corpus(THREE_DOCS))
    once = bm25_score(index, ["b"], 0)
    assert bm25_score(index, ["b"] * 5, 0) == pytest.approx(5 * once, abs=1e-12)


def _oracle_check(docs, query, k):
    index = build_index(make_corpus([" ".join(d) for d in docs]))
    ids = [f"d{i:04d}" for i in range(len(docs))]
    expected = ranked(ids, bm25_scores(docs, query), k)
    hits = search_tokens(index, query, k)
    assert [h.doc_id for h in hits] == [d for d, _ in expected]
    for hit, (_, score) in zip(hits, expected):
        assert abs(hit.score - score) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.lists(st.sampled_from([f"t{i}" for i in range(15)]), max_size=20), min_size=1, max_size=30),
    st.lists(st.sampled_from([f"t{i}" for i in range(18)]), max_size=8),
    st.integers(1, 40),
)
def test_search_matches_oracle(docs, query, k):
    _oracle_check(docs, query, k)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from("abcde"), max_size=10),
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=10),
    st.sampled_from("abcde"),
    st.integers(1, 3),
)
def test_adding_query_term_never_lowers_score(doc, sibling, term, qtf):
    # The sibling loses a padding token so the total length, and thus avg_doc_len, stays fixed.
    before = [doc, ["pad"] + sibling]
    after = [doc + [term], sibling]
    query = [term] * qtf
    assert bm25_scores(after, query)[0] >= bm25_scores(before, query)[0]
    idx_before = build_index(make_corpus([" ".join(d) for d in before]))
    idx_after = build_index(make_corpus([" ".join(d) for d in after]))
    assert idx_before.avg_doc_len == idx_after.avg_doc_len
    assert bm25_score(idx_after, query, 0) >= bm25_score(idx_before, query, 0)


def test_deterministic_across_jobs():
    rng = random.Random(7)
    texts = [" ".join(rng.choice("abcdefghij") for _ in range(rng.randint(1, 30))) for _ in range(300)]
    serial = build_index(make_corpus(texts))
    parallel = build_index(make_corpus(texts), jobs=3)
    assert serial.checksum() == parallel.checksum()
    for q in ["a b", "c c d", "j"]:
        assert search(serial, q, 50) == search(parallel, q, 50)
        assert search(serial, q, 50) == search(serial, q, 50)


@pytest.mark.parametrize("name", ["idx.json", "idx.json.gz"])
def test_save_load_round_trip(tmp_path, name):
    index = build_index(make_corpus(THREE_DOCS), k1=1.2, b=0.75)
    index.save(tmp_path / name)
    loaded = InvertedIndex.load(tmp_path / name)
    assert loaded.checksum() == index.checksum()
    assert (loaded.k1, loaded.b) == (1.2, 0.75)
    assert search(loaded, "a c", 3) == search(index, "a c", 3)


def test_with_params_changes_scores():
    index = build_index(make_corpus(THREE_DOCS))
    tuned = index.with_params(1.2, 0.75)
    expected = bm25_scores([t.split() for t in THREE_DOCS], ["b"], k1=1.2, b=0.75)
    assert bm25_score(tuned, ["b"], 0) == pytest.approx(expected[0], abs=1e-9)
