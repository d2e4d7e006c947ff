import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import read_golden
from ontoqe.context import serialize_context, serialize_definitions, serialize_graph, serialize_relations
from ontoqe.errors import UnknownLabel
from ontoqe.ontology import (
    WHITELIST,
    Concept,
    DefinitionEntry,
    Edge,
    RelationLabel,
    SemanticGraph,
    fetch_concept,
    fetch_neighborhood,
    link_concept,
    prune_edges,
)


def test_lymphatic_filariasis_golden(snapshot):
    cui, name = link_concept("Lymphatic Filariasis", snapshot)
    text = serialize_definitions([fetch_concept(cui, name, snapshot)])
    assert text == read_golden("lymphatic_filariasis_definitions.txt")


def test_carcinoma_of_breast_golden(snapshot):
    cui, name = link_concept("Carcinoma of breast", snapshot)
    graph = prune_edges(fetch_neighborhood(cui, snapshot, name=name))
    assert serialize_relations([graph]) == read_golden("carcinoma_of_breast_relations.txt")


def test_empty_inputs():
    assert serialize_definitions([]) == ""
    assert serialize_relations([]) == ""
    ctx = serialize_context([], [])
    assert (ctx.definitions_text, ctx.relations_text) == ("", "")


def test_single_definition():
    concept = Concept("C0000001", "Name", (DefinitionEntry("x", "MSH"),))
    assert serialize_definitions([concept]) == "Name: x (Source: MeSH);"


def test_concepts_without_definitions_omitted():
    a = Concept("C0000001", "A", (DefinitionEntry("x", "SNOMEDCT_US"),))
    b = Concept("C0000002", "B")
    c = Concept("C0000003", "C", (DefinitionEntry("y", "CSP"),))
    assert serialize_definitions([a, b, c]) == (
        "A: x (Source: SNOMED CT, US Edition);\nC: y (Source: CRISP Thesaurus);")


def test_definition_text_verbatim():
    text = "  spaced\ttext  with (parens)  "
    concept = Concept("C0000001", "N", (DefinitionEntry(text, "NCI"),))
    assert text in serialize_definitions([concept])


def test_single_child_edge():
    graph = SemanticGraph("C0000001", {"C0000001": "Center", "C0000002": "X"},
                          (Edge("C0000001", "C0000002", RelationLabel("CHD")),))
    assert serialize_relations([graph]) == "Center:\n    ∟ has child: X"


def test_every_phrase():
    labels = ["PAR", "CHD", "SY", "RO", "RO:has_associated_morphology"]
    nodes = {"C0000001": "C", **{f"C000001{i}": f"N{i}" for i in range(5)}}
    edges = tuple(Edge("C0000001", f"C000001{i}", RelationLabel.parse(lab)) for i, lab in enumerate(labels))
    assert serialize_graph(SemanticGraph("C0000001", nodes, edges)).splitlines()[1:] == [
        "    ∟ has parent: N0",
        "    ∟ has child: N1",
        "    ∟ is synonymous with: N2",
        "    ∟ is related to: N3",
        "    ∟ has associated morphology: N4",
    ]


def test_unpruned_label_rejected():
    graph = SemanticGraph("C0000001", {"C0000001": "C", "C0000002": "X"},
                          (Edge("C0000001", "C0000002", RelationLabel("RB")),))
    with pytest.raises(UnknownLabel):
        serialize_relations([graph])


def test_edgeless_graphs_omitted():
    lone = SemanticGraph.single("C0000001", "Lone")
    assert serialize_relations([lone]) == ""


def test_pure_function(snapshot):
    graphs = [prune_edges(fetch_neighborhood(c, snapshot)) for c in ("C9000002", "C9000014", "C0029118")]
    assert len({serialize_relations(graphs) for _ in range(5)}) == 1


_labels = st.sampled_from(sorted(WHITELIST, key=lambda lab: lab.canonical))


@settings(max_examples=100)
@given(st.lists(st.lists(_labels, max_size=6), max_size=5))
def test_relation_line_count(edge_labels):
    graphs = []
    for g, labels in enumerate(edge_labels):
        center = f"C{g:07d}"
        nodes = {center: f"center {g}", **{f"C{100 + i:07d}": f"n{i}" for i in range(len(labels))}}
        edges = tuple(Edge(center, f"C{100 + i:07d}", lab) for i, lab in enumerate(labels))
        graphs.append(SemanticGraph(center, nodes, edges))
    text = serialize_relations(graphs)
    expected = sum(1 + len(g.edges) for g in graphs if g.edges)
    assert (len(text.split("\n")) if text else 0) == expected
