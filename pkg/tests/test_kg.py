from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listrules.kg import RDF_TYPE, KGError, KnowledgeGraph, inverse, load_kg, load_kg_dir, write_kg_dir


@pytest.fixture
def kg():
    return KnowledgeGraph(
        triples=[
            ("a", RDF_TYPE, "Album"), ("b", RDF_TYPE, "Album"), ("c", RDF_TYPE, "Single"),
            ("a", "artist", "X"), ("b", "artist", "Y"), ("X", RDF_TYPE, "Band"),
        ],
        schema={"artist": ("MusicalWork", "Agent")},
        hierarchy=[("Album", "MusicalWork"), ("Single", "MusicalWork"), ("Band", "Agent")],
        restrictions=[("Album", "format", "LP")],
    )


def test_empty_files_give_empty_graph(tmp_path):
    for name in ("kg.tsv", "schema.tsv", "hierarchy.tsv", "restrictions.tsv"):
        (tmp_path / name).write_text("")
    kg = load_kg_dir(tmp_path)
    assert kg.entities == set()
    assert kg.count_p({"a"}, "artist") == 0
    assert kg.freq({"a"}, "artist", "X") is None


def test_counts_follow_partial_completeness(kg):
    assert kg.count_po(set(), RDF_TYPE, "Album") == 0
    assert kg.count_po({"a"}, RDF_TYPE, "Album") == 1
    assert kg.count_p({"a", "b", "c"}, "artist") == 2
    assert kg.count_p({"a", "b"}, "producer") == 0
    assert kg.count_p({"a", "b", "c"}, RDF_TYPE) == 3
    assert kg.freq({"a", "b", "c"}, "artist", "X") == Fraction(1, 2)
    assert kg.freq({"a", "b", "c"}, RDF_TYPE, "MusicalWork") == 1
    assert kg.freq({"c"}, "artist", "X") is None


def test_type_closure_and_subtypes(kg):
    assert kg.types_of("a") == {"Album", "MusicalWork"}
    assert kg.is_subtype("Album", "MusicalWork")
    assert not kg.is_subtype("MusicalWork", "Album")
    assert kg.restrictions_of("Album") == {("format", "LP")}
    assert kg.restrictions_of("Single") == set()


def test_inverse_edges(kg):
    assert inverse("artist") == "artist^-1"
    assert inverse("artist^-1") == "artist"
    with pytest.raises(KGError):
        inverse(RDF_TYPE)
    assert kg.objects("X", "artist^-1") == {"a"}
    assert ("artist^-1", "a") in kg.pairs("X")
    assert kg.domain("artist") == "MusicalWork"
    assert kg.domain("artist^-1") == "Agent"
    view = kg.view("X")
    assert view.incoming == {("artist^-1", "a")}
    kg2 = KnowledgeGraph([("X", "artist^-1", "z")])
    assert kg2.contains("z", "artist", "X")


def test_round_trip_directory(kg, tmp_path):
    write_kg_dir(kg, tmp_path)
    again = load_kg_dir(tmp_path)
    assert again.triples() == kg.triples()
    assert again.schema == kg.schema
    assert again.restrictions_of("Album") == kg.restrictions_of("Album")
    assert again.types_of("a") == kg.types_of("a")


def test_malformed_rows_are_rejected(tmp_path):
    path = tmp_path / "kg.tsv"
    path.write_text("a\tb\n")
    with pytest.raises(KGError, match="line 1"):
        load_kg(path)


names = st.sampled_from("abcdef")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(names, st.sampled_from(["p", "q"]), names), max_size=20),
       st.sets(names, max_size=6), st.sampled_from(["p", "q", "p^-1"]), names)
def test_freq_is_bounded_ratio_of_counts(triples, ents, p, o):
    kg = KnowledgeGraph(triples)
    num, den = kg.count_po(ents, p, o), kg.count_p(ents, p)
    assert 0 <= num <= den <= len(ents)
    f = kg.freq(ents, p, o)
    assert (f is None) == (den == 0)
    if f is not None:
        assert f == Fraction(num, den)
