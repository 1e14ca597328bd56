import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference import Facts, brute_force_rules, random_instance
from listrules.corpus import Listing, ListingContext, Mention, Page, build_corpus
from listrules.kg import RDF_TYPE, KnowledgeGraph, load_kg_dir
from listrules.mining import (
    PAGE_ENTITY,
    SECTION_ENTITY,
    Consequent,
    ContextPattern,
    MiningConfig,
    Rule,
    abstract_targets,
    build_context,
    frequency_baseline,
    listing_stats,
    load_rules,
    mine_rules,
    select_by_kind,
    select_rules,
    sub_patterns,
    write_rules,
)


def _se(name):
    return Mention(name, entity_ref=name, link_kind="blue", is_subject=True)


def _listing(lid, subjects, page="P", **ctx):
    return Listing(lid, "list", tuple((_se(s),) for s in subjects), ListingContext(page, **ctx))


def _page(page, *listings):
    return Page(page, page, page, tuple(listings))


def test_context_atoms_of_the_running_example(gilby_dir):
    kg = load_kg_dir(gilby_dir / "kg")
    listing = _listing("L", ["x", "y"], page="Gilby Clarke", top_section="discography",
                       section="albums with guns n' roses", section_entities=("Guns N' Roses",))
    atoms = build_context(listing, kg)
    assert atoms == {
        ("pageEntityType", "Person"), ("pageEntityType", "Agent"),
        ("topSection", "discography"), ("section", "albums with guns n' roses"),
        ("sectionEntityType", "Band"), ("sectionEntityType", "Agent"),
    }


def test_context_atoms_edge_cases():
    kg = KnowledgeGraph([("P", RDF_TYPE, "Person")])
    assert build_context(_listing("L", ["x"]), kg) == {("pageEntityType", "Person")}
    assert build_context(_listing("L", ["x"], page="Q", top_section="t", section="s"), kg) == {
        ("topSection", "t"), ("section", "s")}


def test_relations_abstract_to_context_placeholders():
    kg = KnowledgeGraph([("a", "artist", "Gilby"), ("b", "artist", "GNR"), ("c", "artist", "Other")])
    listing = _listing("L", ["a", "b", "c"], page="Gilby", section_entities=("GNR",))
    targets = abstract_targets(_page("Gilby", listing), listing, kg)
    assert targets == {"a": {("artist", PAGE_ENTITY)}, "b": {("artist", SECTION_ENTITY)}, "c": set()}


def test_frequency_baseline():
    kg = KnowledgeGraph([(s, "artist", "X") for s in "abc"])
    listing = _listing("L", ["a", "b", "c"])
    assert frequency_baseline(_page("P", listing), listing, kg, 0.8) == {("artist", "X")}
    small = _listing("S", ["a", "b"])
    assert frequency_baseline(_page("P", small), small, kg, 0.8, min_se=3) == set()


def test_two_listing_confidence_and_consistency():
    # per-listing artist frequencies 3/3 and 1/2
    kg = KnowledgeGraph([("a", "artist", "X"), ("b", "artist", "X"), ("c", "artist", "X"),
                         ("d", "artist", "X"), ("e", "artist", "Y"), ("f", RDF_TYPE, "Album")])
    corpus = build_corpus([
        _page("P1", _listing("L1", ["a", "b", "c"], page="P1", top_section="discography")),
        _page("P2", _listing("L2", ["d", "e", "f"], page="P2", top_section="discography")),
    ])
    rules = {(r.antecedent.serialize(), r.consequent): r for r in mine_rules(corpus, kg)}
    r = rules[("topSection=discography", Consequent("artist", "X"))]
    assert r.supp == 2
    assert r.conf == pytest.approx(0.8, abs=1e-12)
    assert r.cons == pytest.approx(0.75, abs=1e-12)
    assert r.covered == ("L1", "L2")


def test_patterns_only_from_covered_listings():
    kg = KnowledgeGraph([("a", RDF_TYPE, "T")])
    corpus = build_corpus([_page("P", _listing("L", ["a", "b"], top_section="t"))])
    rules = mine_rules(corpus, kg)
    assert {r.antecedent.serialize() for r in rules} == {"topSection=t"}
    assert all(r.supp >= 1 for r in rules)


def test_selection_is_strict_per_kind():
    pattern = ContextPattern.of(topSection="x")
    keep = Rule(pattern, Consequent("artist", "X"), 5, 0.9, 0.9)
    assert select_rules([keep], 2, 0.8, 0.85) == [keep]
    edge = Rule(pattern, Consequent("artist", "Y"), 2, 0.9, 0.9)
    assert select_rules([edge], 2, 0.8, 0.85) == []
    t = Rule(pattern, Consequent(RDF_TYPE, "Album"), 1, 0.86, 0.76)
    th = SimpleNamespace(type_supp=0, type_conf=0.85, type_cons=0.75, rel_supp=2, rel_conf=0.8, rel_cons=0.85)
    assert select_by_kind([t, keep, edge], th) == [keep, t]


def test_pattern_validation_and_serialization():
    with pytest.raises(ValueError):
        ContextPattern(())
    with pytest.raises(ValueError):
        ContextPattern((("topSection", "a"), ("topSection", "b")))
    with pytest.raises(ValueError):
        Consequent(RDF_TYPE, PAGE_ENTITY)
    p = ContextPattern.of(topSection="a;b=c%", pageEntityType="Person")
    assert p.serialize() == "pageEntityType=Person;topSection=a%3Bb%3Dc%25"
    assert ContextPattern.parse(p.serialize()) == p


@given(st.dictionaries(st.sampled_from(["pageEntityType", "topSection", "section"]),
                       st.text(alphabet="ab;=%\t é", min_size=0, max_size=6), min_size=1))
def test_pattern_serialization_round_trip(slots):
    p = ContextPattern(tuple(slots.items()))
    assert ContextPattern.parse(p.serialize()) == p


def test_sub_patterns_choose_one_atom_per_slot():
    atoms = {("topSection", "a"), ("pageEntityType", "X"), ("pageEntityType", "Y")}
    got = set(sub_patterns(atoms))
    assert len(got) == 5  # (1 + 2) * (1 + 1) - 1
    assert all(len({s for s, _ in p}) == len(p) for p in got)
    assert all(len(p) <= 1 for p in sub_patterns(atoms, max_size=1))


def test_subtype_pruning_keeps_the_more_specific_type():
    kg = KnowledgeGraph([(s, RDF_TYPE, "Album") for s in "ab"], hierarchy=[("Album", "MusicalWork")])
    corpus = build_corpus([_page("P", _listing("L", ["a", "b"], top_section="t"))])
    types = {r.consequent.object for r in mine_rules(corpus, kg)}
    assert types == {"Album"}
    unpruned = mine_rules(corpus, kg, MiningConfig(prune_subsumed_types=False))
    assert {r.consequent.object for r in unpruned} == {"Album", "MusicalWork"}


def test_rules_file_round_trip(tmp_path):
    rng = random.Random(5)
    corpus, kg, _, _ = random_instance(rng, 60)
    rules = mine_rules(corpus, kg)
    write_rules(rules, tmp_path / "rules.tsv")
    again = load_rules(tmp_path / "rules.tsv")
    assert [r.key for r in again] == [r.key for r in rules]
    assert all(abs(a.conf - b.conf) <= 5e-7 and a.supp == b.supp for a, b in zip(again, rules))
    (tmp_path / "bad.tsv").write_text("a\tb\n")
    with pytest.raises(ValueError, match="line 1"):
        load_rules(tmp_path / "bad.tsv")


def test_thread_count_does_not_change_output():
    rng = random.Random(11)
    corpus, kg, _, _ = random_instance(rng, 200)
    one = mine_rules(corpus, kg, MiningConfig(threads=1))
    many = mine_rules(corpus, kg, MiningConfig(threads=8))
    assert [(r.key, r.supp, r.conf, r.cons) for r in one] == [(r.key, r.supp, r.conf, r.cons) for r in many]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 40))
def test_metrics_match_brute_force(seed, n):
    rng = random.Random(seed)
    corpus, kg, triples, hierarchy = random_instance(rng, n)
    mined = mine_rules(corpus, kg, MiningConfig(prune_subsumed_types=False))
    expected = brute_force_rules(corpus, Facts(triples, hierarchy))
    assert len(mined) == len(expected)
    for r in mined:
        supp, conf, cons = expected[(r.antecedent.atoms, r.consequent.predicate, r.consequent.object)]
        assert r.supp == supp
        assert abs(r.conf - conf) <= 1e-12
        assert abs(r.cons - cons) <= 1e-12
        assert 0 <= r.cons <= 1 and 0 <= r.conf <= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_support_is_anti_monotone(seed):
    rng = random.Random(seed)
    corpus, kg, _, _ = random_instance(rng, rng.randint(2, 60))
    supp = {}
    for r in mine_rules(corpus, kg):
        supp[r.antecedent.atoms] = r.supp
        assert r.supp == len(r.covered)
    for atoms, s in supp.items():
        for other, t in supp.items():
            if set(atoms) < set(other):
                assert s >= t


def test_listing_stats_count_each_subject_once_per_placeholder():
    kg = KnowledgeGraph([("a", "member", "S1"), ("a", "member", "S2"), ("b", "member", "S1")])
    listing = _listing("L", ["a", "b", "c"], section_entities=("S1", "S2"))
    stats = listing_stats(_page("P", listing), listing, kg)
    assert stats.pred_counts == {"member": 2}
    assert stats.pair_counts[("member", SECTION_ENTITY)] == 2
    assert stats.freq("member", "S2") == 0.5
    assert stats.freq("genre", "x") is None
