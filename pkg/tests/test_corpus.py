import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listrules.corpus import (
    Corpus,
    CorpusError,
    Listing,
    ListingContext,
    Mention,
    Page,
    build_corpus,
    corpus_stats,
    dumps_corpus,
    load_corpus,
    loads_corpus,
    minted_id,
    normalize_title,
    strip_markup,
    subject_id,
)


def _listing(lid, n_rows, kind="list", **ctx):
    rows = tuple((Mention(f"item {lid} {i}", entity_ref=f"E{i}", link_kind="blue"),) for i in range(n_rows))
    return Listing(lid, kind, rows, ListingContext(page_entity="P", **ctx))


def test_empty_file_gives_empty_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("")
    corpus = load_corpus(path)
    assert corpus.pages == ()
    assert list(corpus.listings()) == []


def test_duplicate_listing_id_names_the_id():
    page = Page("P", "P", "P", (_listing("dup", 2), _listing("dup", 3)))
    with pytest.raises(CorpusError, match="dup"):
        build_corpus([page])


def test_short_listings_dropped_and_counted():
    page = Page("P", "P", "P", (_listing("a", 1), _listing("b", 2), _listing("c", 5)))
    corpus = build_corpus([page], min_rows=2)
    assert [l.listing_id for _, l in corpus.listings()] == ["b", "c"]
    assert corpus.dropped == 1


def test_row_stats_median_and_mean():
    page = Page("P", "P", "P", (_listing("a", 2), _listing("b", 8, "table"), _listing("c", 20)))
    stats = corpus_stats(build_corpus([page]))
    assert stats.rows["median"] == 8
    assert stats.rows["mean"] == 10
    assert (stats.listings, stats.lists, stats.tables) == (3, 2, 1)


def test_empty_corpus_stats_are_zero():
    stats = corpus_stats(Corpus())
    assert stats.listings == 0
    assert stats.rows == {"count": 0, "median": 0.0, "mean": 0.0, "stddev": 0.0}


def test_mention_normalizes_whitespace_and_rejects_bad_values():
    assert Mention("  The \n  Band ").surface == "The Band"
    with pytest.raises(CorpusError):
        Mention("   ")
    with pytest.raises(CorpusError):
        Mention("x", link_kind="purple")


def test_subject_id_prefers_link_target_then_mints():
    page = Page("Gilby Clarke", "Gilby Clarke", "Gilby Clarke")
    assert subject_id(page, Mention("Rubber", entity_ref="Rubber (album)", link_kind="blue")) == "Rubber (album)"
    assert subject_id(page, Mention("Swag", link_kind="tagged")) == "Gilby Clarke#swag"
    assert minted_id("P", "  Two  Words ") == "P#two words"


def test_markup_helpers():
    assert strip_markup("[[Guns N' Roses|GNR]] ''live''{{cite}}") == "GNR live"
    assert normalize_title("Albums with [[Guns N' Roses]]") == "albums with guns n' roses"


@pytest.mark.parametrize("line, needle", [
    ("{not json", "malformed"),
    ("[1, 2]", "not an object"),
    ('{"page_id": "P", "title": "P", "listings": []}', "page_entity"),
    ('{"page_id": "P", "title": "P", "page_entity": "P", "listings": [{"listing_id": "x", "kind": "grid"}]}',
     "kind"),
])
def test_malformed_records_report_line_and_field(line, needle):
    with pytest.raises(CorpusError) as info:
        loads_corpus("\n" + line + "\n")
    assert "line 2" in str(info.value)
    assert needle in str(info.value)


def test_is_subject_must_be_boolean():
    rec = {"page_id": "P", "title": "P", "page_entity": "P", "listings": [{
        "listing_id": "x", "kind": "list", "top_section": "", "section": "",
        "top_section_entities": [], "section_entities": [],
        "rows": [[{"surface": "a", "link_kind": "none", "is_subject": "yes"}]],
    }]}
    with pytest.raises(CorpusError, match="is_subject"):
        loads_corpus(json.dumps(rec))


text = st.text(alphabet="abcXYZ 019#;=|'?", min_size=1, max_size=8).filter(lambda s: s.strip())
mentions = st.builds(
    Mention,
    surface=text,
    entity_ref=st.one_of(st.none(), text),
    link_kind=st.sampled_from(["blue", "red", "expanded", "tagged", "none"]),
    ne_tag=st.one_of(st.none(), st.sampled_from(["PERSON", "ORG"])),
    is_subject=st.one_of(st.none(), st.booleans()),
    column=st.one_of(st.none(), st.integers(0, 3)),
)


@st.composite
def corpora(draw):
    pages = []
    n = 0
    for p in range(draw(st.integers(0, 3))):
        listings = []
        for _ in range(draw(st.integers(0, 3))):
            rows = tuple(tuple(draw(st.lists(mentions, min_size=1, max_size=3)))
                         for _ in range(draw(st.integers(2, 4))))
            ctx = ListingContext(f"page {p}", draw(text), draw(text),
                                 tuple(draw(st.lists(text, max_size=2))), tuple(draw(st.lists(text, max_size=2))))
            listings.append(Listing(f"L{n}", draw(st.sampled_from(["list", "table"])), rows, ctx,
                                    tuple(draw(st.lists(text, max_size=2)))))
            n += 1
        pages.append(Page(f"page {p}", f"page {p}", f"page {p}", tuple(listings)))
    return build_corpus(pages)


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_file_round_trip(corpus):
    text1 = dumps_corpus(corpus)
    again = loads_corpus(text1)
    assert again == corpus
    assert dumps_corpus(again) == text1
