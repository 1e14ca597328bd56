"""Heuristic subject-entity detection for lists and tables."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import replace
from typing import Optional

from .corpus import Corpus, Listing, Page, describe
from .kg import KnowledgeGraph


def _candidate(m, page: Page) -> bool:
    return m.is_linked and m.entity_ref != page.page_entity


def homogeneity(mentions, kg: Optional[KnowledgeGraph]) -> float:
    """Largest share of mentions whose entity carries one common KG type."""
    if not mentions:
        return -1.0
    if kg is None:
        return 0.0
    counts = Counter()
    for m in mentions:
        if m.entity_ref:
            counts.update(kg.types_of(m.entity_ref))
    return max(counts.values(), default=0) / len(mentions)


def subject_column(listing: Listing, page: Page, kg: Optional[KnowledgeGraph]) -> Optional[int]:
    by_col = defaultdict(list)
    for row in listing.rows:
        for m in row:
            if m.column is not None and _candidate(m, page):
                by_col[m.column].append(m)
    if not by_col:
        return None
    # highest homogeneity, leftmost column on ties
    return min(by_col, key=lambda c: (-homogeneity(by_col[c], kg), c))


def _mark_listing(page: Page, listing: Listing, kg) -> Listing:
    explicit = any(m.is_subject is not None for m in listing.mentions())
    if explicit:
        rows = tuple(
            tuple(replace(m, is_subject=bool(m.is_subject) and _candidate(m, page)) for m in row)
            for row in listing.rows
        )
        return replace(listing, rows=rows)

    if listing.kind == "table":
        col = subject_column(listing, page, kg)
        rows = tuple(
            tuple(
                replace(m, is_subject=col is not None and m.column == col and _candidate(m, page))
                for m in row
            )
            for row in listing.rows
        )
        return replace(listing, rows=rows)

    rows = []
    for row in listing.rows:
        first = next((i for i, m in enumerate(row) if _candidate(m, page)), None)
        rows.append(tuple(replace(m, is_subject=(i == first)) for i, m in enumerate(row)))
    return replace(listing, rows=tuple(rows))


def detect_subject_entities(corpus: Corpus, kg: Optional[KnowledgeGraph] = None) -> Corpus:
    """Resolve ``is_subject`` for every mention.

    Lists: the first linked, non-self mention of each row. Tables: the linked mentions
    of the most type-homogeneous column. Listings that already carry explicit marks
    keep them and have their unknown marks set to no.
    """
    return corpus.map_listings(lambda page, listing: _mark_listing(page, listing, kg))


def se_stats(corpus: Corpus) -> dict:
    counts = [len(listing.subject_mentions()) for _, listing in corpus.listings()]
    return describe(counts)
