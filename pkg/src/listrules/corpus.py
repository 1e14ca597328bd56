"""Listing corpus data model and the newline-delimited corpus file format."""

from __future__ import annotations

import json
import logging
import re
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

logger = logging.getLogger(__name__)

LINK_KINDS = ("blue", "red", "expanded", "tagged", "none")
LISTING_KINDS = ("list", "table")

_WS = re.compile(r"\s+")
_LINK = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_TEMPLATE = re.compile(r"\{\{[^{}]*\}\}")
_HTML = re.compile(r"<[^<>]+>")


class CorpusError(ValueError):
    pass


def normalize_space(text: str) -> str:
    return _WS.sub(" ", text).strip()


def strip_markup(text: str) -> str:
    """Reduce wiki markup to its visible text (links become their labels)."""
    text = _LINK.sub(lambda m: m.group(2) if m.group(2) is not None else m.group(1), text)
    prev = None
    while prev != text:
        prev = text
        text = _TEMPLATE.sub("", text)
    text = _HTML.sub("", text)
    text = text.replace("'''", "").replace("''", "")
    return normalize_space(text)


def normalize_title(text: str) -> str:
    return strip_markup(text).lower()


@dataclass(frozen=True)
class Mention:
    surface: str
    entity_ref: Optional[str] = None
    link_kind: str = "none"
    ne_tag: Optional[str] = None
    is_subject: Optional[bool] = None  # None = unknown
    column: Optional[int] = None

    def __post_init__(self):
        surface = normalize_space(self.surface)
        if not surface:
            raise CorpusError("mention surface is empty")
        if surface != self.surface:
            object.__setattr__(self, "surface", surface)
        if self.link_kind not in LINK_KINDS:
            raise CorpusError(f"unknown link_kind {self.link_kind!r}")

    @property
    def is_linked(self) -> bool:
        """True for any mention that denotes an entity (linked or tagged)."""
        return self.link_kind != "none"


Row = tuple  # tuple[Mention, ...]


@dataclass(frozen=True)
class ListingContext:
    page_entity: str
    top_section: str = ""
    section: str = ""
    top_section_entities: tuple = ()
    section_entities: tuple = ()


@dataclass(frozen=True)
class Listing:
    listing_id: str
    kind: str
    rows: tuple  # tuple[Row, ...]
    context: ListingContext
    headers: tuple = ()

    def mentions(self) -> Iterator[Mention]:
        for row in self.rows:
            yield from row

    def subject_mentions(self) -> list:
        return [m for m in self.mentions() if m.is_subject]


@dataclass(frozen=True)
class Page:
    page_id: str
    title: str
    page_entity: str
    listings: tuple = ()


@dataclass(frozen=True)
class Corpus:
    pages: tuple = ()
    dropped: int = 0

    def listings(self) -> Iterator[tuple]:
        """Yield ``(page, listing)`` pairs in corpus order."""
        for page in self.pages:
            for listing in page.listings:
                yield page, listing

    @property
    def entity_universe(self) -> frozenset:
        ents = set()
        for page in self.pages:
            ents.add(page.page_entity)
            for listing in page.listings:
                ents.update(listing.context.top_section_entities)
                ents.update(listing.context.section_entities)
                ents.update(m.entity_ref for m in listing.mentions() if m.entity_ref)
        return frozenset(ents)

    def map_listings(self, fn) -> "Corpus":
        """Return a corpus with ``fn(page, listing)`` applied to every listing."""
        pages = tuple(
            replace(page, listings=tuple(fn(page, listing) for listing in page.listings))
            for page in self.pages
        )
        return replace(self, pages=pages)


def minted_id(page_id: str, surface: str) -> str:
    return f"{page_id}#{normalize_space(surface).lower()}"


def subject_id(page: Page, mention: Mention) -> str:
    """Identifier of a mention's entity: its link target, else a page-scoped minted id."""
    if mention.entity_ref:
        return mention.entity_ref
    return minted_id(page.page_id, mention.surface)


def build_corpus(pages: Iterable[Page], min_rows: int = 2) -> Corpus:
    """Assemble a corpus, dropping listings with fewer than ``min_rows`` rows."""
    kept_pages = []
    seen = set()
    dropped = 0
    for page in pages:
        kept = []
        for listing in page.listings:
            if listing.listing_id in seen:
                raise CorpusError(f"duplicate listing_id {listing.listing_id!r}")
            seen.add(listing.listing_id)
            if len(listing.rows) < min_rows:
                dropped += 1
                continue
            kept.append(listing)
        kept_pages.append(replace(page, listings=tuple(kept)))
    if dropped:
        logger.info("dropped %d listings with fewer than %d rows", dropped, min_rows)
    return Corpus(pages=tuple(kept_pages), dropped=dropped)


# -- file format ---------------------------------------------------------------------


def _mention_record(m: Mention) -> dict:
    rec = {"surface": m.surface}
    if m.entity_ref is not None:
        rec["entity_ref"] = m.entity_ref
    rec["link_kind"] = m.link_kind
    if m.ne_tag is not None:
        rec["ne_tag"] = m.ne_tag
    if m.is_subject is not None:
        rec["is_subject"] = m.is_subject
    if m.column is not None:
        rec["column"] = m.column
    return rec


def page_record(page: Page) -> dict:
    listings = []
    for listing in page.listings:
        ctx = listing.context
        rec = {
            "listing_id": listing.listing_id,
            "kind": listing.kind,
            "top_section": ctx.top_section,
            "section": ctx.section,
            "top_section_entities": list(ctx.top_section_entities),
            "section_entities": list(ctx.section_entities),
            "rows": [[_mention_record(m) for m in row] for row in listing.rows],
        }
        if listing.headers:
            rec["headers"] = list(listing.headers)
        listings.append(rec)
    return {
        "page_id": page.page_id,
        "title": page.title,
        "page_entity": page.page_entity,
        "listings": listings,
    }


def dumps_corpus(corpus: Corpus) -> str:
    return "".join(
        json.dumps(page_record(page), ensure_ascii=False, separators=(",", ":")) + "\n"
        for page in corpus.pages
    )


def write_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def _require(rec: dict, key: str, kind, lineno: int, where: str = "page"):
    if key not in rec:
        raise CorpusError(f"line {lineno}: {where} record missing field {key!r}")
    value = rec[key]
    if not isinstance(value, kind):
        raise CorpusError(f"line {lineno}: field {key!r} has wrong type {type(value).__name__}")
    return value


def _parse_mention(rec, lineno: int) -> Mention:
    if not isinstance(rec, dict):
        raise CorpusError(f"line {lineno}: field 'rows' must hold mention objects")
    surface = _require(rec, "surface", str, lineno, "mention")
    link_kind = _require(rec, "link_kind", str, lineno, "mention")
    is_subject = rec.get("is_subject")
    if is_subject is not None and not isinstance(is_subject, bool):
        raise CorpusError(f"line {lineno}: field 'is_subject' must be boolean")
    try:
        return Mention(
            surface=surface,
            entity_ref=rec.get("entity_ref"),
            link_kind=link_kind,
            ne_tag=rec.get("ne_tag"),
            is_subject=is_subject,
            column=rec.get("column"),
        )
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: field 'surface'/'link_kind': {exc}") from None


def parse_page(rec: dict, lineno: int = 0) -> Page:
    page_id = _require(rec, "page_id", str, lineno)
    title = _require(rec, "title", str, lineno)
    page_entity = _require(rec, "page_entity", str, lineno)
    listings = []
    for lrec in _require(rec, "listings", list, lineno):
        if not isinstance(lrec, dict):
            raise CorpusError(f"line {lineno}: field 'listings' must hold objects")
        kind = _require(lrec, "kind", str, lineno, "listing")
        if kind not in LISTING_KINDS:
            raise CorpusError(f"line {lineno}: field 'kind' has unknown value {kind!r}")
        rows = tuple(
            tuple(_parse_mention(m, lineno) for m in row)
            for row in _require(lrec, "rows", list, lineno, "listing")
        )
        ctx = ListingContext(
            page_entity=page_entity,
            top_section=_require(lrec, "top_section", str, lineno, "listing"),
            section=_require(lrec, "section", str, lineno, "listing"),
            top_section_entities=tuple(_require(lrec, "top_section_entities", list, lineno, "listing")),
            section_entities=tuple(_require(lrec, "section_entities", list, lineno, "listing")),
        )
        listings.append(Listing(
            listing_id=_require(lrec, "listing_id", str, lineno, "listing"),
            kind=kind,
            rows=rows,
            context=ctx,
            headers=tuple(lrec.get("headers", ())),
        ))
    return Page(page_id=page_id, title=title, page_entity=page_entity, listings=tuple(listings))


def loads_corpus(text: str) -> Corpus:
    pages = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise CorpusError(f"line {lineno}: record is not an object")
        pages.append(parse_page(rec, lineno))
    return build_corpus(pages)


def load_corpus(path) -> Corpus:
    return loads_corpus(Path(path).read_text(encoding="utf-8"))


# -- statistics ----------------------------------------------------------------------


def describe(values) -> dict:
    values = list(values)
    if not values:
        return {"count": 0, "median": 0.0, "mean": 0.0, "stddev": 0.0}
    return {
        "count": len(values),
        "median": float(statistics.median(values)),
        "mean": statistics.fmean(values),
        "stddev": statistics.pstdev(values) if len(values) > 1 else 0.0,
    }


@dataclass
class CorpusStats:
    listings: int
    lists: int
    tables: int
    rows: dict = field(default_factory=dict)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    counts = [len(l.rows) for _, l in corpus.listings()]
    kinds = [l.kind for _, l in corpus.listings()]
    return CorpusStats(
        listings=len(counts),
        lists=kinds.count("list"),
        tables=kinds.count("table"),
        rows=describe(counts),
    )
