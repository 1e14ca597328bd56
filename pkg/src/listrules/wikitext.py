"""Simplified wiki-markup extractor: sections, lists, tables and links."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .corpus import (
    Listing,
    ListingContext,
    Mention,
    Page,
    normalize_space,
    normalize_title,
)

logger = logging.getLogger(__name__)

HEADING = re.compile(r"^(={1,6})\s*(.*?)\s*\1\s*$")
LIST_ITEM = re.compile(r"^([*#]+)\s*(.*)$")
LINK = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
EXT_LINK = re.compile(r"\[(?:https?:)?//[^\s\]]+(?:\s+([^\]]*))?\]")
REF = re.compile(r"<ref[^>/]*/>|<ref[^>]*>.*?</ref>", re.DOTALL)
COMMENT = re.compile(r"<!--.*?-->", re.DOTALL)
TEMPLATE = re.compile(r"\{\{[^{}]*\}\}")
HTML_TAG = re.compile(r"<[^<>]+>")
SEPARATORS = re.compile(r"\s*(?:[(),;:\u2013\u2014\[\]]|\s-\s)\s*")
SKIP_NAMESPACES = ("file:", "image:", "category:")


@dataclass
class ParseResult:
    page: Page
    warnings: list = field(default_factory=list)


def normalize_target(target: str) -> str:
    target = target.split("#", 1)[0].replace("_", " ")
    target = normalize_space(target)
    return target[:1].upper() + target[1:]


def _clean(text: str) -> str:
    text = COMMENT.sub("", text)
    text = REF.sub("", text)
    prev = None
    while prev != text:
        prev = text
        text = TEMPLATE.sub("", text)
    text = EXT_LINK.sub(lambda m: m.group(1) or "", text)
    text = HTML_TAG.sub("", text)
    return text.replace("'''", "").replace("''", "")


def _plain_mentions(text: str, column) -> list:
    out = []
    for piece in SEPARATORS.split(text):
        piece = normalize_space(piece).strip("\"'.!?*")
        piece = normalize_space(piece)
        if piece and any(ch.isalnum() for ch in piece):
            out.append(Mention(surface=piece, link_kind="none", column=column))
    return out


def parse_mentions(text: str, known_pages, column: Optional[int] = None) -> list:
    """Split a row or cell into link mentions and unlinked text mentions."""
    text = _clean(text)
    mentions = []
    pos = 0
    for m in LINK.finditer(text):
        mentions.extend(_plain_mentions(text[pos:m.start()], column))
        pos = m.end()
        target = normalize_target(m.group(1))
        if not target or target.lower().startswith(SKIP_NAMESPACES):
            continue
        label = normalize_space(m.group(2) if m.group(2) is not None else m.group(1))
        if not label:
            label = target
        kind = "blue" if target in known_pages else "red"
        mentions.append(Mention(surface=label, entity_ref=target, link_kind=kind, column=column))
    mentions.extend(_plain_mentions(text[pos:], column))
    return mentions


def heading_entities(raw: str, known_pages, surfaces: dict) -> tuple:
    """Entities mentioned in a heading: explicit links, then known link surfaces."""
    ents = []
    for m in LINK.finditer(raw):
        target = normalize_target(m.group(1))
        if target and target not in ents:
            ents.append(target)
    plain = normalize_title(raw)
    for surface, target in surfaces.items():
        if target in ents:
            continue
        if re.search(r"(?<!\w)" + re.escape(surface.lower()) + r"(?!\w)", plain):
            ents.append(target)
    return tuple(ents)


def _split_cells(line: str, sep: str) -> list:
    # links may contain '|' so mask them before splitting
    masked = LINK.sub(lambda m: "\0" * len(m.group(0)), line)
    cells, start = [], 0
    idx = masked.find(sep)
    while idx != -1:
        cells.append(line[start:idx])
        start = idx + len(sep)
        idx = masked.find(sep, start)
    cells.append(line[start:])
    return cells


def _cell_content(cell: str) -> str:
    masked = LINK.sub(lambda m: "\0" * len(m.group(0)), cell)
    idx = masked.find("|")
    if idx != -1 and "[[" not in cell[:idx]:
        return cell[idx + 1:]
    return cell


def _parse_table(lines: list) -> tuple:
    """Return (header cells, data rows as lists of raw cell text)."""
    headers, rows = [], []
    current = []  # list of (is_header, text)

    def flush():
        if current:
            if all(h for h, _ in current):
                headers.extend(normalize_space(_clean(t)) for _, t in current)
            else:
                rows.append([t for _, t in current])
        current.clear()

    depth = 0
    for line in lines[1:-1]:
        stripped = line.strip()
        if stripped.startswith("{|"):
            depth += 1
            continue
        if depth:
            if stripped.startswith("|}"):
                depth -= 1
            continue
        if stripped.startswith("|-"):
            flush()
        elif stripped.startswith("|+"):
            continue
        elif stripped.startswith("!"):
            for cell in _split_cells(stripped[1:], "!!"):
                for sub in _split_cells(cell, "||"):
                    current.append((True, _cell_content(sub)))
        elif stripped.startswith("|"):
            for cell in _split_cells(stripped[1:], "||"):
                current.append((False, _cell_content(cell)))
        elif current:
            h, t = current[-1]
            current[-1] = (h, t + " " + stripped)
    flush()
    return headers, rows


def extract_from_wikitext(markup: str, page_title: str, known_pages=frozenset()) -> ParseResult:
    """Parse one page's markup into a ``Page`` of listings with their section context."""
    known_pages = set(known_pages)
    lines = markup.splitlines()
    warnings = []

    # surfaces linked anywhere on the page help spot entities in unlinked headings
    surfaces = {}
    for m in LINK.finditer(COMMENT.sub("", markup)):
        target = normalize_target(m.group(1))
        label = normalize_space(m.group(2) if m.group(2) is not None else m.group(1))
        if target and label and not target.lower().startswith(SKIP_NAMESPACES):
            surfaces.setdefault(label, target)

    top = ("", ())
    sec = ("", ())
    sec_level = 0
    listings = []
    list_items = []  # (depth, text)

    def context():
        section, section_ents = sec if sec_level == 3 else top
        return ListingContext(
            page_entity=page_title,
            top_section=top[0],
            section=section,
            top_section_entities=top[1],
            section_entities=section_ents,
        )

    def add_listing(kind, rows, headers=()):
        if not rows:
            return
        listings.append(Listing(
            listing_id=f"{page_title}/{len(listings)}",
            kind=kind,
            rows=tuple(tuple(r) for r in rows),
            context=context(),
            headers=tuple(h for h in headers if h),
        ))

    def flush_list():
        if not list_items:
            return
        rows = []
        for i, (depth, text) in enumerate(list_items):
            nxt = list_items[i + 1][0] if i + 1 < len(list_items) else 0
            if nxt > depth:
                continue  # not a leaf
            row = parse_mentions(text, known_pages)
            if row:
                rows.append(row)
        list_items.clear()
        add_listing("list", rows)

    i = 0
    while i < len(lines):
        line = lines[i]
        stripped = line.strip()
        heading = HEADING.match(stripped)
        item = LIST_ITEM.match(stripped) if not heading else None
        if item:
            list_items.append((len(item.group(1)), item.group(2)))
            i += 1
            continue
        flush_list()
        if heading:
            level = max(len(heading.group(1)), 2)
            raw = heading.group(2)
            entry = (normalize_title(raw), heading_entities(raw, known_pages, surfaces))
            if level == 2:
                top, sec, sec_level = entry, ("", ()), 0
            elif level == 3:
                sec, sec_level = entry, 3
            # level 4+ keeps the nearest level-3 section
        elif stripped.startswith("{|"):
            depth, j = 0, i
            while j < len(lines):
                s = lines[j].strip()
                if s.startswith("{|"):
                    depth += 1
                elif s.startswith("|}"):
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= len(lines):
                warnings.append(f"{page_title}: unbalanced table at line {i + 1}; block skipped")
                logger.warning(warnings[-1])
                i += 1
                continue
            headers, raw_rows = _parse_table(lines[i:j + 1])
            rows = []
            for cells in raw_rows:
                row = []
                for col, cell in enumerate(cells):
                    row.extend(parse_mentions(cell, known_pages, column=col))
                if row:
                    rows.append(row)
            add_listing("table", rows, headers)
            i = j + 1
            continue
        i += 1
    flush_list()
    page = Page(page_id=page_title, title=page_title, page_entity=page_title, listings=tuple(listings))
    return ParseResult(page=page, warnings=warnings)


# -- link expansion ------------------------------------------------------------------


def _expand_mention(m: Mention, patterns: list) -> list:
    pieces = [m]
    for surface, target, regex in patterns:
        nxt = []
        for piece in pieces:
            if piece.link_kind != "none" or surface not in piece.surface:
                nxt.append(piece)
                continue
            pos = 0
            text = piece.surface
            for hit in regex.finditer(text):
                before = normalize_space(text[pos:hit.start()])
                if before:
                    nxt.append(replace(piece, surface=before))
                nxt.append(Mention(
                    surface=surface,
                    entity_ref=target,
                    link_kind="expanded",
                    ne_tag=piece.ne_tag,
                    is_subject=piece.is_subject,
                    column=piece.column,
                ))
                pos = hit.end()
            rest = normalize_space(text[pos:])
            if pos == 0:
                nxt.append(piece)
            elif rest:
                nxt.append(replace(piece, surface=rest))
        pieces = nxt
    return pieces


def expand_links(page: Page) -> Page:
    """Link every unlinked occurrence of a surface that is linked elsewhere on the page."""
    defined = {}
    order = 0
    for listing in page.listings:
        for m in listing.mentions():
            if m.link_kind in ("blue", "red") and m.surface not in defined:
                defined[m.surface] = (order, m.entity_ref)
                order += 1
    if not defined:
        return page
    ranked = sorted(defined.items(), key=lambda kv: (-len(kv[0]), kv[1][0]))
    patterns = [
        (surface, target, re.compile(r"(?<!\w)" + re.escape(surface) + r"(?!\w)"))
        for surface, (_, target) in ranked
    ]
    listings = []
    for listing in page.listings:
        rows = tuple(
            tuple(p for m in row for p in _expand_mention(m, patterns))
            for row in listing.rows
        )
        listings.append(replace(listing, rows=rows))
    return replace(page, listings=tuple(listings))
