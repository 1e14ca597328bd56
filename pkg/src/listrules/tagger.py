"""Named-entity tags for mentions, per-type harmonization, and the tag/type probability table."""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .corpus import Corpus, Mention, subject_id
from .kg import KnowledgeGraph

# fallback tags that mark a span as a named entity
ENTITY_LIKE = {"PERSON", "ORG"}

_NUMBER = re.compile(r"^[\d\s.,/–\-']+$")


def shape_tag(surface: str) -> str:
    """Crude capitalization/digit-shape classifier."""
    if _NUMBER.match(surface) and any(ch.isdigit() for ch in surface):
        return "NUMBER"
    words = surface.split()
    caps = [w for w in words if w[:1].isupper()]
    if not caps:
        return "OTHER"
    if 2 <= len(words) <= 3 and len(caps) == len(words) and all(w.isalpha() for w in words):
        return "PERSON"
    if words[0][:1].isupper():
        return "ORG"
    return "OTHER"


FALLBACKS = {"shape": shape_tag}


def load_gazetteer(path) -> dict:
    gaz = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"{path}: line {lineno}: expected surface<TAB>tag")
        gaz[parts[0]] = parts[1]
    return gaz


def tag_corpus(corpus: Corpus, gazetteer: Optional[dict] = None, fallback: str = "shape") -> Corpus:
    """Give every mention one tag: explicit tag > gazetteer > fallback heuristic.

    Unlinked spans whose tag marks them as a named entity become ``tagged`` mentions.
    """
    if fallback not in FALLBACKS:
        raise ValueError(f"unknown fallback tagger {fallback!r}")
    guess = FALLBACKS[fallback]
    gazetteer = gazetteer or {}

    def tag(m: Mention) -> Mention:
        if m.ne_tag is not None:
            return m
        if m.surface in gazetteer:
            new = replace(m, ne_tag=gazetteer[m.surface])
            entity_like = True
        else:
            new = replace(m, ne_tag=guess(m.surface))
            entity_like = new.ne_tag in ENTITY_LIKE
        if m.link_kind == "none" and entity_like:
            new = replace(new, link_kind="tagged")
        return new

    return corpus.map_listings(
        lambda page, listing: replace(
            listing, rows=tuple(tuple(tag(m) for m in row) for row in listing.rows)
        )
    )


def _majority(counter: Counter) -> str:
    # most frequent, ties broken by the lexicographically smallest tag
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def anchor_type(kg: KnowledgeGraph, entity: str) -> Optional[str]:
    """Most specific direct type of an entity (deepest, then lexicographic)."""
    direct = kg.direct_types.get(entity)
    if not direct:
        return None
    return min(direct, key=lambda t: (-len(kg.ancestors(t)), t))


def harmonize_tags(corpus: Corpus, kg: KnowledgeGraph) -> Corpus:
    """Relabel linked mentions of typed entities with the majority tag of their type."""
    per_entity = defaultdict(Counter)
    for _, listing in corpus.listings():
        for m in listing.mentions():
            if m.entity_ref and m.ne_tag is not None:
                per_entity[m.entity_ref][m.ne_tag] += 1
    per_type = defaultdict(Counter)
    for entity, tags in per_entity.items():
        t = anchor_type(kg, entity)
        if t is not None:
            per_type[t][_majority(tags)] += 1
    majority = {t: _majority(c) for t, c in per_type.items()}

    def relabel(m: Mention) -> Mention:
        if not m.entity_ref:
            return m
        t = anchor_type(kg, m.entity_ref)
        if t is None or t not in majority or m.ne_tag == majority[t]:
            return m
        return replace(m, ne_tag=majority[t])

    return corpus.map_listings(
        lambda page, listing: replace(
            listing, rows=tuple(tuple(relabel(m) for m in row) for row in listing.rows)
        )
    )


@dataclass
class TagModel:
    tagprob: dict = field(default_factory=dict)  # (type, tag) -> Fraction
    entity_tag: dict = field(default_factory=dict)  # entity -> tag
    tag_alphabet: set = field(default_factory=set)

    def __post_init__(self):
        self._typed = {t for t, _ in self.tagprob}

    def prob(self, t: Optional[str], tag: Optional[str]) -> Optional[Fraction]:
        """tagprob(t, tag); None when the type has no tagged subject entity or tag is missing."""
        if t is None or tag is None or t not in self._typed:
            return None
        return self.tagprob.get((t, tag), Fraction(0))

    def distribution(self, t: str) -> dict:
        return {tag: p for (tt, tag), p in self.tagprob.items() if tt == t}


def subject_tags(corpus: Corpus) -> dict:
    """Tag of each subject entity: the majority over its subject mentions."""
    counts = defaultdict(Counter)
    for page, listing in corpus.listings():
        for m in listing.mentions():
            if m.is_subject and m.ne_tag is not None:
                counts[subject_id(page, m)][m.ne_tag] += 1
    return {e: _majority(c) for e, c in counts.items()}


def build_tagprob(corpus: Corpus, kg: KnowledgeGraph) -> TagModel:
    """Estimate P(tag | type) over distinct subject entities known to the graph."""
    entity_tag = subject_tags(corpus)
    num = defaultdict(Counter)
    den = Counter()
    for e, tag in entity_tag.items():
        for t in kg.types_of(e):
            num[t][tag] += 1
            den[t] += 1
    tagprob = {
        (t, tag): Fraction(n, den[t]) for t, tags in num.items() for tag, n in tags.items()
    }
    return TagModel(
        tagprob=tagprob,
        entity_tag=entity_tag,
        tag_alphabet=set(entity_tag.values()),
    )


def write_tagprob(model: TagModel, path) -> None:
    lines = [f"{t}\t{tag}\t{float(p):.6f}\n" for (t, tag), p in sorted(model.tagprob.items())]
    Path(path).write_text("".join(lines), encoding="utf-8")
