"""Descriptive rule mining over listing contexts.

A listing's context is a set of named atoms ``(slot, value)``. A rule maps a context
pattern (at most one atom per slot) to a ``(predicate, object)`` consequent; its
support, confidence and consistency are computed from PCA counts over the subject
entities of every listing whose context contains the pattern.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import unquote

from .corpus import Corpus, Listing, Page, subject_id
from .kg import RDF_TYPE, KnowledgeGraph

PAGE_ENTITY_TYPE = "pageEntityType"
TOP_SECTION = "topSection"
SECTION = "section"
TOP_SECTION_ENTITY_TYPE = "topSectionEntityType"
SECTION_ENTITY_TYPE = "sectionEntityType"
SLOTS = (PAGE_ENTITY_TYPE, TOP_SECTION, SECTION, TOP_SECTION_ENTITY_TYPE, SECTION_ENTITY_TYPE)

PAGE_ENTITY = "<PageEntity>"
TOP_SECTION_ENTITY = "<TopSectionEntity>"
SECTION_ENTITY = "<SectionEntity>"
PLACEHOLDERS = (PAGE_ENTITY, TOP_SECTION_ENTITY, SECTION_ENTITY)


def _escape(value: str) -> str:
    return (
        value.replace("%", "%25").replace(";", "%3B").replace("=", "%3D")
        .replace("\t", "%09").replace("\n", "%0A")
    )


@dataclass(frozen=True, order=True)
class ContextPattern:
    atoms: tuple  # sorted ((slot, value), ...), one atom per slot

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a context pattern needs at least one atom")
        slots = [s for s, _ in self.atoms]
        if len(set(slots)) != len(slots):
            raise ValueError("a context pattern holds at most one atom per slot")
        if not set(slots) <= set(SLOTS):
            raise ValueError(f"unknown slot in {slots}")
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms)))

    @classmethod
    def of(cls, **slots) -> "ContextPattern":
        return cls(tuple((k, v) for k, v in slots.items() if v is not None))

    def get(self, slot: str) -> Optional[str]:
        for s, v in self.atoms:
            if s == slot:
                return v
        return None

    def matches(self, context_atoms) -> bool:
        return all(a in context_atoms for a in self.atoms)

    def serialize(self) -> str:
        return ";".join(f"{s}={_escape(v)}" for s, v in self.atoms)

    @classmethod
    def parse(cls, text: str) -> "ContextPattern":
        atoms = []
        for part in text.split(";"):
            slot, _, value = part.partition("=")
            atoms.append((slot, unquote(value)))
        return cls(tuple(atoms))

    def __str__(self):
        return self.serialize()


@dataclass(frozen=True, order=True)
class Consequent:
    predicate: str
    object: str

    def __post_init__(self):
        if self.predicate == RDF_TYPE and self.object in PLACEHOLDERS:
            raise ValueError("type consequents need a type object")

    @property
    def is_type(self) -> bool:
        return self.predicate == RDF_TYPE

    @property
    def is_placeholder(self) -> bool:
        return self.object in PLACEHOLDERS


@dataclass(frozen=True)
class Rule:
    antecedent: ContextPattern
    consequent: Consequent
    supp: int
    conf: float
    cons: float
    covered: tuple = field(default=(), compare=False, repr=False)

    @property
    def kind(self) -> str:
        return "type" if self.consequent.is_type else "relation"

    @cached_property
    def key(self) -> tuple:
        return (self.antecedent.serialize(), self.consequent.predicate, self.consequent.object)

    @cached_property
    def rule_id(self) -> str:
        return "r" + hashlib.sha1("\t".join(self.key).encode("utf-8")).hexdigest()[:10]


# -- listing description -------------------------------------------------------------


def build_context(listing: Listing, kg: KnowledgeGraph) -> frozenset:
    """Context atoms of a listing: page-entity types, titles and title-entity types."""
    ctx = listing.context
    atoms = {(PAGE_ENTITY_TYPE, t) for t in kg.types_of(ctx.page_entity)}
    if ctx.top_section:
        atoms.add((TOP_SECTION, ctx.top_section))
    if ctx.section:
        atoms.add((SECTION, ctx.section))
    for e in ctx.top_section_entities:
        atoms.update((TOP_SECTION_ENTITY_TYPE, t) for t in kg.types_of(e))
    for e in ctx.section_entities:
        atoms.update((SECTION_ENTITY_TYPE, t) for t in kg.types_of(e))
    return frozenset(atoms)


def subject_entities(page: Page, listing: Listing) -> tuple:
    """Distinct subject-entity ids of a listing in order of appearance."""
    return tuple(dict.fromkeys(subject_id(page, m) for m in listing.subject_mentions()))


def _targets(p: str, o: str, listing: Listing) -> list:
    ctx = listing.context
    out = []
    if o == ctx.page_entity:
        out.append((p, PAGE_ENTITY))
    if o in ctx.top_section_entities:
        out.append((p, TOP_SECTION_ENTITY))
    if o in ctx.section_entities:
        out.append((p, SECTION_ENTITY))
    return out


def abstract_targets(page: Page, listing: Listing, kg: KnowledgeGraph) -> dict:
    """Placeholder-abstracted relation pairs of each subject entity."""
    out = {}
    for s in subject_entities(page, listing):
        pairs = set()
        for p, o in kg.pairs(s):
            if p != RDF_TYPE:
                pairs.update(_targets(p, o, listing))
        out[s] = pairs
    return out


@dataclass(frozen=True)
class ListingStats:
    """Per-listing PCA counts over its subject entities.

    ``pred_counts[p]`` is count(SE, p); ``pair_counts[(p, o)]`` is count(SE, p, o) for
    concrete objects and for placeholders (a subject counts once for a placeholder if it
    relates to any entity in the slot).
    """

    listing_id: str
    subjects: tuple
    pred_counts: dict
    pair_counts: dict

    def freq(self, p: str, o: str) -> Optional[float]:
        den = self.pred_counts.get(p, 0)
        if den == 0:
            return None
        return self.pair_counts.get((p, o), 0) / den

    @property
    def type_freqs(self) -> dict:
        return {o: self.freq(p, o) for (p, o) in self.pair_counts if p == RDF_TYPE}

    @property
    def relation_freqs(self) -> dict:
        return {(p, o): self.freq(p, o) for (p, o) in self.pair_counts if p != RDF_TYPE}


def listing_stats(page: Page, listing: Listing, kg: KnowledgeGraph) -> ListingStats:
    subjects = subject_entities(page, listing)
    pred_counts = Counter()
    pair_counts = Counter()
    for s in subjects:
        pairs = kg.pairs(s)
        if not pairs:
            continue
        pred_counts.update({p for p, _ in pairs})
        abstracted = set(pairs)
        for p, o in pairs:
            if p != RDF_TYPE:
                abstracted.update(_targets(p, o, listing))
        pair_counts.update(abstracted)
    return ListingStats(listing.listing_id, subjects, dict(pred_counts), dict(pair_counts))


# -- frequency baseline --------------------------------------------------------------


def frequency_baseline(page: Page, listing: Listing, kg: KnowledgeGraph, tau_freq: float,
                       min_se: int = 3, stats: Optional[ListingStats] = None) -> set:
    """Concrete (p, o) pairs whose frequency among the listing's subjects exceeds ``tau_freq``."""
    stats = stats or listing_stats(page, listing, kg)
    if len(stats.subjects) < min_se:
        return set()
    out = set()
    for (p, o) in stats.pair_counts:
        if o in PLACEHOLDERS:
            continue
        f = stats.freq(p, o)
        if f is not None and f > tau_freq:
            out.add((p, o))
    return out


# -- mining --------------------------------------------------------------------------


@dataclass
class MiningConfig:
    max_pattern_size: int = len(SLOTS)
    prune_subsumed_types: bool = True
    threads: int = 1


def sub_patterns(atoms: Iterable, max_size: int = len(SLOTS)) -> Iterable[tuple]:
    """Every non-empty choice of at most one atom per slot drawn from ``atoms``."""
    by_slot = defaultdict(list)
    for slot, value in atoms:
        by_slot[slot].append(value)
    choices = [[None] + sorted(by_slot[s]) for s in SLOTS if by_slot.get(s)]
    slots = [s for s in SLOTS if by_slot.get(s)]
    for combo in itertools.product(*choices):
        chosen = tuple(sorted((s, v) for s, v in zip(slots, combo) if v is not None))
        if chosen and len(chosen) <= max_size:
            yield chosen


def _pattern_rules(atoms: tuple, members: list, stats: list, kg: KnowledgeGraph,
                   prune: bool) -> list:
    pred_total = Counter()
    defined = Counter()
    pair_total = Counter()
    hits = defaultdict(list)
    for i in members:
        st = stats[i]
        for p, c in st.pred_counts.items():
            pred_total[p] += c
            defined[p] += 1
        for pair, c in st.pair_counts.items():
            pair_total[pair] += c
            hits[pair].append(c / st.pred_counts[pair[0]])
    pattern = ContextPattern(atoms)
    covered = tuple(stats[i].listing_id for i in members)
    rules = []
    for (p, o), num in pair_total.items():
        conf = num / pred_total[p]
        freqs = hits[(p, o)]
        # covered listings with count(SE, p) > 0 but no (p, o) have freq 0
        devs = [abs(f - conf) for f in freqs] + [conf] * (defined[p] - len(freqs))
        cons = 1.0 - math.fsum(devs) / defined[p]
        rules.append(Rule(pattern, Consequent(p, o), len(members), conf, cons, covered))
    if prune:
        rules = prune_subsumed(rules, kg)
    return rules


def prune_subsumed(rules: list, kg: KnowledgeGraph) -> list:
    """Drop type rules dominated by a same-antecedent rule for a proper subtype."""
    by_ante = defaultdict(list)
    for r in rules:
        if r.consequent.is_type:
            by_ante[r.antecedent].append(r)
    dropped = set()
    for group in by_ante.values():
        for r in group:
            t = r.consequent.object
            for other in group:
                u = other.consequent.object
                if u != t and kg.is_subtype(u, t) and other.conf >= r.conf and other.cons >= r.cons:
                    dropped.add(id(r))
                    break
    return [r for r in rules if id(r) not in dropped]


def canonical(rules: Iterable[Rule]) -> list:
    return sorted(rules, key=lambda r: r.key)


@dataclass
class MiningInput:
    pages: list
    listings: list
    stats: list
    contexts: list


def prepare(corpus: Corpus, kg: KnowledgeGraph) -> MiningInput:
    """Stats and context atoms of every listing that has subject entities."""
    pages, listings, stats, contexts = [], [], [], []
    for page, listing in corpus.listings():
        st = listing_stats(page, listing, kg)
        if not st.subjects:
            continue
        pages.append(page)
        listings.append(listing)
        stats.append(st)
        contexts.append(build_context(listing, kg))
    return MiningInput(pages, listings, stats, contexts)


def mine_rules(corpus: Corpus, kg: KnowledgeGraph, config: Optional[MiningConfig] = None) -> list:
    """Enumerate every observed context pattern and score each observed consequent.

    Returns rules in canonical order (pattern, predicate, object).
    """
    config = config or MiningConfig()
    data = prepare(corpus, kg)
    index = defaultdict(list)
    for i, atoms in enumerate(data.contexts):
        for pattern in sub_patterns(atoms, config.max_pattern_size):
            index[pattern].append(i)
    patterns = sorted(index)

    def work(chunk):
        out = []
        for atoms in chunk:
            out.extend(_pattern_rules(atoms, index[atoms], data.stats, kg, config.prune_subsumed_types))
        return out

    threads = max(1, config.threads)
    if threads == 1 or len(patterns) < 2:
        rules = work(patterns)
    else:
        size = math.ceil(len(patterns) / threads)
        chunks = [patterns[k:k + size] for k in range(0, len(patterns), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rules = [r for part in pool.map(work, chunks) for r in part]
    return canonical(rules)


def select_rules(rules: Iterable[Rule], tau_supp: float, tau_conf: float, tau_cons: float) -> list:
    return [r for r in rules if r.supp > tau_supp and r.conf > tau_conf and r.cons > tau_cons]


def select_by_kind(rules: Iterable[Rule], thresholds) -> list:
    """Apply the type or relation thresholds of ``thresholds`` to each rule."""
    rules = list(rules)
    types = select_rules([r for r in rules if r.kind == "type"],
                         thresholds.type_supp, thresholds.type_conf, thresholds.type_cons)
    rels = select_rules([r for r in rules if r.kind == "relation"],
                        thresholds.rel_supp, thresholds.rel_conf, thresholds.rel_cons)
    return canonical(types + rels)


# -- rules file ----------------------------------------------------------------------


def format_rule(r: Rule) -> str:
    return (f"{r.antecedent.serialize()}\t{r.consequent.predicate}\t{r.consequent.object}\t"
            f"{r.supp}\t{r.conf:.6f}\t{r.cons:.6f}\n")


def write_rules(rules: Iterable[Rule], path) -> None:
    Path(path).write_text("".join(format_rule(r) for r in canonical(rules)), encoding="utf-8")


def load_rules(path) -> list:
    rules = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"{path}: line {lineno}: expected 6 tab-separated fields")
        pattern, p, o, supp, conf, cons = parts
        rules.append(Rule(ContextPattern.parse(pattern), Consequent(p, o), int(supp),
                          float(conf), float(cons)))
    return canonical(rules)
