"""Apply rules to listings and turn them into filtered type/relation assertions."""

from __future__ import annotations

import logging
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .corpus import Corpus, subject_id
from .kg import RDF_TYPE, KnowledgeGraph
from .mining import (
    PAGE_ENTITY,
    PLACEHOLDERS,
    SECTION_ENTITY_TYPE,
    TOP_SECTION_ENTITY,
    TOP_SECTION_ENTITY_TYPE,
    Rule,
    build_context,
    frequency_baseline,
    listing_stats,
    sub_patterns,
    subject_entities,
)
from .tagger import TagModel

logger = logging.getLogger(__name__)

STATUSES = ("raw", "duplicate_of_kg", "filtered_tag", "accepted")
BASELINE = "baseline"
# overlap factor between distinct surface forms and actual novel entities
NOVEL_OVERLAP_FACTOR = 1.07


@dataclass(frozen=True)
class Assertion:
    subject: str
    predicate: str
    object: str
    status: str = "raw"
    provenance: tuple = ()  # ((rule_id, listing_id), ...)

    @property
    def triple(self) -> tuple:
        return (self.subject, self.predicate, self.object)

    @property
    def is_type(self) -> bool:
        return self.predicate == RDF_TYPE


@dataclass
class Diagnostics:
    unresolved: Counter = field(default_factory=Counter)  # rule_id -> listings skipped
    multi_resolution: int = 0
    untagged: int = 0


def resolve_objects(rule: Rule, page, listing, kg: KnowledgeGraph) -> list:
    obj = rule.consequent.object
    if obj not in PLACEHOLDERS:
        return [obj]
    ctx = listing.context
    if obj == PAGE_ENTITY:
        return [ctx.page_entity]
    if obj == TOP_SECTION_ENTITY:
        ents, required = ctx.top_section_entities, rule.antecedent.get(TOP_SECTION_ENTITY_TYPE)
    else:
        ents, required = ctx.section_entities, rule.antecedent.get(SECTION_ENTITY_TYPE)
    if required is not None:
        ents = [e for e in ents if required in kg.types_of(e)]
    return list(ents)


def rule_matches(corpus: Corpus, kg: KnowledgeGraph, rules: Iterable[Rule]):
    """Yield ``(rule, page, listing)`` for every listing whose context comprises the rule antecedent."""
    by_pattern = defaultdict(list)
    for r in rules:
        by_pattern[r.antecedent.atoms].append(r)
    if not by_pattern:
        return
    max_size = max(len(atoms) for atoms in by_pattern)
    for page, listing in corpus.listings():
        if not listing.subject_mentions():
            continue
        atoms = build_context(listing, kg)
        for pattern in sub_patterns(atoms, max_size):
            for r in by_pattern.get(pattern, ()):
                yield r, page, listing


def generate(corpus: Corpus, kg: KnowledgeGraph, rules: Iterable[Rule],
             diagnostics: Optional[Diagnostics] = None) -> list:
    """Raw assertions: each matching rule's consequent for every subject entity of the listing."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    out = []
    for rule, page, listing in rule_matches(corpus, kg, rules):
        objects = resolve_objects(rule, page, listing, kg)
        if not objects:
            diagnostics.unresolved[rule.rule_id] += 1
            continue
        if len(objects) > 1:
            diagnostics.multi_resolution += 1
        prov = ((rule.rule_id, listing.listing_id),)
        for s in subject_entities(page, listing):
            for o in objects:
                if s != o:
                    out.append(Assertion(s, rule.consequent.predicate, o, "raw", prov))
    return out


def generate_baseline(corpus: Corpus, kg: KnowledgeGraph, tau_type: float, tau_rel: float,
                      min_se: int = 3) -> list:
    """Assertions from per-listing frequencies alone (no context rules)."""
    out = []
    for page, listing in corpus.listings():
        stats = listing_stats(page, listing, kg)
        pairs = frequency_baseline(page, listing, kg, min(tau_type, tau_rel), min_se, stats)
        prov = ((BASELINE, listing.listing_id),)
        for p, o in sorted(pairs):
            tau = tau_type if p == RDF_TYPE else tau_rel
            if stats.freq(p, o) <= tau:
                continue
            for s in stats.subjects:
                if s != o:
                    out.append(Assertion(s, p, o, "raw", prov))
    return out


def canonical(assertions: Iterable[Assertion]) -> list:
    return sorted(assertions, key=lambda a: a.triple)


def dedupe_and_subtract(assertions: Iterable[Assertion], kg: KnowledgeGraph) -> list:
    """Collapse identical triples (merging provenance) and mark those already in the graph."""
    merged = {}
    for a in assertions:
        prev = merged.get(a.triple)
        merged[a.triple] = a.provenance if prev is None else prev + a.provenance
    out = []
    for (s, p, o), prov in merged.items():
        status = "duplicate_of_kg" if kg.contains(s, p, o) else "raw"
        out.append(Assertion(s, p, o, status, tuple(sorted(set(prov)))))
    return canonical(out)


def assertion_type(a: Assertion, kg: KnowledgeGraph) -> Optional[str]:
    """Type an assertion claims for its subject: the asserted type or the predicate domain."""
    return a.object if a.is_type else kg.domain(a.predicate)


def assertion_tagprob(a: Assertion, model: TagModel, kg: KnowledgeGraph) -> Optional[Fraction]:
    return model.prob(assertion_type(a, kg), model.entity_tag.get(a.subject))


def tag_filter(assertions: Iterable[Assertion], model: TagModel, kg: KnowledgeGraph,
               tau_tag=Fraction(1, 3), diagnostics: Optional[Diagnostics] = None) -> list:
    """Reject assertions whose tag probability is at most ``tau_tag``; accept the rest."""
    tau_tag = Fraction(tau_tag)
    out = []
    for a in assertions:
        if a.status == "duplicate_of_kg":
            out.append(a)
            continue
        if model.entity_tag.get(a.subject) is None:
            if diagnostics is not None:
                diagnostics.untagged += 1
            out.append(replace(a, status="filtered_tag"))
            continue
        prob = assertion_tagprob(a, model, kg)
        ok = prob is not None and prob > tau_tag
        out.append(replace(a, status="accepted" if ok else "filtered_tag"))
    return out


def infer_from_restrictions(assertions: Iterable[Assertion], kg: KnowledgeGraph,
                            prior: Iterable[Assertion] = ()) -> list:
    """Relations implied by value restrictions on accepted asserted types."""
    seen = {a.triple for a in prior}
    emitted = {}
    for a in assertions:
        if not a.is_type or a.status != "accepted":
            continue
        for p, o in sorted(kg.restrictions_of(a.object)):
            triple = (a.subject, p, o)
            if triple in seen:
                continue
            prov = tuple((f"restriction:{a.object}", lid) for _, lid in a.provenance)
            emitted[triple] = emitted.get(triple, ()) + prov
    out = []
    for (s, p, o), prov in emitted.items():
        status = "duplicate_of_kg" if kg.contains(s, p, o) else "raw"
        out.append(Assertion(s, p, o, status, tuple(sorted(set(prov)))))
    return canonical(out)


# -- reports -------------------------------------------------------------------------


def entity_report(assertions: Iterable[Assertion], kg: KnowledgeGraph) -> dict:
    accepted = [a for a in assertions if a.status == "accepted"]
    subjects = {a.subject for a in accepted}
    novel = Counter(a.subject for a in accepted if not kg.has_entity(a.subject))
    per_novel = list(novel.values())
    return {
        "assertions": len(accepted),
        "distinct_subjects": len(subjects),
        "novel_subjects": len(novel),
        "novel_estimate": len(novel) / NOVEL_OVERLAP_FACTOR,
        "assertions_per_novel_mean": statistics.fmean(per_novel) if per_novel else 0.0,
        "assertions_per_novel_median": float(statistics.median(per_novel)) if per_novel else 0.0,
    }


def novel_entities(assertions: Iterable[Assertion], corpus: Corpus, kg: KnowledgeGraph) -> list:
    """``(id, surface, page_id)`` for every accepted subject missing from the graph."""
    wanted = {a.subject for a in assertions if a.status == "accepted" and not kg.has_entity(a.subject)}
    found = {}
    for page, listing in corpus.listings():
        for m in listing.subject_mentions():
            sid = subject_id(page, m)
            if sid in wanted and sid not in found:
                found[sid] = (sid, m.surface, page.page_id)
    return sorted(found.values())


# -- files ---------------------------------------------------------------------------


def format_assertion(a: Assertion) -> str:
    rules = "|".join(r for r, _ in a.provenance)
    listings = "|".join(l for _, l in a.provenance)
    return f"{a.subject}\t{a.predicate}\t{a.object}\t{a.status}\t{rules}\t{listings}\n"


def write_assertions(assertions: Iterable[Assertion], path) -> None:
    Path(path).write_text("".join(format_assertion(a) for a in canonical(assertions)), encoding="utf-8")


def load_assertions(path) -> list:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6 or parts[3] not in STATUSES:
            raise ValueError(f"{path}: line {lineno}: malformed assertion record")
        s, p, o, status, rules, listings = parts
        prov = tuple(zip(rules.split("|"), listings.split("|"))) if rules else ()
        out.append(Assertion(s, p, o, status, prov))
    return out


def write_novel_entities(rows, path) -> None:
    Path(path).write_text("".join(f"{i}\t{s}\t{p}\n" for i, s, p in rows), encoding="utf-8")
