"""Synthetic listing worlds with a hidden complete graph, plus scoring against it."""

from __future__ import annotations

import logging
import math
import random
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .assertions import Assertion, resolve_objects, rule_matches
from .corpus import (
    Corpus,
    Listing,
    ListingContext,
    Mention,
    Page,
    build_corpus,
    loads_corpus,
    minted_id,
    normalize_title,
    write_corpus,
)
from .kg import RDF_TYPE, KnowledgeGraph, inverse, load_kg, load_kg_dir, write_kg_dir, write_triples
from .mining import (
    PAGE_ENTITY,
    PAGE_ENTITY_TYPE,
    SECTION,
    SECTION_ENTITY,
    SECTION_ENTITY_TYPE,
    TOP_SECTION,
    Consequent,
    ContextPattern,
    Rule,
    subject_entities,
)

logger = logging.getLogger(__name__)

# root -> mid -> leaves; every leaf carries one natural tag
TAXONOMY = {
    "Agent": {
        "Person": ["Musician", "Actor", "Athlete", "Writer"],
        "Organisation": ["Band", "Company", "SportsTeam", "University"],
    },
    "Work": {
        "MusicalWork": ["Album", "Single", "Song"],
        "WrittenWork": ["Book", "Periodical", "Comic"],
        "AudiovisualWork": ["Film", "TelevisionShow", "VideoGame"],
    },
    "Place": {
        "Settlement": ["City", "Town", "Village"],
        "Building": ["Stadium", "Museum", "Castle"],
    },
    "Event": {
        "SportsEvent": ["Tournament", "Race"],
        "SocietalEvent": ["Election", "Festival"],
    },
}
MID_TAGS = {
    "Person": "PERSON", "Organisation": "ORG", "MusicalWork": "WORK_OF_ART",
    "WrittenWork": "WORK_OF_ART", "AudiovisualWork": "WORK_OF_ART", "Settlement": "GPE",
    "Building": "FAC", "SportsEvent": "EVENT", "SocietalEvent": "EVENT",
}
LEAF_TAG_OVERRIDES = {"VideoGame": "PRODUCT"}
TAGS = sorted(set(MID_TAGS.values()) | set(LEAF_TAG_OVERRIDES.values()))
PAGE_TYPES = ["Musician", "Band", "Actor", "Writer", "SportsTeam", "City", "Athlete",
              "Company", "University", "Town"]
SECTION_ENTITY_TYPES = ["Band", "Company", "SportsTeam", "Musician", "Writer"]
SECTION_WORDS = ["discography", "filmography", "works", "squad", "alumni", "landmarks",
                 "events", "bibliography", "products", "honours", "venues", "releases"]
NOISE_TITLES = ["timeline", "see also", "summary", "notes", "navigation"]
PREDICATE_WORDS = ["artist", "author", "director", "member", "team", "location", "producer",
                   "founder", "operator", "publisher", "host", "owner", "club", "developer"]


def _hierarchy():
    pairs = []
    for root, mids in TAXONOMY.items():
        for mid, leaves in mids.items():
            pairs.append((mid, root))
            pairs.extend((leaf, mid) for leaf in leaves)
    return pairs


HIERARCHY = _hierarchy()
PARENT = dict(HIERARCHY)
LEAVES = [leaf for mids in TAXONOMY.values() for leaves in mids.values() for leaf in leaves]
CONTENT_ROOTS = ["Event", "Place", "Work"]
TAXONOMY_LEAVES = {mid: leaves for mids in TAXONOMY.values() for mid, leaves in mids.items()}


def leaf_tag(leaf: str) -> str:
    return LEAF_TAG_OVERRIDES.get(leaf, MID_TAGS[PARENT[leaf]])


def siblings(leaf: str) -> list:
    """Content leaves under the same parent that share the leaf's tag."""
    return [l for l in TAXONOMY_LEAVES[PARENT[leaf]]
            if l != leaf and l not in PAGE_TYPES and leaf_tag(l) == leaf_tag(leaf)]


class WorldConfigError(ValueError):
    pass


@dataclass
class WorldConfig:
    n_pages: int = 200
    n_contexts: int = 20
    n_relation_contexts: int = 10
    listings_per_page: int = 4
    rows_range: tuple = (2, 12)
    kg_visibility: float = 0.8
    se_noise: float = 0.0
    tag_noise: float = 0.0
    n_noise_listings: int = 0
    n_fuzzy_contexts: int = 0
    fuzzy_range: tuple = (0.35, 0.7)
    purity_range: tuple = (1.0, 1.0)
    novel_rate: float = 0.3
    novel_concentration: float = 1.0
    other_entity_rate: float = 0.4
    n_restrictions: int = 4
    background_values: int = 10
    seed: int = 0

    def validate(self):
        for name in ("kg_visibility", "se_noise", "tag_noise", "novel_rate", "other_entity_rate"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise WorldConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_contexts < 1:
            raise WorldConfigError("at least one context with a planted rule is required")
        if not 0 <= self.n_relation_contexts <= self.n_contexts:
            raise WorldConfigError("n_relation_contexts must lie in [0, n_contexts]")
        lo, hi = self.rows_range
        if lo < 1 or hi < lo:
            raise WorldConfigError("rows_range must be (lo, hi) with 1 <= lo <= hi")
        if self.n_pages < 1 or self.listings_per_page < 1:
            raise WorldConfigError("n_pages and listings_per_page must be positive")
        flo, fhi = self.fuzzy_range
        if not 0 < flo <= fhi < 1:
            raise WorldConfigError("fuzzy_range must lie strictly inside (0, 1)")
        plo, phi = self.purity_range
        if not 0 < plo <= phi <= 1:
            raise WorldConfigError("purity_range must lie inside (0, 1]")


@dataclass
class Context:
    key: int
    page_type: str
    top: str
    leaf: str
    antecedent: ContextPattern
    section_type: Optional[str] = None
    relation: Optional[Consequent] = None
    restriction: Optional[tuple] = None
    fuzzy: Optional[float] = None
    purity: float = 1.0

    @property
    def planted_type(self) -> str:
        # an impure context only guarantees the shared parent type
        return self.leaf if self.purity == 1.0 else PARENT[self.leaf]


@dataclass
class GroundTruth:
    complete: KnowledgeGraph
    planted: list = field(default_factory=list)  # (pattern, consequent)
    fuzzy: list = field(default_factory=list)  # (pattern, consequent, share)
    true_subjects: dict = field(default_factory=dict)  # listing_id -> set of subject ids
    aliases: dict = field(default_factory=dict)  # minted id -> entity id
    page_types: dict = field(default_factory=dict)  # page_id -> page type

    def resolve(self, e: str) -> str:
        return self.aliases.get(e, e)

    def holds(self, s: str, p: str, o: str) -> bool:
        return self.complete.contains(self.resolve(s), p, self.resolve(o))


@dataclass
class World:
    corpus: Corpus
    kg: KnowledgeGraph
    truth: GroundTruth
    config: WorldConfig
    gazetteer: dict = field(default_factory=dict)


class _Builder:
    def __init__(self, cfg: WorldConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.counter = Counter()
        self.truth_triples = []
        self.novel = set()
        self.pools = {}
        self.schema = {}
        self.restrictions = []
        self.directions = {}  # predicate -> used inversely

    def entity(self, leaf: str, novel: bool = False) -> str:
        self.counter[leaf] += 1
        e = f"{leaf} {self.counter[leaf]}"
        self.truth_triples.append((e, RDF_TYPE, leaf))
        if novel:
            self.novel.add(e)
        return e

    def pool(self, leaf: str, size: int = 40, key=None) -> list:
        if (leaf, key) not in self.pools:
            self.pools[(leaf, key)] = [self.entity(leaf) for _ in range(size)]
        return self.pools[(leaf, key)]

    def background(self, e: str, exclude) -> None:
        """Unrelated facts that keep predicates from being exclusive to one context."""
        if self.cfg.background_values < 1:
            return
        for p in sorted(self.directions):
            if p in exclude:
                continue
            o = f"{p} value {self.rng.randint(1, self.cfg.background_values)}"
            self.truth_triples.append((o, p, e) if self.directions[p] else (e, p, o))

    def tag(self, leaf: str) -> str:
        tag = leaf_tag(leaf)
        if self.rng.random() < self.cfg.tag_noise:
            tag = self.rng.choice([t for t in TAGS if t != tag])
        return tag


def _contexts(b: _Builder) -> list:
    cfg, rng = b.cfg, b.rng
    n_types = max(1, min(len(PAGE_TYPES), cfg.n_contexts // cfg.listings_per_page))
    page_types = PAGE_TYPES[:n_types]
    # fuzzy contexts live on page types of their own where the taxonomy allows it
    n_fuzzy_types = max(1, cfg.n_fuzzy_contexts // cfg.listings_per_page)
    fuzzy_types = PAGE_TYPES[n_types:n_types + n_fuzzy_types] or page_types
    content_leaves = [l for l in LEAVES if l not in PAGE_TYPES]
    contexts = []
    n_total = cfg.n_contexts + cfg.n_fuzzy_contexts
    shared_top = {}
    pred_names = iter(f"{w}{'' if i == 0 else i}" for i in range(1000) for w in PREDICATE_WORDS)
    restricted = set(rng.sample(range(cfg.n_contexts), min(cfg.n_restrictions, cfg.n_contexts)))
    for k in range(n_total):
        if k < cfg.n_contexts:
            page_type = page_types[k % n_types]
        else:
            page_type = fuzzy_types[(k - cfg.n_contexts) % len(fuzzy_types)]
        # contexts sharing a page type cycle through root categories, so the page
        # type alone never predicts a type
        group = sum(1 for c in contexts if c.page_type == page_type)
        root = CONTENT_ROOTS[(group + k) % len(CONTENT_ROOTS)]
        leaf = rng.choice([l for l in content_leaves if PARENT[PARENT[l]] == root])
        top = f"{SECTION_WORDS[k % len(SECTION_WORDS)]} {k // len(SECTION_WORDS) + 1}"
        fuzzy = None
        if k >= cfg.n_contexts:
            fuzzy = rng.uniform(*cfg.fuzzy_range)
            ante = ContextPattern.of(topSection=top)
            contexts.append(Context(k, page_type, top, leaf, ante, fuzzy=fuzzy))
            continue
        relation = k < cfg.n_relation_contexts
        style = k % 3
        section_type = None
        if style == 1 and n_types > 1:
            # share the top title with the previous context of a different page type
            partner = contexts[-1] if contexts and contexts[-1].page_type != page_type else None
            if partner is not None and partner.fuzzy is None and partner.key not in shared_top:
                top = partner.top
                shared_top[k] = partner.key
                ante = ContextPattern.of(pageEntityType=page_type, topSection=top)
                # the partner can no longer be identified by its title alone
                partner.antecedent = ContextPattern.of(pageEntityType=partner.page_type, topSection=top)
            else:
                ante = ContextPattern.of(topSection=top)
        elif style == 2 and relation:
            section_type = rng.choice(SECTION_ENTITY_TYPES)
            ante = ContextPattern.of(topSection=top, sectionEntityType=section_type)
        else:
            ante = ContextPattern.of(topSection=top)
        ctx = Context(k, page_type, top, leaf, ante, section_type=section_type)
        if siblings(leaf):
            ctx.purity = rng.uniform(*cfg.purity_range)
        if relation:
            p = next(pred_names)
            b.directions[p] = False
            if section_type is not None:
                b.schema[p] = (PARENT[leaf], PARENT[section_type])
                ctx.relation = Consequent(p, SECTION_ENTITY)
            elif rng.random() < 0.25:
                b.schema[p] = (PARENT[page_type], PARENT[leaf])
                ctx.relation = Consequent(inverse(p), PAGE_ENTITY)
                b.directions[p] = True
            else:
                b.schema[p] = (PARENT[leaf], PARENT[page_type])
                ctx.relation = Consequent(p, PAGE_ENTITY)
        if k in restricted:
            p = f"genre{k}"
            o = f"Genre {k}"
            b.schema[p] = (PARENT[leaf], None)
            b.directions[p] = False
            b.truth_triples.append((o, RDF_TYPE, "Genre"))
            ctx.restriction = (p, o)
        contexts.append(ctx)
    # a restricted leaf must satisfy its restriction wherever it appears
    by_leaf = {}
    for ctx in contexts:
        if ctx.restriction and ctx.leaf not in by_leaf:
            by_leaf[ctx.leaf] = ctx.restriction
            b.restrictions.append((ctx.leaf, *ctx.restriction))
    for ctx in contexts:
        ctx.restriction = by_leaf.get(ctx.leaf)
    return contexts


def generate_world(cfg: WorldConfig) -> World:
    """Seeded world: corpus, visible graph and hidden ground truth.

    Every planted rule holds for every true subject entity of each listing in its
    context. The visible graph keeps each true triple with probability
    ``kg_visibility``; novel entities are absent from it altogether.
    """
    cfg.validate()
    b = _Builder(cfg)
    rng = b.rng
    contexts = _contexts(b)
    by_page_type = defaultdict(list)
    for ctx in contexts:
        by_page_type[ctx.page_type].append(ctx)
    page_types = sorted(by_page_type)

    truth = GroundTruth(complete=KnowledgeGraph())
    gazetteer = {}
    pages = []
    listing_no = Counter()
    other_leaves = ["City", "Town", "Stadium", "Museum"]

    content_leaves = [l for l in LEAVES if l not in PAGE_TYPES]
    roots = sorted(TAXONOMY)

    def row_leaf(ctx, i):
        if ctx.key < 0:
            # organisational listings mix entities of every root category
            root = TAXONOMY[roots[i % len(roots)]]
            return rng.choice([l for ls in root.values() for l in ls])
        if ctx.fuzzy is not None and rng.random() >= ctx.fuzzy:
            root = PARENT[PARENT[ctx.leaf]]
            return rng.choice([l for l in content_leaves if PARENT[PARENT[l]] != root])
        if ctx.purity < 1.0 and rng.random() >= ctx.purity:
            return rng.choice(siblings(ctx.leaf))
        return ctx.leaf

    def make_row(page_id, page_entity, sec_entity, ctx, leaf, novel_share, col_table):
        novel = rng.random() < novel_share
        e = b.entity(leaf, novel=novel)
        if ctx.fuzzy is None and ctx.relation is not None:
            p, target = ctx.relation.predicate, ctx.relation.object
            obj = sec_entity if target == SECTION_ENTITY else page_entity
            if p.endswith("^-1"):
                b.truth_triples.append((obj, inverse(p), e))
            else:
                b.truth_triples.append((e, p, obj))
        restriction = next((r for l, *r in b.restrictions if l == leaf), None)
        if restriction:
            b.truth_triples.append((e, restriction[0], restriction[1]))
        exclude = {restriction[0]} if restriction else set()
        if ctx.relation is not None:
            exclude.add(ctx.relation.predicate.removesuffix("^-1"))
        b.background(e, exclude)
        tag = b.tag(leaf)
        if novel and rng.random() < 0.5:
            m = Mention(e, None, "tagged", tag, True)
            sid = minted_id(page_id, e)
            truth.aliases[sid] = e
            gazetteer[e] = tag
        else:
            sid = e
            m = Mention(e, e, "red" if novel else "blue", tag, True)
        row = [m, Mention(str(rng.randint(1950, 2020)), None, "none", "NUMBER", False)]
        if rng.random() < cfg.other_entity_rate:
            other_leaf = rng.choice(other_leaves)
            other = rng.choice(b.pool(other_leaf))
            row.append(Mention(other, other, "blue", b.tag(other_leaf), False))
        if col_table:
            row = [Mention(x.surface, x.entity_ref, x.link_kind, x.ne_tag, x.is_subject, i)
                   for i, x in enumerate(row)]
        return row, sid

    def flip(row):
        out = []
        for m in row:
            if m.is_linked and rng.random() < cfg.se_noise:
                m = Mention(m.surface, m.entity_ref, m.link_kind, m.ne_tag, not m.is_subject, m.column)
            out.append(m)
        return out

    def make_listing(page_id, page_entity, ctx, title, section_title, sec_entity):
        listing_no[page_id] += 1
        listing_id = f"{page_id}/{listing_no[page_id] - 1}"
        kind = rng.choice(["list", "table"])
        # per-listing novel share ~ Beta with mean novel_rate; low concentration skews
        # listings towards all-known or all-novel
        a = max(cfg.novel_concentration * cfg.novel_rate, 1e-3)
        bb = max(cfg.novel_concentration * (1 - cfg.novel_rate), 1e-3)
        novel_share = rng.betavariate(a, bb) if 0 < cfg.novel_rate < 1 else cfg.novel_rate
        rows, subjects = [], set()
        n_rows = rng.randint(*cfg.rows_range)
        if ctx.key < 0:
            n_rows = max(n_rows, 2 * len(roots))
        for i in range(n_rows):
            leaf = row_leaf(ctx, i)
            row, sid = make_row(page_id, page_entity, sec_entity, ctx, leaf, novel_share, kind == "table")
            rows.append(tuple(flip(row)))
            subjects.add(sid)
        truth.true_subjects[listing_id] = subjects
        section = normalize_title(section_title) if section_title else normalize_title(title)
        return Listing(
            listing_id=listing_id,
            kind=kind,
            rows=tuple(rows),
            context=ListingContext(
                page_entity=page_entity,
                top_section=normalize_title(title),
                section=section,
                top_section_entities=(),
                section_entities=(sec_entity,) if sec_entity else (),
            ),
        )

    for i in range(cfg.n_pages):
        page_type = page_types[i % len(page_types)] if i < len(page_types) else rng.choice(page_types)
        page_entity = b.entity(page_type)
        page_id = page_entity
        truth.page_types[page_id] = page_type
        chosen = rng.sample(by_page_type[page_type], min(cfg.listings_per_page, len(by_page_type[page_type])))
        listings = []
        for ctx in sorted(chosen, key=lambda c: c.key):
            sec_entity, section_title = None, None
            if ctx.section_type is not None:
                sec_entity = rng.choice(b.pool(ctx.section_type, 10, ctx.key))
                section_title = f"with {sec_entity}"
            listings.append(make_listing(page_id, page_entity, ctx, ctx.top, section_title, sec_entity))
        pages.append([page_id, page_entity, listings])

    for _ in range(cfg.n_noise_listings):
        page = rng.choice(pages)
        noise_ctx = Context(-1, "", "", "", ContextPattern.of(topSection="noise"))
        page[2].append(make_listing(page[0], page[1], noise_ctx, rng.choice(NOISE_TITLES), None, None))

    corpus = build_corpus(Page(pid, pid, pe, tuple(ls)) for pid, pe, ls in pages)

    for ctx in contexts:
        if ctx.fuzzy is None:
            truth.planted.append((ctx.antecedent, Consequent(RDF_TYPE, ctx.planted_type)))
            if ctx.relation is not None:
                truth.planted.append((ctx.antecedent, ctx.relation))
        else:
            truth.fuzzy.append((ctx.antecedent, Consequent(RDF_TYPE, ctx.leaf), ctx.fuzzy))

    schema = dict(b.schema)
    hierarchy = HIERARCHY + [("Genre", "Concept")]
    truth.complete = KnowledgeGraph(b.truth_triples, schema, hierarchy, b.restrictions)
    visible = [
        t for t in b.truth_triples
        if t[0] not in b.novel and t[2] not in b.novel and rng.random() < cfg.kg_visibility
    ]
    kg = KnowledgeGraph(visible, schema, hierarchy, b.restrictions)
    return World(corpus, kg, truth, cfg, gazetteer)


# -- bundle files --------------------------------------------------------------------


def write_world(world: World, directory) -> None:
    d = Path(directory)
    (d / "truth").mkdir(parents=True, exist_ok=True)
    write_corpus(world.corpus, d / "corpus.jsonl")
    write_kg_dir(world.kg, d)
    write_triples(world.truth.complete.triples(), d / "truth" / "kg.tsv")
    (d / "gazetteer.tsv").write_text(
        "".join(f"{s}\t{t}\n" for s, t in sorted(world.gazetteer.items())), encoding="utf-8")
    rules = [f"{a.serialize()}\t{c.predicate}\t{c.object}\tplanted\n" for a, c in world.truth.planted]
    rules += [f"{a.serialize()}\t{c.predicate}\t{c.object}\tfuzzy:{q:.6f}\n" for a, c, q in world.truth.fuzzy]
    (d / "truth" / "rules.tsv").write_text("".join(rules), encoding="utf-8")
    (d / "truth" / "subjects.tsv").write_text("".join(
        f"{lid}\t{s}\n" for lid in sorted(world.truth.true_subjects)
        for s in sorted(world.truth.true_subjects[lid])), encoding="utf-8")
    (d / "truth" / "aliases.tsv").write_text(
        "".join(f"{k}\t{v}\n" for k, v in sorted(world.truth.aliases.items())), encoding="utf-8")
    (d / "truth" / "pages.tsv").write_text(
        "".join(f"{k}\t{v}\n" for k, v in sorted(world.truth.page_types.items())), encoding="utf-8")
    config = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(world.config).items()}
    (d / "world.cfg").write_text("".join(f"{k} = {config[k]}\n" for k in sorted(config)), encoding="utf-8")


def _tsv(path, width):
    path = Path(path)
    if not path.exists():
        return []
    return [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and len(line.split("\t")) == width]


def load_truth(directory) -> GroundTruth:
    d = Path(directory)
    base = load_kg_dir(d)
    complete = load_kg(d / "truth" / "kg.tsv")
    complete = KnowledgeGraph(complete.triples(), base.schema,
                              [(t, p) for t, ps in base.parents.items() for p in ps],
                              [(t, p, o) for t, rs in base.restrictions.items() for p, o in rs])
    truth = GroundTruth(complete=complete)
    for pattern, p, o, label in _tsv(d / "truth" / "rules.tsv", 4):
        if label == "planted":
            truth.planted.append((ContextPattern.parse(pattern), Consequent(p, o)))
        else:
            truth.fuzzy.append((ContextPattern.parse(pattern), Consequent(p, o),
                                float(label.split(":", 1)[1])))
    for lid, s in _tsv(d / "truth" / "subjects.tsv", 2):
        truth.true_subjects.setdefault(lid, set()).add(s)
    truth.aliases = dict(_tsv(d / "truth" / "aliases.tsv", 2))
    truth.page_types = dict(_tsv(d / "truth" / "pages.tsv", 2))
    return truth


# -- evaluation ----------------------------------------------------------------------


def score(assertions, truth: GroundTruth, kg: Optional[KnowledgeGraph] = None, z: float = 1.96) -> dict:
    """Correctness of accepted assertions against the complete graph, with error buckets."""
    accepted = [a for a in assertions if a.status == "accepted"]
    correct = 0
    buckets = Counter()
    novel_n = novel_ok = 0
    for a in accepted:
        ok = truth.holds(*a.triple)
        correct += ok
        if kg is not None and not kg.has_entity(a.subject):
            novel_n += 1
            novel_ok += ok
        if not ok:
            listings = [lid for _, lid in a.provenance]
            if listings and all(a.subject not in truth.true_subjects.get(lid, ()) for lid in listings):
                buckets["wrong_subject_entity"] += 1
            else:
                buckets["rule_applied_incorrectly"] += 1
    n = len(accepted)
    p = correct / n if n else 0.0
    return {
        "accepted": n,
        "correct": correct,
        "correctness": p,
        "interval": z * math.sqrt(p * (1 - p) / n) if n else 0.0,
        "novel_accepted": novel_n,
        "novel_correctness": novel_ok / novel_n if novel_n else 0.0,
        "error_wrong_subject_entity": buckets["wrong_subject_entity"],
        "error_rule_applied_incorrectly": buckets["rule_applied_incorrectly"],
        "error_entity_parsed_incorrectly": "n/a",
        "error_semantics_too_complex": "n/a",
    }


def format_metrics(metrics: dict) -> str:
    lines = []
    for k, v in metrics.items():
        lines.append(f"{k}\t{v:.6f}\n" if isinstance(v, float) else f"{k}\t{v}\n")
    return "".join(lines)


def stratified_sample(items, strata, n: int, seed: int = 0) -> list:
    """Proportional stratified random sample; ``strata`` maps an item to its stratum."""
    items = list(items)
    if n >= len(items):
        if n > len(items):
            logger.warning("sample size %d exceeds population %d; returning all", n, len(items))
        return items
    groups = defaultdict(list)
    for item in items:
        groups[strata(item)].append(item)
    keys = sorted(groups, key=str)
    quotas = {k: n * len(groups[k]) / len(items) for k in keys}
    alloc = {k: int(math.floor(q)) for k, q in quotas.items()}
    # largest remainder, ties by stratum order
    rest = n - sum(alloc.values())
    for k in sorted(keys, key=lambda k: -(quotas[k] - alloc[k]))[:rest]:
        alloc[k] += 1
    rng = random.Random(seed)
    out = []
    for k in keys:
        out.extend(rng.sample(groups[k], alloc[k]))
    return out


@dataclass
class RuleEvaluation:
    planted: int
    recovered: int
    selected: int
    spurious: int
    missing: list = field(default_factory=list)
    spurious_rules: list = field(default_factory=list)

    @property
    def recall(self) -> float:
        return self.recovered / self.planted if self.planted else 1.0

    @property
    def spurious_rate(self) -> float:
        return self.spurious / self.selected if self.selected else 0.0


def evaluate_rules(selected, corpus: Corpus, kg: KnowledgeGraph, truth: GroundTruth) -> RuleEvaluation:
    """Planted-rule recovery and spurious selections.

    A selected rule is spurious when its consequent fails in the complete graph for
    some true subject entity of a listing it covers.
    """
    selected = list(selected)
    keys = {(r.antecedent, r.consequent) for r in selected}
    missing = [pc for pc in truth.planted if pc not in keys]
    bad = set()
    for rule, page, listing in rule_matches(corpus, kg, selected):
        if rule.rule_id in bad:
            continue
        objects = resolve_objects(rule, page, listing, kg)
        for s in truth.true_subjects.get(listing.listing_id, ()):
            if any(not truth.holds(s, rule.consequent.predicate, o) for o in objects):
                bad.add(rule.rule_id)
                break
    spurious = [r for r in selected if r.rule_id in bad]
    return RuleEvaluation(
        planted=len(truth.planted),
        recovered=len(truth.planted) - len(missing),
        selected=len(selected),
        spurious=len(spurious),
        missing=missing,
        spurious_rules=spurious,
    )
