"""In-memory knowledge graph with PCA-style count and frequency statistics."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)

RDF_TYPE = "rdf:type"
INVERSE_SUFFIX = "^-1"


class KGError(ValueError):
    pass


def is_inverse(p: str) -> bool:
    return p.endswith(INVERSE_SUFFIX)


def inverse(p: str) -> str:
    if p == RDF_TYPE:
        raise KGError("rdf:type has no inverse")
    return p[: -len(INVERSE_SUFFIX)] if is_inverse(p) else p + INVERSE_SUFFIX


@dataclass(frozen=True)
class EntityView:
    entity: str
    types: frozenset
    outgoing: frozenset  # (p, o)
    incoming: frozenset  # (p^-1, s)


class KnowledgeGraph:
    """Typed triple store indexed by subject, by (predicate, object) and by object.

    Immutable by convention once built; every query is read-only.
    """

    def __init__(
        self,
        triples: Iterable = (),
        schema: Optional[dict] = None,
        hierarchy: Iterable = (),
        restrictions: Iterable = (),
    ):
        self._closure_cache = {}
        self._types_cache = {}
        self.schema = dict(schema or {})  # predicate -> (domain, range)
        self.parents = defaultdict(set)
        for t, parent in hierarchy:
            self.parents[t].add(parent)
        self.restrictions = defaultdict(set)  # type -> {(p, o)}
        self.direct_types = defaultdict(set)
        self._sp = defaultdict(lambda: defaultdict(set))  # s -> p -> {o}
        self._op = defaultdict(lambda: defaultdict(set))  # o -> p -> {s}
        self._po = defaultdict(lambda: defaultdict(set))  # p -> o -> {s}
        self.predicates = set(self.schema)
        self.types = set(self.parents)
        for ps in self.parents.values():
            self.types.update(ps)
        for dom, rng in self.schema.values():
            self.types.update(t for t in (dom, rng) if t)
        for t, p, o in restrictions:
            self.restrictions[t].add((p, o))
            self.types.add(t)
        for s, p, o in triples:
            self.add(s, p, o)

    # -- construction -------------------------------------------------------------

    def add(self, s: str, p: str, o: str) -> None:
        if p == RDF_TYPE:
            self.direct_types[s].add(o)
            self.types.add(o)
            self._types_cache = {}
            return
        if is_inverse(p):
            s, p, o = o, inverse(p), s
        self._sp[s][p].add(o)
        self._op[o][p].add(s)
        self._po[p][o].add(s)
        self.predicates.add(p)

    # -- schema -------------------------------------------------------------------

    def ancestors(self, t: str) -> frozenset:
        """``t`` together with all of its supertypes."""
        cached = self._closure_cache.get(t)
        if cached is not None:
            return cached
        seen, stack = {t}, [t]
        while stack:
            for parent in self.parents.get(stack.pop(), ()):
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        result = frozenset(seen)
        self._closure_cache[t] = result
        return result

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def types_of(self, e: str) -> frozenset:
        cached = self._types_cache.get(e)
        if cached is not None:
            return cached
        closed = set()
        for t in self.direct_types.get(e, ()):
            closed |= self.ancestors(t)
        result = frozenset(closed)
        self._types_cache[e] = result
        return result

    def domain(self, p: str) -> Optional[str]:
        """Type the subject of ``p`` is expected to have (range of the original for inverses)."""
        if is_inverse(p):
            return self.schema.get(inverse(p), (None, None))[1]
        return self.schema.get(p, (None, None))[0]

    def restrictions_of(self, t: str) -> set:
        out = set()
        for a in self.ancestors(t):
            out |= self.restrictions.get(a, set())
        return out

    # -- lookups ------------------------------------------------------------------

    def has_entity(self, e: str) -> bool:
        return e in self.direct_types or e in self._sp or e in self._op

    @property
    def entities(self) -> set:
        return set(self.direct_types) | set(self._sp) | set(self._op)

    def objects(self, s: str, p: str) -> frozenset:
        if p == RDF_TYPE:
            return self.types_of(s)
        if is_inverse(p):
            node = self._op.get(s)
            p = inverse(p)
        else:
            node = self._sp.get(s)
        if node is None:
            return frozenset()
        return frozenset(node.get(p, ()))

    def contains(self, s: str, p: str, o: str) -> bool:
        return o in self.objects(s, p)

    def pairs(self, s: str) -> set:
        """All (p, o) pairs of ``s``: types, outgoing relations and inverse relations."""
        out = {(RDF_TYPE, t) for t in self.types_of(s)}
        for p, objs in self._sp.get(s, {}).items():
            out.update((p, o) for o in objs)
        for p, subs in self._op.get(s, {}).items():
            ip = inverse(p)
            out.update((ip, x) for x in subs)
        return out

    def view(self, e: str) -> EntityView:
        pairs = self.pairs(e)
        return EntityView(
            entity=e,
            types=self.types_of(e),
            outgoing=frozenset(x for x in pairs if x[0] != RDF_TYPE and not is_inverse(x[0])),
            incoming=frozenset(x for x in pairs if is_inverse(x[0])),
        )

    def triples(self):
        """Every stored triple in canonical order (types as direct assertions)."""
        out = [(s, RDF_TYPE, t) for s, ts in self.direct_types.items() for t in ts]
        out += [(s, p, o) for s, ps in self._sp.items() for p, os_ in ps.items() for o in os_]
        return sorted(out)

    # -- PCA statistics -----------------------------------------------------------

    def count_po(self, entities, p: str, o: str) -> int:
        return sum(1 for s in entities if o in self.objects(s, p))

    def count_p(self, entities, p: str) -> int:
        return sum(1 for s in entities if self.objects(s, p))

    def freq(self, entities, p: str, o: str) -> Optional[Fraction]:
        """Share of entities having ``(p, o)`` among those having any ``p`` edge; None if none do."""
        entities = set(entities)
        den = self.count_p(entities, p)
        if den == 0:
            return None
        return Fraction(self.count_po(entities, p, o), den)


# -- TSV files -----------------------------------------------------------------------


def _rows(path, width: int):
    if path is None:
        return
    path = Path(path)
    if not path.exists():
        raise KGError(f"{path}: no such file")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != width or not all(parts):
            raise KGError(f"{path}: line {lineno}: expected {width} tab-separated fields")
        yield parts


def load_kg(triples_path, schema_path=None, restrictions_path=None, hierarchy_path=None) -> KnowledgeGraph:
    schema = {p: (d if d != "-" else None, r if r != "-" else None) for p, d, r in _rows(schema_path, 3)}
    triples = list(_rows(triples_path, 3))
    if schema:
        unknown = sorted({p for _, p, _ in triples if p != RDF_TYPE and p not in schema})
        for p in unknown:
            logger.warning("predicate %r not in schema; admitted without domain/range", p)
            schema[p] = (None, None)
    return KnowledgeGraph(
        triples=triples,
        schema=schema,
        hierarchy=list(_rows(hierarchy_path, 2)),
        restrictions=list(_rows(restrictions_path, 3)),
    )


def load_kg_dir(directory) -> KnowledgeGraph:
    """Load ``kg.tsv`` plus the optional schema/hierarchy/restrictions files of a directory."""
    d = Path(directory)

    def opt(name):
        return d / name if (d / name).exists() else None

    return load_kg(d / "kg.tsv", opt("schema.tsv"), opt("restrictions.tsv"), opt("hierarchy.tsv"))


def write_triples(triples, path) -> None:
    Path(path).write_text("".join(f"{s}\t{p}\t{o}\n" for s, p, o in sorted(triples)), encoding="utf-8")


def write_kg_dir(kg: KnowledgeGraph, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_triples(kg.triples(), d / "kg.tsv")
    (d / "schema.tsv").write_text(
        "".join(f"{p}\t{dom or '-'}\t{rng or '-'}\n" for p, (dom, rng) in sorted(kg.schema.items())),
        encoding="utf-8",
    )
    (d / "hierarchy.tsv").write_text(
        "".join(f"{t}\t{p}\n" for t in sorted(kg.parents) for p in sorted(kg.parents[t])),
        encoding="utf-8",
    )
    (d / "restrictions.tsv").write_text(
        "".join(f"{t}\t{p}\t{o}\n" for t in sorted(kg.restrictions) for p, o in sorted(kg.restrictions[t])),
        encoding="utf-8",
    )
