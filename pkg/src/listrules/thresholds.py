"""Tag-fit noise proxy and steepest-drop threshold recommendation."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .assertions import Assertion, assertion_tagprob, resolve_objects, rule_matches
from .kg import KnowledgeGraph
from .mining import Rule, subject_entities
from .tagger import TagModel

# recommended thresholds read off the reference tag-fit curves
DEFAULTS = {
    ("type", "conf"): 0.85,
    ("type", "cons"): 0.75,
    ("relation", "conf"): 0.80,
    ("relation", "cons"): 0.85,
}
DEFAULT_SUPPORT = {"type": 0, "relation": 2}


class SweepError(ValueError):
    pass


def _values(assertions, model, kg) -> list:
    return [float(assertion_tagprob(a, model, kg) or 0) for a in assertions]


def tagfit(assertions: Iterable[Assertion], model: TagModel, kg: KnowledgeGraph) -> Optional[float]:
    """Mean tag probability of the assertions; undefined entries count as 0, empty -> None."""
    values = _values(list(assertions), model, kg)
    if not values:
        return None
    return math.fsum(values) / len(values)


@dataclass
class CurveBin:
    lower: float
    upper: float
    count: int
    tagfit: Optional[float]
    cumulative: Optional[float]


@dataclass
class Sweep:
    metric: str
    kind: str
    bin_width: float
    bins: list = field(default_factory=list)  # highest bin first
    recommended: Optional[float] = None
    no_clear_drop: bool = False
    drop: float = 0.0

    def report(self) -> str:
        lines = []
        for b in self.bins:
            tf = "" if b.tagfit is None else f"{b.tagfit:.6f}"
            cum = "" if b.cumulative is None else f"{b.cumulative:.6f}"
            lines.append(f"{b.lower:.2f}\t{b.upper:.2f}\t{b.count}\t{tf}\t{cum}\n")
        flag = " (no clear drop)" if self.no_clear_drop else ""
        lines.append(f"# recommended {self.kind} {self.metric} threshold: {self.recommended:.2f}{flag}\n")
        return "".join(lines)

    def chart_data(self) -> dict:
        return {
            "metric": self.metric,
            "kind": self.kind,
            "bin_width": self.bin_width,
            "recommended": self.recommended,
            "no_clear_drop": self.no_clear_drop,
            "bins": [asdict(b) for b in self.bins],
        }


def bin_index(value: float, width: float) -> int:
    """1-based index k of the half-open bin ((k-1)w, kw] holding ``value``."""
    n = round(1 / width)
    k = math.ceil(round(value / width, 9))
    return min(max(k, 1), n)


def sweep_assertions(rules: Iterable[Rule], corpus, kg: KnowledgeGraph) -> dict:
    """Distinct new triples produced by each rule, keyed by rule id."""
    by_rule = defaultdict(set)
    subjects = {}
    for rule, page, listing in rule_matches(corpus, kg, rules):
        if listing.listing_id not in subjects:
            subjects[listing.listing_id] = subject_entities(page, listing)
        for o in resolve_objects(rule, page, listing, kg):
            for s in subjects[listing.listing_id]:
                if s != o and not kg.contains(s, rule.consequent.predicate, o):
                    by_rule[rule.rule_id].add((s, rule.consequent.predicate, o))
    return by_rule


def recommend(bins: list) -> tuple:
    """(threshold, no_clear_drop, drop) from the largest drop between adjacent non-empty bins."""
    filled = [b for b in bins if b.count > 0 and b.tagfit is not None]
    if not filled:
        raise SweepError("no assertions in any bin; set thresholds manually")
    best, best_drop = None, 0.0
    for upper, lower in zip(filled, filled[1:]):
        drop = upper.tagfit - lower.tagfit
        if drop > best_drop + 1e-12:
            best, best_drop = upper, drop
    if best is None:
        return round(filled[-1].lower, 10), True, 0.0
    return round(best.lower, 10), False, best_drop


def sweep_thresholds(rules: Iterable[Rule], corpus, kg: KnowledgeGraph, model: TagModel,
                     metric: str = "conf", kind: str = "type", bin_width: float = 0.05,
                     tau_supp: Optional[float] = None) -> Sweep:
    """Tag fit of assertions per metric bin and the recommended threshold."""
    if metric not in ("conf", "cons"):
        raise SweepError(f"unknown metric {metric!r}")
    if kind not in ("type", "relation"):
        raise SweepError(f"unknown kind {kind!r}")
    tau_supp = DEFAULT_SUPPORT[kind] if tau_supp is None else tau_supp
    rules = [r for r in rules if r.kind == kind and r.supp > tau_supp]
    if not rules:
        raise SweepError("no rules in any bin; set thresholds manually")
    produced = sweep_assertions(rules, corpus, kg)
    n = round(1 / bin_width)
    per_bin = defaultdict(set)
    for r in rules:
        per_bin[bin_index(getattr(r, metric), bin_width)].update(produced.get(r.rule_id, ()))

    bins = []
    running = []
    for k in range(n, 0, -1):
        triples = sorted(per_bin.get(k, ()))
        values = _values([Assertion(*t) for t in triples], model, kg)
        running.extend(values)
        bins.append(CurveBin(
            lower=round((k - 1) * bin_width, 10),
            upper=round(k * bin_width, 10),
            count=len(values),
            tagfit=math.fsum(values) / len(values) if values else None,
            cumulative=math.fsum(running) / len(running) if running else None,
        ))
    recommended, flat, drop = recommend(bins)
    return Sweep(metric, kind, bin_width, bins, recommended, flat, drop)


def write_sweep(sweep: Sweep, path, chart_path=None) -> None:
    Path(path).write_text(sweep.report(), encoding="utf-8")
    if chart_path:
        Path(chart_path).write_text(json.dumps(sweep.chart_data(), indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")
