import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listrules.assertions import Assertion
from listrules.kg import RDF_TYPE, KnowledgeGraph
from listrules.mining import mine_rules
from listrules.synth import WorldConfig, generate_world
from listrules.tagger import TagModel, build_tagprob
from listrules.thresholds import (
    CurveBin,
    SweepError,
    bin_index,
    recommend,
    sweep_thresholds,
    tagfit,
    write_sweep,
)

MODEL = TagModel(
    tagprob={("Album", "WORK_OF_ART"): Fraction("0.49"), ("Album", "PERSON"): Fraction("0.07"),
             ("Person", "PERSON"): Fraction("0.86"), ("Person", "ORG"): Fraction("0.14")},
    entity_tag={"a": "WORK_OF_ART", "b": "PERSON", "c": "PERSON"},
)
KG = KnowledgeGraph(schema={"birthPlace": ("Person", "Place")})


def test_tagfit_means_tag_probabilities():
    pair = [Assertion("a", RDF_TYPE, "Album"), Assertion("b", RDF_TYPE, "Person")]
    assert tagfit(pair, MODEL, KG) == pytest.approx(0.675)
    assert tagfit([Assertion("c", "birthPlace", "Town")], MODEL, KG) == pytest.approx(0.86)
    assert tagfit([], MODEL, KG) is None
    # undefined tag probability counts as zero
    assert tagfit([Assertion("zz", RDF_TYPE, "Album")], MODEL, KG) == 0


def test_pure_types_give_tagfit_one():
    model = TagModel(tagprob={("Album", "WORK_OF_ART"): Fraction(1)}, entity_tag={"a": "WORK_OF_ART"})
    assert tagfit([Assertion("a", RDF_TYPE, "Album")], model, KG) == 1


@pytest.mark.parametrize("value, k", [(0.0, 1), (0.05, 1), (0.0500001, 2), (0.8, 16), (0.8000001, 17), (1.0, 20)])
def test_bins_are_half_open_from_below(value, k):
    assert bin_index(value, 0.05) == k


def _bins(values):
    return [CurveBin(round(1 - (i + 1) * 0.1, 10), round(1 - i * 0.1, 10), 0 if v is None else 1, v, None)
            for i, v in enumerate(values)]


def test_recommend_picks_the_bin_above_the_steepest_drop():
    bins = _bins([0.9, 0.88, None, 0.85, 0.3, 0.25])
    threshold, flat, drop = recommend(bins)
    assert (threshold, flat) == (0.6, False)
    assert drop == pytest.approx(0.55)


def test_recommend_without_drop_and_without_data():
    threshold, flat, _ = recommend(_bins([0.2, 0.5, 0.9]))
    assert flat and threshold == 0.7
    with pytest.raises(SweepError):
        recommend(_bins([None, None]))


@pytest.fixture(scope="module")
def small_world():
    w = generate_world(WorldConfig(n_pages=40, n_contexts=10, n_relation_contexts=4, listings_per_page=4,
                                   n_fuzzy_contexts=4, fuzzy_range=(0.4, 0.7), seed=2))
    return w, mine_rules(w.corpus, w.kg), build_tagprob(w.corpus, w.kg)


def test_cumulative_curve_is_count_weighted_running_mean(small_world):
    w, rules, model = small_world
    sweep = sweep_thresholds(rules, w.corpus, w.kg, model, "conf", "type")
    total = weight = 0.0
    for b in sweep.bins:
        if b.count:
            total += b.tagfit * b.count
            weight += b.count
        if weight:
            assert b.cumulative == pytest.approx(total / weight, abs=1e-12)
        else:
            assert b.cumulative is None
    assert [b.upper for b in sweep.bins][:2] == [1.0, 0.95]
    assert len(sweep.bins) == 20


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["conf", "cons"]))
def test_recommendation_ignores_rule_order(small_world, seed, metric):
    w, rules, model = small_world
    shuffled = list(rules)
    random.Random(seed).shuffle(shuffled)
    a = sweep_thresholds(rules, w.corpus, w.kg, model, metric, "type")
    b = sweep_thresholds(shuffled, w.corpus, w.kg, model, metric, "type")
    assert a.chart_data() == b.chart_data()


def test_relation_recommendation_ignores_rule_order(small_world):
    w, rules, model = small_world
    a = sweep_thresholds(rules, w.corpus, w.kg, model, "conf", "relation")
    b = sweep_thresholds(rules[::-1], w.corpus, w.kg, model, "conf", "relation")
    assert a.chart_data() == b.chart_data()


def test_bad_arguments_and_empty_input(small_world):
    w, rules, model = small_world
    with pytest.raises(SweepError):
        sweep_thresholds(rules, w.corpus, w.kg, model, metric="supp")
    with pytest.raises(SweepError):
        sweep_thresholds(rules, w.corpus, w.kg, model, kind="other")
    with pytest.raises(SweepError, match="manually"):
        sweep_thresholds([], w.corpus, w.kg, model)


def test_report_and_chart_files(small_world, tmp_path):
    w, rules, model = small_world
    sweep = sweep_thresholds(rules, w.corpus, w.kg, model, "cons", "type", bin_width=0.1)
    write_sweep(sweep, tmp_path / "sweep.tsv", tmp_path / "chart.json")
    lines = (tmp_path / "sweep.tsv").read_text().splitlines()
    assert len(lines) == 11
    assert lines[-1].startswith("# recommended type cons threshold:")
    chart = json.loads((tmp_path / "chart.json").read_text())
    assert chart["recommended"] == sweep.recommended
    assert math.isclose(chart["bin_width"], 0.1)
