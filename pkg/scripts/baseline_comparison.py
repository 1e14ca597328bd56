"""Novel subject entities found by mined rules versus the frequency baseline.

    python3 scripts/baseline_comparison.py --novel-rate 0.3 0.4 0.5 --seeds 1 2 3
"""

import argparse
from fractions import Fraction

from listrules.assertions import (
    dedupe_and_subtract,
    entity_report,
    generate,
    generate_baseline,
    infer_from_restrictions,
    tag_filter,
)
from listrules.config import Thresholds
from listrules.mining import mine_rules, select_by_kind
from listrules.synth import WorldConfig, evaluate_rules, generate_world, score
from listrules.tagger import build_tagprob

TAU_TAG = Fraction(1, 3)


def finish(raw, world, model):
    current = tag_filter(dedupe_and_subtract(raw, world.kg), model, world.kg, TAU_TAG)
    inferred = infer_from_restrictions(current, world.kg, prior=current)
    return current + tag_filter(inferred, model, world.kg, TAU_TAG)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--novel-rate", type=float, nargs="+", default=[0.4])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()
    th = Thresholds()
    print("novel_rate\tseed\trule_novel\tbase_novel\tgain\trule_correct\tbase_correct\tspurious_rules")
    for rate in args.novel_rate:
        for seed in args.seeds:
            world = generate_world(WorldConfig(
                n_pages=390, n_contexts=30, n_relation_contexts=20, listings_per_page=5,
                kg_visibility=0.8, se_noise=0.05, tag_noise=0.05, n_noise_listings=50,
                novel_rate=rate, seed=seed))
            model = build_tagprob(world.corpus, world.kg)
            selected = select_by_kind(mine_rules(world.corpus, world.kg), th)
            rule_out = finish(generate(world.corpus, world.kg, selected), world, model)
            base_out = finish(generate_baseline(world.corpus, world.kg, th.type_conf, th.rel_conf, 3),
                              world, model)
            r = entity_report(rule_out, world.kg)["novel_subjects"]
            b = entity_report(base_out, world.kg)["novel_subjects"]
            gain = r / b - 1 if b else float("inf")
            rc = score(rule_out, world.truth)["correctness"]
            bc = score(base_out, world.truth)["correctness"]
            spurious = evaluate_rules(selected, world.corpus, world.kg, world.truth).spurious
            print(f"{rate:.2f}\t{seed}\t{r}\t{b}\t{gain:+.1%}\t{rc:.3f}\t{bc:.3f}\t{spurious}")


if __name__ == "__main__":
    main()
