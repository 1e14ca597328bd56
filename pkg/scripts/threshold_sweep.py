"""Tag-fit sweeps on worlds with fuzzy contexts; prints the recommended threshold per seed.

    python3 scripts/threshold_sweep.py --metric conf --seeds 0 1 2
"""

import argparse

from listrules.mining import mine_rules
from listrules.synth import WorldConfig, generate_world
from listrules.tagger import build_tagprob
from listrules.thresholds import sweep_thresholds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--metric", choices=["conf", "cons"], default="conf")
    ap.add_argument("--kind", choices=["type", "relation"], default="type")
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    ap.add_argument("--curve", action="store_true", help="also print every bin")
    args = ap.parse_args()
    for seed in args.seeds:
        cfg = WorldConfig(n_pages=120, n_contexts=16, n_relation_contexts=0, listings_per_page=4,
                          n_fuzzy_contexts=8, fuzzy_range=(0.4, 0.7), purity_range=(0.85, 0.97),
                          kg_visibility=0.8, seed=seed)
        world = generate_world(cfg)
        model = build_tagprob(world.corpus, world.kg)
        sweep = sweep_thresholds(mine_rules(world.corpus, world.kg), world.corpus, world.kg, model,
                                 args.metric, args.kind)
        flag = " (no clear drop)" if sweep.no_clear_drop else ""
        print(f"seed {seed}: recommended {sweep.recommended:.2f}{flag}")
        if args.curve:
            for b in sweep.bins:
                fit = "-" if b.tagfit is None else f"{b.tagfit:.3f}"
                cum = "-" if b.cumulative is None else f"{b.cumulative:.3f}"
                print(f"  ({b.lower:.2f}, {b.upper:.2f}]\t{b.count}\t{fit}\t{cum}")


if __name__ == "__main__":
    main()
