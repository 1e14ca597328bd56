"""Command-line entry point: one subcommand per pipeline stage, plus ``pipeline``."""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .assertions import (
    Diagnostics,
    dedupe_and_subtract,
    entity_report,
    generate,
    generate_baseline,
    infer_from_restrictions,
    load_assertions,
    novel_entities,
    tag_filter,
    write_assertions,
    write_novel_entities,
)
from .corpus import CorpusError, build_corpus, corpus_stats, load_corpus, write_corpus
from .kg import KGError, load_kg, load_kg_dir
from .mining import MiningConfig, load_rules, mine_rules, select_by_kind, write_rules
from .subjects import detect_subject_entities, se_stats
from .synth import WorldConfig, format_metrics, generate_world, load_truth, score, stratified_sample, write_world
from .tagger import build_tagprob, harmonize_tags, load_gazetteer, tag_corpus, write_tagprob
from .thresholds import SweepError, sweep_thresholds, write_sweep
from .wikitext import expand_links, extract_from_wikitext

logger = logging.getLogger("listrules")


class CLIError(Exception):
    pass


class Outputs:
    """Write to temporary siblings; rename into place only when the stage succeeds."""

    def __init__(self):
        self.pending = []

    def path(self, final) -> Path:
        final = Path(final)
        final.parent.mkdir(parents=True, exist_ok=True)
        tmp = final.with_name(f".{final.name}.partial")
        self.pending.append((tmp, final))
        return tmp

    def commit(self):
        for tmp, final in self.pending:
            if tmp.is_dir():
                if final.exists():
                    _rmtree(final)
                tmp.rename(final)
            elif tmp.exists():
                os.replace(tmp, final)
        self.pending = []

    def abort(self):
        for tmp, _ in self.pending:
            if tmp.is_dir():
                _rmtree(tmp)
            elif tmp.exists():
                tmp.unlink()
        self.pending = []


def _rmtree(path: Path):
    for child in path.iterdir():
        if child.is_dir():
            _rmtree(child)
        else:
            child.unlink()
    path.rmdir()


def _need(path, what):
    if path is None:
        raise CLIError(f"missing --{what}")
    if not Path(path).exists():
        raise CLIError(f"{what} input not found: {path}")
    return Path(path)


def load_graph(args):
    path = _need(args.kg, "kg")
    if path.is_dir():
        return load_kg_dir(path)
    return load_kg(path, getattr(args, "schema", None), getattr(args, "restrictions", None),
                   getattr(args, "hierarchy", None))


def _sha(path) -> str:
    path = Path(path)
    if path.is_dir():
        h = hashlib.sha256()
        # top-level files only, so a work directory nested inside does not count
        for f in sorted(p for p in path.iterdir() if p.is_file()):
            h.update(f.name.encode())
            h.update(f.read_bytes())
        return h.hexdigest()
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- stages (path in, path out) ------------------------------------------------------


def stage_extract(markup_dir, out, settings, expand=True):
    d = _need(markup_dir, "markup-dir")
    files = sorted(p for p in d.iterdir() if p.is_file())
    known = {p.stem if p.suffix in (".wiki", ".txt") else p.name for p in files}
    pages = []
    for f in files:
        title = f.stem if f.suffix in (".wiki", ".txt") else f.name
        result = extract_from_wikitext(f.read_text(encoding="utf-8"), title, known)
        for w in result.warnings:
            logger.warning("%s: %s", title, w)
        pages.append(expand_links(result.page) if expand else result.page)
    corpus = build_corpus(pages, min_rows=settings.min_rows)
    if corpus.dropped:
        logger.info("dropped %d listings with fewer than %d rows", corpus.dropped, settings.min_rows)
    write_corpus(corpus, out)


def stage_tag(corpus_path, out, settings, gazetteer=None, kg=None, tagprob_out=None):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    gaz = load_gazetteer(gazetteer) if gazetteer else {}
    corpus = tag_corpus(corpus, gaz, settings.fallback)
    if kg is not None:
        corpus = harmonize_tags(corpus, kg)
    write_corpus(corpus, out)
    if tagprob_out and kg is not None:
        if not any(m.is_subject for _, l in corpus.listings() for m in l.mentions()):
            logger.warning("no subject entities marked yet; tag probabilities need detect-se first")
        write_tagprob(build_tagprob(corpus, kg), tagprob_out)


def stage_detect(corpus_path, out, kg=None, tagprob_out=None):
    corpus = detect_subject_entities(load_corpus(_need(corpus_path, "corpus")), kg)
    write_corpus(corpus, out)
    if tagprob_out and kg is not None:
        write_tagprob(build_tagprob(corpus, kg), tagprob_out)


def stage_mine(corpus_path, kg, out, settings):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    rules = mine_rules(corpus, kg, MiningConfig(max_pattern_size=settings.max_pattern_size,
                                                threads=settings.threads))
    write_rules(rules, out)


def stage_thresholds(rules_path, corpus_path, kg, out, settings, metric, kind, chart=None):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    rules = load_rules(_need(rules_path, "rules"))
    model = build_tagprob(corpus, kg)
    supp = settings.thresholds.type_supp if kind == "type" else settings.thresholds.rel_supp
    sweep = sweep_thresholds(rules, corpus, kg, model, metric, kind, settings.bin_width, supp)
    write_sweep(sweep, out, chart)
    return sweep


def stage_generate(corpus_path, kg, out, settings, approach="rule", rules_path=None):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    diag = Diagnostics()
    if approach == "rule":
        rules = select_by_kind(load_rules(_need(rules_path, "rules")), settings.thresholds)
        raw = generate(corpus, kg, rules, diag)
    elif approach == "baseline":
        th = settings.thresholds
        tau_type = th.type_conf if settings.tau_freq is None else settings.tau_freq
        tau_rel = th.rel_conf if settings.tau_freq is None else settings.tau_freq
        raw = generate_baseline(corpus, kg, tau_type, tau_rel, settings.min_se)
    else:
        raise CLIError(f"unknown approach {approach!r}")
    if diag.unresolved:
        logger.info("placeholder unresolved for %d rule/listing pairs", sum(diag.unresolved.values()))
    write_assertions(dedupe_and_subtract(raw, kg), out)


def stage_filter(assertions_path, corpus_path, kg, out, settings, novel_out=None):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    model = build_tagprob(corpus, kg)
    diag = Diagnostics()
    filtered = tag_filter(load_assertions(_need(assertions_path, "assertions")), model, kg,
                          settings.tau_tag, diag)
    if diag.untagged:
        logger.info("%d assertions had an untagged subject", diag.untagged)
    write_assertions(filtered, out)
    if novel_out:
        write_novel_entities(novel_entities(filtered, corpus, kg), novel_out)


def stage_infer(assertions_path, corpus_path, kg, out, settings):
    corpus = load_corpus(_need(corpus_path, "corpus"))
    current = load_assertions(_need(assertions_path, "assertions"))
    model = build_tagprob(corpus, kg)
    # iterate until no new relation appears (restrictions only yield relations, so one round suffices)
    inferred = infer_from_restrictions(current, kg, prior=current)
    inferred = tag_filter(inferred, model, kg, settings.tau_tag)
    write_assertions(current + inferred, out)


def stage_evaluate(assertions_path, truth_dir, out, settings, kg=None, sample=None):
    truth = load_truth(_need(truth_dir, "truth"))
    assertions = load_assertions(_need(assertions_path, "assertions"))
    if sample:
        accepted = [a for a in assertions if a.status == "accepted"]
        assertions = stratified_sample(
            accepted, lambda a: truth.page_types.get(a.provenance[0][1].rsplit("/", 1)[0], "") if a.provenance else "",
            sample, settings.seed)
    metrics = score(assertions, truth, kg)
    Path(out).write_text(format_metrics(metrics), encoding="utf-8")
    return metrics


# -- argument handling ---------------------------------------------------------------

_SETTING_FLAGS = {
    "tau_conf": float, "tau_cons": float, "tau_supp_type": float, "tau_supp_rel": float,
    "tau_conf_type": float, "tau_conf_rel": float, "tau_cons_type": float, "tau_cons_rel": float,
    "tau_tag": str, "tau_freq": float, "min_se": int, "bin_width": float, "min_rows": int,
    "max_pattern_size": int, "threads": int, "seed": int, "fallback": str,
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--manifest", help="write effective settings and input digests here")
    for name, typ in _SETTING_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def _kg_flags(p, required=True):
    p.add_argument("--kg", required=required, help="triples file or directory with kg.tsv etc.")
    p.add_argument("--schema")
    p.add_argument("--restrictions")
    p.add_argument("--hierarchy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="listrules", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="wiki markup directory -> corpus file")
    p.add_argument("--markup-dir", required=True)
    p.add_argument("--no-expand", action="store_true")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("tag", help="assign and harmonize named-entity tags")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer")
    _kg_flags(p, required=False)
    p.add_argument("--tagprob-out")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("detect-se", help="mark subject entities")
    p.add_argument("--corpus", required=True)
    _kg_flags(p, required=False)
    p.add_argument("--tagprob-out", help="tag probabilities over the detected subjects (needs --kg)")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("mine", help="mine rules with metrics")
    p.add_argument("--corpus", required=True)
    _kg_flags(p)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("thresholds", help="tag-fit sweep and threshold recommendation")
    p.add_argument("--rules", required=True)
    p.add_argument("--corpus", required=True)
    _kg_flags(p)
    p.add_argument("--metric", choices=["conf", "cons"], default="conf")
    p.add_argument("--kind", choices=["type", "relation"], default="type")
    p.add_argument("--chart")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("generate", help="apply selected rules (or the baseline) to every listing")
    p.add_argument("--approach", choices=["rule", "baseline"], default="rule")
    p.add_argument("--rules")
    p.add_argument("--corpus", required=True)
    _kg_flags(p)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("filter", help="tag-probability filter")
    p.add_argument("--assertions", required=True)
    p.add_argument("--corpus", required=True)
    _kg_flags(p)
    p.add_argument("--novel-out")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("infer", help="relations implied by value restrictions")
    p.add_argument("--assertions", required=True)
    p.add_argument("--corpus", required=True)
    _kg_flags(p)
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("evaluate", help="score assertions against a synthetic world")
    p.add_argument("--assertions", required=True)
    p.add_argument("--truth", required=True, help="world bundle directory")
    p.add_argument("--sample", type=int, help="stratified sample size (by page type)")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("synth", help="write a synthetic world bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, help="sets both --se-noise and --tag-noise")
    for f in WorldConfig.__dataclass_fields__.values():
        if f.name in ("seed",) or isinstance(f.default, tuple):
            continue
        p.add_argument("--" + f.name.replace("_", "-"), dest="w_" + f.name,
                       type=type(f.default), default=None)
    p.add_argument("--rows-range", nargs=2, type=int)
    _common(p)

    p = sub.add_parser("stats", help="corpus, subject-entity and assertion summaries")
    p.add_argument("--corpus")
    p.add_argument("--assertions")
    _kg_flags(p, required=False)
    p.add_argument("--out")
    _common(p)

    p = sub.add_parser("pipeline", help="tag, detect-se, mine, generate, filter and infer in one go")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus")
    src.add_argument("--markup-dir")
    p.add_argument("--gazetteer")
    _kg_flags(p)
    p.add_argument("--approach", choices=["rule", "baseline"], default="rule")
    p.add_argument("--workdir", required=True)
    _common(p)
    return parser


def _settings(args) -> cfgmod.Settings:
    flags = {k: getattr(args, k, None) for k in _SETTING_FLAGS}
    return cfgmod.resolve(args.config, flags)


def _stats_text(args, kg) -> str:
    lines = []
    if args.corpus:
        corpus = load_corpus(_need(args.corpus, "corpus"))
        st = corpus_stats(corpus)
        for k, v in sorted(vars(st).items()):
            if isinstance(v, dict):
                for kk, vv in v.items():
                    lines.append(f"{k}_{kk}\t{vv:.6f}\n" if isinstance(vv, float) else f"{k}_{kk}\t{vv}\n")
            else:
                lines.append(f"{k}\t{v}\n")
        for k, v in se_stats(corpus).items():
            lines.append(f"se_{k}\t{v:.6f}\n" if isinstance(v, float) else f"se_{k}\t{v}\n")
    if args.assertions:
        if kg is None:
            raise CLIError("--assertions needs --kg")
        report = entity_report(load_assertions(_need(args.assertions, "assertions")), kg)
        for k, v in report.items():
            lines.append(f"{k}\t{v:.6f}\n" if isinstance(v, float) else f"{k}\t{v}\n")
    return "".join(lines)


def run_pipeline(args, settings, out: Outputs) -> dict:
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    kg = load_graph(args)
    files = {}
    if args.markup_dir:
        files["corpus"] = work / "corpus.jsonl"
        stage_extract(args.markup_dir, out.path(files["corpus"]), settings)
        out.commit()
        corpus_in = files["corpus"]
    else:
        corpus_in = Path(args.corpus)
    steps = [
        ("tagged", "tagged.jsonl", lambda p: stage_tag(corpus_in, p, settings, args.gazetteer, kg)),
        ("marked", "marked.jsonl", lambda p: stage_detect(files["tagged"], p, kg, out.path(work / "tagprob.tsv"))),
    ]
    if args.approach == "rule":
        steps.append(("rules", "rules.tsv", lambda p: stage_mine(files["marked"], kg, p, settings)))
    steps += [
        ("raw", "assertions.raw.tsv", lambda p: stage_generate(files["marked"], kg, p, settings,
                                                               args.approach, files.get("rules"))),
        ("filtered", "assertions.filtered.tsv", lambda p: stage_filter(
            files["raw"], files["marked"], kg, p, settings, out.path(work / "novel_entities.tsv"))),
        ("final", "assertions.tsv", lambda p: stage_infer(files["filtered"], files["marked"], kg, p, settings)),
    ]
    written = [files["corpus"]] if "corpus" in files else []
    try:
        for key, name, fn in steps:
            files[key] = work / name
            fn(out.path(files[key]))
            written += [final for _, final in out.pending]
            out.commit()
            logger.info("wrote %s", files[key])
    except Exception:
        # a failed run leaves no stage outputs behind
        for f in written:
            if f.exists():
                f.unlink()
        raise
    return {k: v.name for k, v in files.items()}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    out = Outputs()
    try:
        settings = _settings(args)
        kg = None
        if getattr(args, "kg", None):
            kg = load_graph(args)
        cmd = args.command
        extra = {"command": cmd}
        if cmd == "extract":
            stage_extract(args.markup_dir, out.path(args.out), settings, expand=not args.no_expand)
        elif cmd == "tag":
            stage_tag(args.corpus, out.path(args.out), settings, args.gazetteer, kg,
                      out.path(args.tagprob_out) if args.tagprob_out else None)
        elif cmd == "detect-se":
            stage_detect(args.corpus, out.path(args.out), kg,
                         out.path(args.tagprob_out) if args.tagprob_out else None)
        elif cmd == "mine":
            stage_mine(args.corpus, kg, out.path(args.out), settings)
        elif cmd == "thresholds":
            sweep = stage_thresholds(args.rules, args.corpus, kg, out.path(args.out), settings,
                                     args.metric, args.kind, out.path(args.chart) if args.chart else None)
            flag = " (no clear drop)" if sweep.no_clear_drop else ""
            print(f"recommended {args.kind} {args.metric} threshold: {sweep.recommended:.2f}{flag}")
        elif cmd == "generate":
            stage_generate(args.corpus, kg, out.path(args.out), settings, args.approach, args.rules)
        elif cmd == "filter":
            stage_filter(args.assertions, args.corpus, kg, out.path(args.out), settings,
                         out.path(args.novel_out) if args.novel_out else None)
        elif cmd == "infer":
            stage_infer(args.assertions, args.corpus, kg, out.path(args.out), settings)
        elif cmd == "evaluate":
            metrics = stage_evaluate(args.assertions, args.truth, out.path(args.out), settings,
                                     load_kg_dir(args.truth), args.sample)
            sys.stdout.write(format_metrics(metrics))
        elif cmd == "synth":
            world_cfg = synth_config(args, settings)
            write_world(generate_world(world_cfg), out.path(args.out))
        elif cmd == "stats":
            text = _stats_text(args, kg)
            if args.out:
                out.path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
        elif cmd == "pipeline":
            extra["files"] = run_pipeline(args, settings, out)
        inputs = {}
        for name in ("corpus", "kg", "rules", "assertions", "gazetteer", "markup_dir", "truth"):
            value = getattr(args, name, None)
            if value and Path(value).exists():
                inputs[name] = {"path": str(value), "sha256": _sha(value)}
        extra["inputs"] = inputs
        if args.manifest:
            cfgmod.write_manifest(settings, out.path(args.manifest), extra)
        out.commit()
        if cmd == "pipeline" and not args.manifest:
            cfgmod.write_manifest(settings, Path(args.workdir) / "manifest.json", extra)
        return 0
    except (CLIError, CorpusError, KGError, SweepError, cfgmod.ConfigError, ValueError, OSError) as exc:
        out.abort()
        print(f"listrules {args.command}: error: {exc}", file=sys.stderr)
        return 2


def synth_config(args, settings) -> WorldConfig:
    values = {}
    for name in WorldConfig.__dataclass_fields__:
        v = getattr(args, "w_" + name, None)
        if v is not None:
            values[name] = v
    if args.noise is not None:
        values.setdefault("se_noise", args.noise)
        values.setdefault("tag_noise", args.noise)
    if args.rows_range:
        values["rows_range"] = tuple(args.rows_range)
    values["seed"] = settings.seed
    return WorldConfig(**values)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
