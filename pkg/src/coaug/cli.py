"""Command line entry point.

Subcommands: synth, label, analyze, augment, evaluate, pipeline.  All
outputs are written atomically (temp file + rename); every command that
writes an --out file also writes a machine-readable run summary next to
it (``<out>.run.json``, carrying inputs, seed, counts and wall time).
Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional

from . import augment as aug
from . import confound, corpus, labeler, metrics, synth
from .corpus import Corpus, LabelSchema, atomic_write_text
from .errors import CoaugError, NoCooccurrence, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are 1
        raise UsageError(f"{self.prog}: {message}")


def default_schema_path() -> str:
    env = os.environ.get("COA_SCHEMA")
    if env:
        return env
    return os.path.join(os.path.dirname(__file__), "data", "default_schema.txt")


def _resolve_scenario(arg: str) -> str:
    if arg == "default":
        return synth.default_scenario_path()
    if arg == "strong_pair":
        return synth.strong_pair_scenario_path()
    return arg


def _load_schema(args) -> LabelSchema:
    return corpus.read_schema(args.schema or default_schema_path())


def _load_matcher(args, schema: LabelSchema) -> labeler.Matcher:
    rules = args.lexicon or labeler.default_lexicon_path()
    cues = args.cues or labeler.default_cues_path()
    return labeler.compile_lexicon(rules, cues, schema)


def _write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _run_sidecar(out_path: str, command: str, inputs: dict, seed: Optional[int],
                 counts: dict, started: float) -> None:
    _write_json(out_path + ".run.json", {
        "command": command,
        "inputs": inputs,
        "seed": seed,
        "counts": counts,
        "wall_time_s": round(time.monotonic() - started, 3),
    })


def _info(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _label_corpus(c: Corpus, matcher: labeler.Matcher) -> Corpus:
    records = tuple(
        r.with_labels(labeler.label_report(r.report, matcher)) for r in c.records
    )
    return Corpus(c.schema, records)


def _ensure_labels(c: Corpus, matcher: labeler.Matcher) -> Corpus:
    if all(r.labels is not None for r in c.records):
        return c
    records = tuple(
        r if r.labels is not None else r.with_labels(labeler.label_report(r.report, matcher))
        for r in c.records
    )
    return Corpus(c.schema, records)


# ---------------------------------------------------------------------------
# pair statistics shared by analyze and pipeline


def pair_statistics(c: Corpus, matcher: labeler.Matcher,
                    pairs: list[tuple[int, int]],
                    stratify=None) -> list[dict]:
    labeled = _ensure_labels(c, matcher)
    firsts = confound.first_mention_table(labeled, matcher)
    blocks = []
    for ia, ib in pairs:
        st = confound.build_contingency(labeled, ia, ib, stratify)
        table = st.aggregate
        block: dict = {
            "a": c.schema.diseases[ia].name,
            "b": c.schema.diseases[ib].name,
            "cells": {"n_pp": table.n_pp, "n_pm": table.n_pm,
                      "n_mp": table.n_mp, "n_mm": table.n_mm},
            "margin_a_pos": table.margin_a_pos,
            "margin_a_neg": table.margin_a_neg,
            "classified": table.cell_total,
            "total_population": table.total_population,
        }
        try:
            p_pp, p_mp, p_pm, p_mm = confound.conditional_probability(table)
            block["conditionals"] = {
                "p_bpos_given_apos": round(p_pp, 3),
                "p_bpos_given_aneg": round(p_mp, 3),
                "p_bneg_given_apos": round(p_pm, 3),
                "p_bneg_given_aneg": round(p_mm, 3),
            }
        except CoaugError:
            block["conditionals"] = None
        try:
            stats = confound.association_stats(table)
            block["odds_ratio"] = stats.odds_ratio
            block["independence_gap"] = stats.independence_gap
        except CoaugError:
            block["odds_ratio"] = None
            block["independence_gap"] = None
        try:
            block["co_mention_lift"] = confound.co_mention_lift(labeled, ia, ib)
        except CoaugError:
            block["co_mention_lift"] = None
        try:
            oa = confound.order_asymmetry_from_table(firsts, ia, ib)
            block["order_asymmetry"] = oa.asym
            block["co_occurrences"] = oa.co_occur_count
        except NoCooccurrence:
            block["order_asymmetry"] = None
            block["co_occurrences"] = 0
        if stratify is not None:
            block["simpson_reversal"] = confound.detect_simpson_reversal(st).reversal
        else:
            block["simpson_reversal"] = None
        blocks.append(block)
    return blocks


def _fmt_opt(value, spec="{:.6g}") -> str:
    return "n/a" if value is None else spec.format(value)


def render_analysis(blocks: list[dict], n_records: int) -> str:
    lines = [f"records: {n_records}", ""]
    for b in blocks:
        lines.append(f"pair: {b['a']} ~ {b['b']}")
        c = b["cells"]
        lines.append(
            f"  cells: n_pp={c['n_pp']} n_pm={c['n_pm']} n_mp={c['n_mp']} n_mm={c['n_mm']}"
        )
        lines.append(
            f"  margins: a_pos={b['margin_a_pos']} a_neg={b['margin_a_neg']}"
            f" classified={b['classified']} total={b['total_population']}"
        )
        cond = b["conditionals"]
        if cond is None:
            lines.append("  conditionals: n/a")
        else:
            lines.append(
                "  p(b+|a+)={:.3f}  p(b+|a-)={:.3f}  p(b-|a+)={:.3f}  p(b-|a-)={:.3f}".format(
                    cond["p_bpos_given_apos"], cond["p_bpos_given_aneg"],
                    cond["p_bneg_given_apos"], cond["p_bneg_given_aneg"],
                )
            )
        lines.append(
            f"  odds_ratio={_fmt_opt(b['odds_ratio'])}"
            f"  independence_gap={_fmt_opt(b['independence_gap'])}"
        )
        lines.append(
            f"  co_mention_lift={_fmt_opt(b['co_mention_lift'])}"
            f"  order_asymmetry={_fmt_opt(b['order_asymmetry'])}"
            f" (co_occurrences={b['co_occurrences']})"
        )
        if b["simpson_reversal"] is None:
            lines.append("  simpson_reversal: n/a")
        else:
            lines.append(f"  simpson_reversal: {'yes' if b['simpson_reversal'] else 'no'}")
        lines.append("")
    return "\n".join(lines)


def _parse_pairs(spec_arg: Optional[str], schema: LabelSchema) -> list[tuple[int, int]]:
    if not spec_arg:
        n = len(schema)
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    pairs = []
    for chunk in spec_arg.split(";"):
        names = chunk.split(",")
        if len(names) != 2:
            raise UsageError(f"bad pair {chunk!r}, expected 'A,B'")
        pairs.append((schema.index_of(names[0].strip()), schema.index_of(names[1].strip())))
    return pairs


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    started = time.monotonic()
    schema = _load_schema(args)
    cfg = synth.parse_scenario(_resolve_scenario(args.scenario), schema)
    if args.n is not None:
        cfg = synth.SynthConfig(**{**cfg.__dict__, "n_records": args.n})
    if args.seed is not None:
        cfg = synth.SynthConfig(**{**cfg.__dict__, "seed": args.seed})
    c = synth.synth_generate(cfg, schema, threads=args.threads)
    corpus.write_corpus(c, args.out)
    _run_sidecar(args.out, "synth",
                 {"scenario": os.path.basename(args.scenario)},
                 cfg.seed, {"records": len(c)}, started)
    _info(args, f"synth: wrote {len(c)} records to {args.out}")
    return EXIT_OK


def _cmd_label(args) -> int:
    started = time.monotonic()
    schema = _load_schema(args)
    matcher = _load_matcher(args, schema)
    c = corpus.read_corpus(args.corpus, schema)
    labeled = _label_corpus(c, matcher)
    corpus.write_corpus(labeled, args.out)
    _run_sidecar(args.out, "label",
                 {"corpus": os.path.basename(args.corpus)},
                 None, {"records": len(labeled)}, started)
    _info(args, f"label: wrote {len(labeled)} labeled records to {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    started = time.monotonic()
    schema = _load_schema(args)
    matcher = _load_matcher(args, schema)
    c = corpus.read_corpus(args.corpus, schema)
    pairs = _parse_pairs(args.pairs, schema)
    stratify = None
    if args.stratify == "provenance":
        stratify = "provenance"
    elif args.stratify and args.stratify.startswith("disease:"):
        stratify = schema.index_of(args.stratify[len("disease:"):])
    elif args.stratify not in (None, "none"):
        raise UsageError(f"unknown stratifier {args.stratify!r}")
    blocks = pair_statistics(c, matcher, pairs, stratify)
    atomic_write_text(args.out, render_analysis(blocks, len(c)))
    _run_sidecar(args.out, "analyze",
                 {"corpus": os.path.basename(args.corpus)},
                 None, {"records": len(c), "pairs": len(pairs)}, started)
    _info(args, f"analyze: wrote {len(pairs)} pair blocks to {args.out}")
    return EXIT_OK


def _cmd_augment(args) -> int:
    started = time.monotonic()
    schema = _load_schema(args)
    matcher = _load_matcher(args, schema)
    c = corpus.read_corpus(args.corpus, schema)
    cfg = aug.AugmentationConfig(
        rate=args.rate,
        seed=args.seed if args.seed is not None else 0,
        enable_css=not args.no_css,
        enable_crr=not args.no_crr,
    )
    augmented, summary = aug.augment_dataset(c, matcher, cfg, threads=args.threads)
    corpus.write_corpus(augmented, args.out)
    if args.summary:
        _write_json(args.summary, summary.to_dict())
    _run_sidecar(args.out, "augment",
                 {"corpus": os.path.basename(args.corpus)},
                 cfg.seed, summary.to_dict(), started)
    _info(args, f"augment: {summary.augmented} twins, {summary.skipped} skipped, "
                f"wrote {len(augmented)} records to {args.out}")
    return EXIT_OK


_METRIC_CHOICES = ("ce", "bleu4", "rougel")


def _cmd_evaluate(args) -> int:
    started = time.monotonic()
    schema = _load_schema(args)
    matcher = _load_matcher(args, schema)
    gold = corpus.read_corpus(args.gold, schema)
    gen = corpus.read_corpus(args.generated, schema)
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in wanted:
        if m not in _METRIC_CHOICES:
            raise UsageError(f"unknown metric {m!r} (choose from {', '.join(_METRIC_CHOICES)})")
    if len(gold) != len(gen):
        raise CoaugError(
            f"gold has {len(gold)} records, generated has {len(gen)}"
        ) from None

    scores: dict = {"records": len(gold)}
    if "ce" in wanted:
        gold_labels = [labeler.label_report(r.report, matcher) for r in gold]
        gen_labels = [labeler.label_report(r.report, matcher) for r in gen]
        counts = metrics.ce_confusion(gold_labels, gen_labels)
        ce = metrics.ce_scores(counts)
        scores["counts"] = {"tp": counts.tp, "fp": counts.fp,
                            "fn": counts.fn, "tn": counts.tn}
        scores["ce"] = {"accuracy": ce.accuracy, "precision": ce.precision,
                        "recall": ce.recall, "f1": ce.f1}
        if args.macro:
            mc = metrics.macro_ce_scores(
                metrics.ce_confusion_per_disease(gold_labels, gen_labels)
            )
            scores["ce_macro"] = {"accuracy": mc.accuracy, "precision": mc.precision,
                                  "recall": mc.recall, "f1": mc.f1}
    gold_reports = [r.report for r in gold]
    gen_reports = [r.report for r in gen]
    if "bleu4" in wanted:
        precisions, bp, score = metrics.bleu_stats(gold_reports, gen_reports)
        scores["bleu4"] = score
        scores["bleu4_precisions"] = precisions
        scores["bleu4_brevity_penalty"] = bp
    if "rougel" in wanted:
        scores["rouge_l"] = metrics.rouge_l(gold_reports, gen_reports)
    _write_json(args.out, scores)
    _run_sidecar(args.out, "evaluate",
                 {"gold": os.path.basename(args.gold),
                  "generated": os.path.basename(args.generated)},
                 None, {"records": len(gold)}, started)
    _info(args, f"evaluate: wrote scores to {args.out}")
    return EXIT_OK


def run_pipeline(scenario_path: str, seed: Optional[int], outdir: str,
                 n: Optional[int] = None, rate: float = 1.0, threads: int = 1,
                 schema_path: Optional[str] = None, quiet: bool = True) -> dict:
    """synth -> label -> analyze(before) -> augment -> analyze(after),
    writing every artifact under *outdir* and returning the summary."""
    schema = corpus.read_schema(schema_path or default_schema_path())
    matcher = labeler.default_matcher(schema)
    cfg = synth.parse_scenario(scenario_path, schema)
    overrides = {}
    if n is not None:
        overrides["n_records"] = n
    if seed is not None:
        overrides["seed"] = seed
    if overrides:
        cfg = synth.SynthConfig(**{**cfg.__dict__, **overrides})

    os.makedirs(outdir, exist_ok=True)
    original = synth.synth_generate(cfg, schema, threads=threads)
    corpus.write_corpus(original, os.path.join(outdir, "original.jsonl"))

    labeled = _label_corpus(original, matcher)
    corpus.write_corpus(labeled, os.path.join(outdir, "labeled.jsonl"))

    if cfg.planted:
        pairs = [(p.a, p.b) for p in cfg.planted]
    else:
        n_c = len(schema)
        pairs = [(i, j) for i in range(n_c) for j in range(i + 1, n_c)]

    before = pair_statistics(labeled, matcher, pairs)
    atomic_write_text(os.path.join(outdir, "before.txt"),
                      render_analysis(before, len(labeled)))

    acfg = aug.AugmentationConfig(rate=rate, seed=cfg.seed)
    augmented, asummary = aug.augment_dataset(labeled, matcher, acfg, threads=threads)
    augmented = _ensure_labels(augmented, matcher)
    corpus.write_corpus(augmented, os.path.join(outdir, "augmented.jsonl"))

    after = pair_statistics(augmented, matcher, pairs)
    atomic_write_text(os.path.join(outdir, "after.txt"),
                      render_analysis(after, len(augmented)))

    summary = {
        "scenario": os.path.basename(scenario_path),
        "seed": cfg.seed,
        "records_original": len(original),
        "records_augmented": len(augmented),
        "augmentation": asummary.to_dict(),
        "pairs": [
            {
                "a": blk_before["a"],
                "b": blk_before["b"],
                "before": {key: blk_before[key] for key in
                           ("co_mention_lift", "independence_gap", "order_asymmetry")},
                "after": {key: blk_after[key] for key in
                          ("co_mention_lift", "independence_gap", "order_asymmetry")},
            }
            for blk_before, blk_after in zip(before, after)
        ],
    }
    _write_json(os.path.join(outdir, "summary.json"), summary)
    return summary


def _cmd_pipeline(args) -> int:
    started = time.monotonic()
    summary = run_pipeline(
        _resolve_scenario(args.scenario), args.seed, args.outdir,
        n=args.n, rate=args.rate, threads=args.threads,
        schema_path=args.schema, quiet=args.quiet,
    )
    _run_sidecar(os.path.join(args.outdir, "summary.json"), "pipeline",
                 {"scenario": os.path.basename(args.scenario)},
                 summary["seed"],
                 {"records_augmented": summary["records_augmented"]}, started)
    _info(args, f"pipeline: artifacts in {args.outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="coaug", description=__doc__)
    # Global flags are accepted before or after the subcommand.  The root
    # parser carries the real defaults; the copy attached to every
    # subparser uses SUPPRESS so a flag given before the subcommand is
    # not clobbered by a default afterwards.
    common = _Parser(add_help=False)
    for target, defaults in ((parser, {}), (common, None)):
        def dflt(value):
            return argparse.SUPPRESS if defaults is None else value

        target.add_argument("--schema", default=dflt(None),
                            help="label schema file (default: COA_SCHEMA or packaged)")
        target.add_argument("--threads", type=int, default=dflt(1),
                            help="worker threads; output is identical for any value")
        target.add_argument("--quiet", action="store_true", default=dflt(False),
                            help="suppress status messages")
        target.add_argument("--seed", type=int, default=dflt(None),
                            help="seed for seeded subcommands")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--scenario", required=True,
                   help="scenario file, or 'default' / 'strong_pair'")
    p.add_argument("--n", type=int, default=None, help="override scenario n_records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("label", parents=[common], help="attach report-level labels to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--cues", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("analyze", parents=[common], help="per-pair association report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--cues", default=None)
    p.add_argument("--pairs", default=None, help="'A,B;C,D' (default: all pairs)")
    p.add_argument("--stratify", default=None,
                   help="none | provenance | disease:<name>")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("augment", parents=[common], help="add counterfactual twins to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--cues", default=None)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--no-css", action="store_true",
                   help="disable sentence popping / feature masking")
    p.add_argument("--no-crr", action="store_true", help="disable sentence reordering")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="write augmentation counts here")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("evaluate", parents=[common], help="score generated reports against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--cues", default=None)
    p.add_argument("--metrics", default="ce,bleu4,rougel")
    p.add_argument("--macro", action="store_true", help="also report macro-averaged label scores")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="synth + label + analyze + augment + analyze")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_pipeline)
    return parser


def _validate(args) -> None:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    rate = getattr(args, "rate", None)
    if rate is not None and not 0.0 <= rate <= 1.0:
        raise UsageError(f"--rate must be in [0, 1], got {rate}")


def run(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CoaugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 3
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
