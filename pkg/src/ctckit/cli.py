"""Command line interface.

Subcommands:
    normalize   read raw lines on stdin, write normalized lines on stdout
    lm-train    count, prune and estimate an ARPA n-gram model
    lm-ppl      perplexity of text under an ARPA model
    decode      decode CTCE emission files listed in a manifest
    score       WER of line-aligned hypothesis/reference files
    stats       hours / utterances / words of a manifest
    synth       synthesize CTCE emissions for manifest transcripts
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ctc, lm, metrics, synth
from .alphabet import build_alphabet, read_alphabet_file
from .emissions import read_ctce, write_ctce
from .normalize import DEFAULT_RULES, NormalizationRules, normalize_transcript


def _load_rules(path: str | None) -> NormalizationRules:
    return NormalizationRules.from_json_file(path) if path else DEFAULT_RULES


def _load_alphabet(args):
    if getattr(args, "alphabet", None):
        return read_alphabet_file(args.alphabet)
    return build_alphabet(args.language)


def cmd_normalize(args) -> int:
    rules = _load_rules(args.rules)
    for line in sys.stdin:
        print(normalize_transcript(line.rstrip("\n"), rules))
    return 0


def cmd_lm_train(args) -> int:
    thresholds = [int(x) for x in args.prune.split(",")] if args.prune \
        else [1] * args.order
    if len(thresholds) != args.order:
        print(f"error: need {args.order} prune thresholds", file=sys.stderr)
        return 2
    with open(args.infile, encoding="utf-8") as f:
        counts = lm.count_ngrams(f, args.order)
    counts = lm.prune_counts(counts, thresholds)
    model = lm.estimate(counts)
    lm.write_arpa(model, args.out)
    for k in range(model.order):
        print(f"order {k + 1}: {len(model.prob[k])} entries", file=sys.stderr)
    return 0


def cmd_lm_ppl(args) -> int:
    model = lm.read_arpa(args.model)
    with open(args.infile, encoding="utf-8") as f:
        ppl = lm.perplexity(model, f)
    print(f"{ppl:.4f}")
    return 0


def cmd_decode(args) -> int:
    alphabet = _load_alphabet(args)
    model = lm.read_arpa(args.lm) if args.lm else None
    config = ctc.BeamConfig(
        beam_width=args.beam_width,
        lm_weight=args.alpha,
        word_bonus=args.beta,
        token_min_logp=args.token_min_logp,
    )
    base = Path(args.manifest).parent
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for entry in metrics.read_manifest(args.manifest):
            if entry.emissions is None:
                print(f"warning: {entry.id} has no emissions, skipped",
                      file=sys.stderr)
                continue
            emissions = read_ctce(base / entry.emissions)
            if args.greedy:
                result = ctc.greedy_decode(emissions, alphabet)
            else:
                result = ctc.beam_search_decode(emissions, alphabet, model, config)[0]
            print(f"{entry.id}\t{result.transcript}", file=out)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_score(args) -> int:
    with open(args.ref, encoding="utf-8") as f:
        refs = f.read().splitlines()
    with open(args.hyp, encoding="utf-8") as f:
        hyps = f.read().splitlines()
    if len(refs) != len(hyps):
        print(
            f"error: {len(refs)} references vs {len(hyps)} hypotheses",
            file=sys.stderr,
        )
        return 2
    report = metrics.corpus_wer(zip(refs, hyps), _load_rules(args.rules))
    print(report)
    return 0


def cmd_stats(args) -> int:
    entries = metrics.read_manifest(args.manifest)
    result = metrics.stats(entries, _load_rules(args.rules))
    print(result.table_row())
    return 0


def cmd_synth(args) -> int:
    alphabet = _load_alphabet(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = metrics.read_manifest(args.manifest)
    updated = []
    for i, entry in enumerate(entries):
        config = synth.SynthesisConfig(
            frames_per_grapheme=args.frames_per_grapheme,
            blank_prob=args.blank_prob,
            confusion_temp=args.temp,
            rng_seed=synth.derive_seed(args.seed, i),
        )
        text = normalize_transcript(entry.text)
        emissions = synth.synth_emissions(text, alphabet, config)
        filename = f"{entry.id}.ctce"
        write_ctce(emissions, out_dir / filename)
        updated.append(
            metrics.ManifestEntry(
                id=entry.id,
                duration_s=emissions.duration_s,
                text=entry.text,
                emissions=filename,
            )
        )
    metrics.write_manifest(updated, out_dir / "manifest.jsonl")
    print(f"wrote {len(updated)} emission files to {out_dir}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctckit",
        description="Grapheme CTC decoding, n-gram LM training and WER scoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="normalize stdin to stdout, line by line")
    p.add_argument("--rules", help="JSON rules file (default: built-in rules)")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("lm-train", help="train an ARPA n-gram model")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--prune", help="comma-separated per-order minimum counts")
    p.add_argument("--in", dest="infile", required=True, help="normalized corpus")
    p.add_argument("--out", required=True, help="output ARPA path")
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("lm-ppl", help="perplexity of text under an ARPA model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_lm_ppl)

    p = sub.add_parser("decode", help="decode CTCE emissions from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--language", choices=["cs", "sk"], default="sk")
    p.add_argument("--alphabet", help="alphabet file overriding --language")
    p.add_argument("--lm", help="ARPA model for shallow fusion")
    p.add_argument("--greedy", action="store_true", help="greedy decode, no beam")
    p.add_argument("--beam-width", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.5, help="LM weight")
    p.add_argument("--beta", type=float, default=1.5, help="word insertion bonus")
    p.add_argument("--token-min-logp", type=float, default=-5.0)
    p.add_argument("--out", help="hypothesis file (default: stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="corpus WER of line-aligned files")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--rules", help="JSON normalization rules")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="corpus statistics of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--rules", help="JSON normalization rules")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="synthesize emissions for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--language", choices=["cs", "sk"], default="sk")
    p.add_argument("--alphabet", help="alphabet file overriding --language")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temp", type=float, default=0.3)
    p.add_argument("--blank-prob", type=float, default=0.2)
    p.add_argument("--frames-per-grapheme", type=int, default=3)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
