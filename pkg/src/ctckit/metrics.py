"""WER scoring and corpus statistics.

Both sides of every comparison run through transcript normalization
first, so casing and punctuation differences never count as errors.
WER is (substitutions + insertions + deletions) / reference words under
a minimal-cost word alignment; it can exceed 1.0 when insertions
dominate and is reported as-is.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .normalize import DEFAULT_RULES, NormalizationRules, normalize_transcript


class EmptyReference(ValueError):
    """WER is undefined: the normalized reference has no words."""


class MalformedManifest(ValueError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    insertions: int
    deletions: int
    hits: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_words

    def __str__(self) -> str:
        return (
            f"WER {100 * self.wer:.2f}% "
            f"(S={self.substitutions} I={self.insertions} D={self.deletions} "
            f"H={self.hits} N={self.ref_words})"
        )


def _align_counts(ref: list[str], hyp: list[str]) -> tuple[int, int, int, int]:
    """(S, I, D, H) of the minimal-cost alignment.

    Among minimal-cost alignments prefer more hits, then fewer
    substitutions; the DP state carries (cost, -hits, subs) so the
    preference is a plain lexicographic minimum and the backtrace is
    implicit and deterministic.
    """
    m = len(hyp)
    prev = [(j, 0, 0) for j in range(m + 1)]  # row i=0: j insertions
    for i in range(1, len(ref) + 1):
        cur = [(i, 0, 0)]  # column j=0: i deletions
        r = ref[i - 1]
        for j in range(1, m + 1):
            if r == hyp[j - 1]:
                c, nh, s = prev[j - 1]
                best = (c, nh - 1, s)
            else:
                c, nh, s = prev[j - 1]
                best = (c + 1, nh, s + 1)
            c, nh, s = prev[j]  # deletion
            if (c + 1, nh, s) < best:
                best = (c + 1, nh, s)
            c, nh, s = cur[j - 1]  # insertion
            if (c + 1, nh, s) < best:
                best = (c + 1, nh, s)
            cur.append(best)
        prev = cur
    cost, neg_hits, subs = prev[m]
    hits = -neg_hits
    dels = len(ref) - hits - subs
    ins = cost - subs - dels
    return subs, ins, dels, hits


def wer(reference: str, hypothesis: str,
        rules: NormalizationRules = DEFAULT_RULES) -> WerReport:
    """Case- and punctuation-insensitive word error rate for one pair."""
    ref = normalize_transcript(reference, rules).split()
    hyp = normalize_transcript(hypothesis, rules).split()
    if not ref:
        raise EmptyReference(
            "normalized reference has no words; WER is undefined"
        )
    s, i, d, h = _align_counts(ref, hyp)
    return WerReport(s, i, d, h, len(ref))


def corpus_wer(pairs, rules: NormalizationRules = DEFAULT_RULES) -> WerReport:
    """Pooled WER over (reference, hypothesis) pairs.

    Pools the error and reference-word counts (not the mean of
    per-utterance WERs).  Pairs whose normalized reference is empty
    contribute their hypothesis words as insertions; if no pair has a
    non-empty reference the WER is undefined.
    """
    s = i = d = h = n = 0
    for reference, hypothesis in pairs:
        ref = normalize_transcript(reference, rules).split()
        hyp = normalize_transcript(hypothesis, rules).split()
        if not ref:
            i += len(hyp)
            continue
        ps, pi, pd, ph = _align_counts(ref, hyp)
        s += ps
        i += pi
        d += pd
        h += ph
        n += len(ref)
    if n == 0:
        raise EmptyReference("no pair has a non-empty normalized reference")
    return WerReport(s, i, d, h, n)


@dataclass(frozen=True)
class CorpusStats:
    hours: float
    utterances: int
    words: int

    def table_row(self) -> str:
        """Hours to one decimal, words in thousands (dataset-table shape)."""
        return (
            f"hours={self.hours:.1f} utterances={self.utterances} "
            f"words_k={self.words / 1000:.1f}"
        )


@dataclass(frozen=True)
class ManifestEntry:
    """One utterance of a JSON-lines manifest.

    Fields: id (string), duration_s (non-negative number), text (raw
    transcript), emissions (optional relative path to a CTCE file).
    """

    id: str
    duration_s: float
    text: str
    emissions: str | None = None


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedManifest(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise MalformedManifest(lineno, "entry is not a JSON object")
            try:
                entry = ManifestEntry(
                    id=str(obj["id"]),
                    duration_s=float(obj["duration_s"]),
                    text=str(obj["text"]),
                    emissions=obj.get("emissions"),
                )
            except KeyError as exc:
                raise MalformedManifest(lineno, f"missing field {exc.args[0]!r}") from None
            except (TypeError, ValueError):
                raise MalformedManifest(lineno, "duration_s is not a number") from None
            if entry.duration_s < 0:
                raise MalformedManifest(lineno, "duration_s is negative")
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in entries:
            obj = {"id": e.id, "duration_s": e.duration_s, "text": e.text}
            if e.emissions is not None:
                obj["emissions"] = e.emissions
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")


def stats(entries, rules: NormalizationRules = DEFAULT_RULES) -> CorpusStats:
    """Hours / utterances / normalized word counts for a manifest."""
    total_s = 0.0
    words = 0
    count = 0
    for e in entries:
        total_s += e.duration_s
        words += len(normalize_transcript(e.text, rules).split())
        count += 1
    return CorpusStats(hours=total_s / 3600.0, utterances=count, words=words)
