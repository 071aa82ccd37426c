"""Pruned backoff n-gram language models over normalized lowercase text.

Counting, count pruning, interpolated Kneser-Ney estimation and ARPA
serialization.  The model scores word sequences through the standard
backoff recursion, which the decoder consumes during LM-fused beam
search.

Smoothing notes
---------------
Probabilities are interpolated Kneser-Ney with one absolute discount per
order, D = n1 / (n1 + 2*n2), taken from the counts-of-counts of that
order's adjusted counts (continuation counts below the top order, raw
counts at the top and for grams starting with the sentence-begin token).
When the counts-of-counts are degenerate (n1 == 0 or n2 == 0 would push
D to 0 or 1, zeroing either the unseen mass or the singletons), that
order falls back to Witten-Bell and the fallback is recorded in the
model metadata.

Backoff weights are not taken from the interpolation shortcut; they are
renormalized per context as

    bow(c) = (1 - sum of stored P(w|c)) / (1 - sum of stored P(w|c')),

which makes every context distribution sum to one under the backoff
recursion by construction, even after count pruning has removed
arbitrary entries.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# Structural tokens are never pruned out of the unigram table: the model
# cannot function without them.
_PROTECTED_UNIGRAMS = frozenset({BOS, EOS, UNK})

_BOS_LOG10 = -99.0  # conventional dummy score for the non-event <s>


class EmptyCorpus(ValueError):
    """No usable text where some was required."""


class MalformedArpa(ValueError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class CountMismatch(ValueError):
    """Header n-gram counts disagree with the section contents."""

    def __init__(self, order: int, expected: int, actual: int):
        self.order = order
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"header declares {expected} {order}-grams, section has {actual}"
        )


@dataclass
class NGramCounts:
    """Raw n-gram occurrence counts, one table per order.

    tables[k] maps (k+1)-word tuples to counts; total_tokens counts the
    corpus word tokens excluding the sentence boundary wrappers.
    """

    order: int
    tables: list[dict[tuple[str, ...], int]]
    total_tokens: int


def count_ngrams(text_stream, order: int) -> NGramCounts:
    """Count all k-grams for k <= order over sentence-wrapped lines.

    Each non-empty line is wrapped as <s> w1 ... wn </s> and every
    in-line k-gram is counted, exactly the statistics a single-pass
    sliding window produces.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    tables: list[dict[tuple[str, ...], int]] = [defaultdict(int) for _ in range(order)]
    total_tokens = 0
    nonempty = 0
    for line in text_stream:
        words = line.split()
        if not words:
            continue
        nonempty += 1
        total_tokens += len(words)
        seq = [BOS] + words + [EOS]
        for n in range(1, order + 1):
            table = tables[n - 1]
            for i in range(len(seq) - n + 1):
                table[tuple(seq[i:i + n])] += 1
    if nonempty == 0:
        raise EmptyCorpus("no non-empty lines in the input")
    return NGramCounts(order, [dict(t) for t in tables], total_tokens)


def merge_counts(a: NGramCounts, b: NGramCounts) -> NGramCounts:
    """Pointwise sum of two count tables (for sharded counting)."""
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} vs {b.order}")
    tables = []
    for ta, tb in zip(a.tables, b.tables):
        merged = dict(ta)
        for gram, c in tb.items():
            merged[gram] = merged.get(gram, 0) + c
        tables.append(merged)
    return NGramCounts(a.order, tables, a.total_tokens + b.total_tokens)


def prune_counts(counts: NGramCounts, thresholds: list[int]) -> NGramCounts:
    """Drop order-k entries whose count is below thresholds[k-1].

    Surviving entries keep their raw counts, so pruning twice with the
    same thresholds is a no-op.  The structural tokens <s>, </s> and
    <unk> are exempt at order 1.
    """
    if len(thresholds) != counts.order:
        raise ValueError(
            f"need {counts.order} thresholds, got {len(thresholds)}"
        )
    tables = []
    for k, (table, minimum) in enumerate(zip(counts.tables, thresholds)):
        if k == 0:
            kept = {
                gram: c for gram, c in table.items()
                if c >= minimum or gram[0] in _PROTECTED_UNIGRAMS
            }
        else:
            kept = {gram: c for gram, c in table.items() if c >= minimum}
        tables.append(kept)
    return NGramCounts(counts.order, tables, counts.total_tokens)


@dataclass
class NGramModel:
    """Backoff n-gram model in log10, keyed by word-index tuples.

    prob[k] maps (k+1)-length id tuples to log10 conditional
    probabilities; backoff[k] maps (k+1)-length context id tuples to
    log10 backoff weights.  Immutable once built; scoring from many
    threads needs no synchronization.
    """

    order: int
    vocab: list[str]
    prob: list[dict[tuple[int, ...], float]]
    backoff: list[dict[tuple[int, ...], float]]
    metadata: dict = field(default_factory=dict)
    _word_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._word_id = {w: i for i, w in enumerate(self.vocab)}

    def word_id(self, word: str) -> int | None:
        return self._word_id.get(word)

    def iter_entries(self):
        """Yield (word tuple, log10 prob, log10 bow or None), sorted."""
        for k in range(self.order):
            table = self.prob[k]
            bows = self.backoff[k] if k < self.order - 1 else {}
            grams = sorted(table, key=lambda ids: tuple(self.vocab[i] for i in ids))
            for ids in grams:
                words = tuple(self.vocab[i] for i in ids)
                yield words, table[ids], bows.get(ids)


def _interp_prob(adj: int, discount: float, total: int, method: str,
                 types: int, lower: float) -> float:
    # One context's entry under the chosen smoothing; `lower` is the
    # already-final backoff probability of the shorter context.
    if total == 0:
        return lower
    if method == "kneser-ney":
        gamma = discount * types / total
        return max(adj - discount, 0.0) / total + gamma * lower
    # witten-bell
    return adj / (total + types) + types / (total + types) * lower


def estimate(counts: NGramCounts) -> NGramModel:
    """Turn (possibly pruned) counts into a smoothed backoff model.

    Orders whose tables are empty are dropped with a warning.  The
    discount mass reserved at the unigram level is assigned to <unk>,
    which keeps the model a proper distribution over an open vocabulary.
    """
    order = counts.order
    while order > 1 and not counts.tables[order - 1]:
        log.warning("order-%d table is empty, reducing model order", order)
        order -= 1
    tables = [dict(t) for t in counts.tables[:order]]
    if not tables[0]:
        raise EmptyCorpus("no unigrams to estimate from")

    # Restore prefix closure: a surviving k-gram needs its (k-1)-gram
    # prefix as an ARPA entry to carry the backoff weight.  Non-monotone
    # thresholds can prune such prefixes; resurrect them with the sum of
    # their surviving extensions (a lower bound on the true count).
    for k in range(order - 1, 0, -1):
        missing: dict[tuple[str, ...], int] = defaultdict(int)
        for gram, c in tables[k].items():
            prefix = gram[:-1]
            if prefix not in tables[k - 1]:
                missing[prefix] += c
        tables[k - 1].update(missing)

    words = sorted({gram[0] for gram in tables[0]} - _PROTECTED_UNIGRAMS)
    vocab = [BOS, EOS, UNK] + words
    wid = {w: i for i, w in enumerate(vocab)}
    bos_id, eos_id, unk_id = 0, 1, 2

    # Adjusted counts: raw at the top order and for <s>-initial grams
    # (they have no left extensions), continuation type counts below.
    adjusted: list[dict[tuple[str, ...], int]] = []
    for k in range(order):
        if k == order - 1:
            adjusted.append(dict(tables[k]))
            continue
        cont: dict[tuple[str, ...], int] = defaultdict(int)
        for gram in tables[k + 1]:
            cont[gram[1:]] += 1
        adj = {}
        for gram, c in tables[k].items():
            adj[gram] = c if gram[0] == BOS else cont.get(gram, 0)
        adjusted.append(adj)

    # Pruning can strip every left extension of a surviving unigram;
    # floor those to one occurrence so every stored word stays finite.
    for gram in tables[0]:
        if gram[0] != BOS and adjusted[0][gram] == 0:
            adjusted[0][gram] = 1

    methods: list[str] = []
    discounts: list[float] = []
    for k in range(order):
        values = [a for gram, a in adjusted[k].items() if gram[0] != BOS or k > 0]
        n1 = sum(1 for a in values if a == 1)
        n2 = sum(1 for a in values if a == 2)
        if n1 == 0 or n2 == 0:
            methods.append("witten-bell")
            discounts.append(0.0)
        else:
            methods.append("kneser-ney")
            discounts.append(n1 / (n1 + 2 * n2))

    prob: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order)]
    backoff: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order - 1)]

    # Unigrams: distribute over everything predictable (everything but
    # <s>) and give the reserved discount mass to <unk>.
    uni = {gram[0]: a for gram, a in adjusted[0].items() if gram[0] != BOS}
    total = sum(uni.values())
    types = len(uni)
    method, discount = methods[0], discounts[0]
    unk_extra = (
        discount * types / total if method == "kneser-ney"
        else types / (total + types)
    )
    for w, a in uni.items():
        if method == "kneser-ney":
            p = (a - discount) / total
        else:
            p = a / (total + types)
        prob[0][(wid[w],)] = math.log10(p)
    base_unk = 10 ** prob[0][(unk_id,)] if (unk_id,) in prob[0] else 0.0
    prob[0][(unk_id,)] = math.log10(base_unk + unk_extra)
    prob[0][(bos_id,)] = _BOS_LOG10

    def backoff_logp(ids: tuple[int, ...]) -> float:
        # log10 P(w | context) via the backoff recursion over the orders
        # finalized so far.
        acc = 0.0
        while True:
            p = prob[len(ids) - 1].get(ids)
            if p is not None:
                return acc + p
            if len(ids) == 1:
                return acc + prob[0][(unk_id,)]
            acc += backoff[len(ids) - 2].get(ids[:-1], 0.0)
            ids = ids[1:]

    for length in range(2, order + 1):
        k = length - 1
        method, discount = methods[k], discounts[k]
        by_context: dict[tuple[str, ...], list[tuple[str, int]]] = defaultdict(list)
        for gram, a in adjusted[k].items():
            by_context[gram[:-1]].append((gram[-1], a))
        for ctx, extensions in by_context.items():
            ctx_ids = tuple(wid[w] for w in ctx)
            lower_ctx = ctx_ids[1:]
            total = sum(a for _, a in extensions)
            types = sum(1 for _, a in extensions if a >= 1)
            for w, a in extensions:
                w_id = wid[w]
                lower = 10 ** backoff_logp(lower_ctx + (w_id,))
                p = _interp_prob(a, discount, total, method, types, lower)
                prob[k][ctx_ids + (w_id,)] = math.log10(p)
        # Backoff weights for the contexts one order down, renormalized
        # against what is now stored at this order.
        for ctx, extensions in by_context.items():
            ctx_ids = tuple(wid[w] for w in ctx)
            stored = 0.0
            shadow = 0.0
            for w, _ in extensions:
                w_id = wid[w]
                stored += 10 ** prob[k][ctx_ids + (w_id,)]
                shadow += 10 ** backoff_logp(ctx_ids[1:] + (w_id,))
            num, den = 1.0 - stored, 1.0 - shadow
            if num <= 0.0 or den <= 0.0:
                bow = 1.0  # context covers (numerically) all mass
            else:
                bow = num / den
            backoff[k - 1][ctx_ids] = math.log10(bow)

    metadata = {
        "smoothing_by_order": {k + 1: m for k, m in enumerate(methods)},
        "discount_by_order": {k + 1: d for k, d in enumerate(discounts)},
        "total_tokens": counts.total_tokens,
    }
    return NGramModel(order, vocab, prob, backoff, metadata)


def score(model: NGramModel, context: list[str], word: str) -> float:
    """log10 P(word | context) under the standard backoff recursion.

    Total over open vocabulary: unknown words (in the query or the
    context) are mapped to <unk>.
    """
    unk_id = model.word_id(UNK)
    fallback = -99.0 if unk_id is None else None

    def to_id(w: str) -> int:
        i = model.word_id(w)
        if i is None:
            if unk_id is None:
                return -1
            return unk_id
        return i

    if model.order > 1:
        ids = tuple(to_id(w) for w in context[-(model.order - 1):])
    else:
        ids = ()
    w_id = to_id(word)
    acc = 0.0
    for k in range(len(ids), -1, -1):
        ctx = ids[len(ids) - k:]
        p = model.prob[k].get(ctx + (w_id,))
        if p is not None:
            return acc + p
        if k > 0:
            acc += model.backoff[k - 1].get(ctx, 0.0)
    if fallback is not None:
        return acc + fallback
    return acc + model.prob[0][(unk_id,)]


def sentence_logprob(model: NGramModel, words: list[str]) -> tuple[float, int]:
    """Total log10 probability of one sentence and the token count.

    Scores every word left to right with the <s>-initial history and the
    closing </s>, the same quantities perplexity aggregates.
    """
    history = [BOS]
    total = 0.0
    n = 0
    for w in list(words) + [EOS]:
        total += score(model, history, w)
        history.append(w)
        n += 1
    return total, n


def perplexity(model: NGramModel, text) -> float:
    """10 ** (-mean log10 P) over all scored tokens, </s> included."""
    total = 0.0
    n = 0
    for line in text:
        words = line.split()
        if not words:
            continue
        lp, k = sentence_logprob(model, words)
        total += lp
        n += k
    if n == 0:
        raise EmptyCorpus("no scorable tokens")
    exponent = -total / n
    if exponent > 300.0:
        return math.inf
    return 10.0 ** exponent


def normalization_mass(model: NGramModel, context: list[str]) -> float:
    """Sum of P(w | context) over the predictable vocabulary.

    Sums every vocab word except <s> (a pure context marker); a valid
    model returns 1 within rounding for every context.
    """
    return sum(
        10 ** score(model, context, w) for w in model.vocab if w != BOS
    )


def write_arpa(model: NGramModel, sink) -> None:
    """Write the model in the standard ARPA text format (log10, UTF-8)."""
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    f = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        f.write("\\data\\\n")
        for k in range(model.order):
            f.write(f"ngram {k + 1}={len(model.prob[k])}\n")
        for k in range(model.order):
            f.write(f"\n\\{k + 1}-grams:\n")
            bows = model.backoff[k] if k < model.order - 1 else {}
            grams = sorted(
                model.prob[k],
                key=lambda ids: tuple(model.vocab[i] for i in ids),
            )
            for ids in grams:
                words = " ".join(model.vocab[i] for i in ids)
                line = f"{model.prob[k][ids]:.7f}\t{words}"
                bow = bows.get(ids)
                if bow is not None:
                    line += f"\t{bow:.7f}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")
    finally:
        if own:
            f.close()


def read_arpa(source) -> NGramModel:
    """Parse ARPA text into an NGramModel.

    Raises MalformedArpa (with the offending line number) on structural
    problems and CountMismatch when the \\data\\ header disagrees with a
    section's entry count.
    """
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    f = open(source, encoding="utf-8") if own else source
    try:
        lines = f.read().splitlines()
    finally:
        if own:
            f.close()

    header: dict[int, int] = {}
    i = 0
    n_lines = len(lines)
    while i < n_lines and lines[i].strip() != "\\data\\":
        if lines[i].strip():
            raise MalformedArpa(i + 1, "expected \\data\\ header")
        i += 1
    if i == n_lines:
        raise MalformedArpa(n_lines, "missing \\data\\ header")
    i += 1
    while i < n_lines and lines[i].strip():
        line = lines[i].strip()
        if not line.startswith("ngram "):
            raise MalformedArpa(i + 1, f"unexpected line in \\data\\ section: {line!r}")
        try:
            order_part, count_part = line[len("ngram "):].split("=")
            header[int(order_part)] = int(count_part)
        except ValueError:
            raise MalformedArpa(i + 1, f"bad ngram count line: {line!r}") from None
        i += 1
    if not header or sorted(header) != list(range(1, len(header) + 1)):
        raise MalformedArpa(i, "header must declare orders 1..N")
    order = len(header)

    raw: list[dict[tuple[str, ...], tuple[float, float | None]]] = [
        {} for _ in range(order)
    ]
    section = 0
    saw_end = False
    while i < n_lines:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "\\end\\":
            saw_end = True
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            try:
                section = int(line[1:-len("-grams:")])
            except ValueError:
                raise MalformedArpa(i, f"bad section header: {line!r}") from None
            if section < 1 or section > order:
                raise MalformedArpa(i, f"section \\{section}-grams: not in header")
            continue
        if section == 0:
            raise MalformedArpa(i, f"entry before any section header: {line!r}")
        parts = line.split()
        with_bow = len(parts) == section + 2
        if not with_bow and len(parts) != section + 1:
            raise MalformedArpa(
                i, f"expected {section + 1} or {section + 2} fields, got {len(parts)}"
            )
        if with_bow and section == order:
            raise MalformedArpa(i, "top-order entry cannot carry a backoff weight")
        try:
            logp = float(parts[0])
            bow = float(parts[-1]) if with_bow else None
        except ValueError:
            raise MalformedArpa(i, f"non-numeric probability field: {line!r}") from None
        gram = tuple(parts[1:section + 1])
        raw[section - 1][gram] = (logp, bow)
    if not saw_end:
        raise MalformedArpa(n_lines, "missing \\end\\ marker")

    for k in range(order):
        if len(raw[k]) != header[k + 1]:
            raise CountMismatch(k + 1, header[k + 1], len(raw[k]))

    vocab = [words[0] for words in sorted(raw[0])]
    wid = {w: i for i, w in enumerate(vocab)}
    prob: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order)]
    backoff: list[dict[tuple[int, ...], float]] = [dict() for _ in range(order - 1)]
    for k in range(order):
        for gram, (logp, bow) in raw[k].items():
            try:
                ids = tuple(wid[w] for w in gram)
            except KeyError as exc:
                raise MalformedArpa(
                    0, f"{k + 1}-gram uses word {exc.args[0]!r} absent from unigrams"
                ) from None
            prob[k][ids] = logp
            if bow is not None:
                backoff[k][ids] = bow
    return NGramModel(order, vocab, prob, backoff, {})
