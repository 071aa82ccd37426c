"""CTC decoding: greedy best-path collapse and LM-fused prefix beam search.

Greedy decoding follows the three-step scheme (per-frame argmax, merge
repeated labels, delete blanks) and needs nothing but the emissions.
Beam search decodes over collapsed prefixes, keeping blank-ending and
non-blank-ending probability mass separately per prefix and merging all
frame paths that collapse to the same prefix, so a prefix is ranked by
its total collapsed probability rather than its best path.  A word-level
n-gram model can be fused in at word boundaries (space emissions) and at
the utterance end:

    combined = log P_ac(prefix) + alpha * ln(10) * log10 P_lm + beta * words

All probability arithmetic is in natural log; float("-inf") is the
dedicated representation of log(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lm as lm_mod
from .alphabet import Alphabet, detokenize
from .emissions import EmissionMatrix

NEG_INF = float("-inf")
LN10 = math.log(10.0)

ORACLE_MAX_PATHS = 10 ** 6


class DimensionMismatch(ValueError):
    """Emission label dimension does not match the alphabet size."""


class InvalidConfig(ValueError):
    pass


class InstanceTooLarge(ValueError):
    """The instance exceeds the exhaustive enumeration budget."""


@dataclass(frozen=True)
class BeamConfig:
    """Beam search knobs.

    The defaults (beam 100, lm_weight 0.5, word_bonus 1.5, expansion
    floor -5 nats) are sensible tuning starting points, nothing more.
    token_min_logp gates which labels may extend a prefix at each frame;
    set it to -inf for exact summed-probability search.
    """

    beam_width: int = 100
    lm_weight: float = 0.5
    word_bonus: float = 1.5
    token_min_logp: float = -5.0
    n_best: int = 1

    def __post_init__(self):
        if self.beam_width < 1:
            raise InvalidConfig(f"beam_width must be >= 1, got {self.beam_width}")
        if self.n_best < 1:
            raise InvalidConfig(f"n_best must be >= 1, got {self.n_best}")
        if self.n_best > self.beam_width:
            raise InvalidConfig("n_best cannot exceed beam_width")
        if self.lm_weight < 0:
            raise InvalidConfig(f"lm_weight must be >= 0, got {self.lm_weight}")


@dataclass(frozen=True)
class DecodeResult:
    """One hypothesis: transcript plus its score decomposition.

    token_frames holds, per output grapheme, the frame where it was
    first emitted (empty for aggregate-scored oracle results).
    """

    transcript: str
    acoustic_logp: float
    lm_log10p: float
    combined_score: float
    token_frames: tuple[int, ...]


def _logadd(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def collapse(path, alphabet: Alphabet) -> list[int]:
    """Merge adjacent duplicate labels, then remove blanks (in that order)."""
    blank = alphabet.blank_index
    merged: list[int] = []
    prev = -1
    for v in path:
        if v != prev:
            merged.append(v)
            prev = v
    return [v for v in merged if v != blank]


def _clean_spaces(seq: list[int], frames: list[int], space: int):
    # Transcripts carry no leading, trailing or doubled separators; drop
    # the offending space tokens together with their frame stamps.
    out_s: list[int] = []
    out_f: list[int] = []
    for v, f in zip(seq, frames):
        if v == space and (not out_s or out_s[-1] == space):
            continue
        out_s.append(v)
        out_f.append(f)
    if out_s and out_s[-1] == space:
        out_s.pop()
        out_f.pop()
    return out_s, out_f


def _check_dims(emissions: EmissionMatrix, alphabet: Alphabet) -> None:
    if emissions.labels != len(alphabet):
        raise DimensionMismatch(
            f"emissions have {emissions.labels} labels, alphabet has {len(alphabet)}"
        )


def greedy_decode(emissions: EmissionMatrix, alphabet: Alphabet) -> DecodeResult:
    """Per-frame argmax (ties to the lowest index), collapse, detokenize.

    acoustic_logp is the sum of the selected per-frame log-probabilities,
    i.e. the best-path score, not the collapsed total.
    """
    _check_dims(emissions, alphabet)
    lp = emissions.log_probs.astype(np.float64)
    best = np.argmax(lp, axis=1)
    acoustic = float(lp[np.arange(lp.shape[0]), best].sum())
    blank = alphabet.blank_index
    seq: list[int] = []
    frames: list[int] = []
    prev = -1
    for t, v in enumerate(best.tolist()):
        if v != prev:
            if v != blank:
                seq.append(v)
                frames.append(t)
            prev = v
    seq, frames = _clean_spaces(seq, frames, alphabet.space_index)
    return DecodeResult(
        transcript=detokenize(seq, alphabet),
        acoustic_logp=acoustic,
        lm_log10p=0.0,
        combined_score=acoustic,
        token_frames=tuple(frames),
    )


def _sequence_external(labels, alphabet: Alphabet, lm_model):
    """LM log10 mass and word count of a collapsed label sequence.

    Words are the maximal non-empty runs between space labels; each is
    scored against the <s>-initial history of the words before it.  The
    same accounting the beam applies incrementally, used for whole
    sequences by the oracle.
    """
    symbols = alphabet.symbols
    space = alphabet.space_index
    history = [lm_mod.BOS]
    lm10 = 0.0
    words = 0
    current: list[str] = []

    def finish_word():
        nonlocal lm10, words
        if not current:
            return
        word = "".join(current)
        if lm_model is not None:
            lm10 += lm_mod.score(lm_model, history, word)
        history.append(word)
        words += 1
        current.clear()

    for v in labels:
        if v == space:
            finish_word()
        else:
            current.append(symbols[v])
    finish_word()
    return lm10, words


def beam_search_decode(
    emissions: EmissionMatrix,
    alphabet: Alphabet,
    lm_model=None,
    config: BeamConfig | None = None,
) -> list[DecodeResult]:
    """Prefix beam search, optionally fused with a word n-gram model.

    Returns the n_best hypotheses, best first; ordering ties break
    lexicographically on the transcript.  Deterministic: repeated calls
    are bit-identical.  Exact-score ties at the internal beam cut are
    resolved by a fixed candidate order (surviving prefixes before new
    extensions, then beam position and label).
    """
    _check_dims(emissions, alphabet)
    if config is None:
        config = BeamConfig()
    lp = emissions.log_probs.astype(np.float64)
    n_frames, n_labels = lp.shape
    blank = alphabet.blank_index
    space = alphabet.space_index
    symbols = alphabet.symbols
    alpha_ln10 = config.lm_weight * LN10
    beta = config.word_bonus
    width = config.beam_width
    floor = config.token_min_logp
    logadd = _logadd

    # Prefixes live in a trie; a node id is the identity of one collapsed
    # prefix.  Extending two distinct prefixes with any labels always
    # yields two distinct prefixes, so within a frame the only mass
    # merges are (a) frame paths staying on the same prefix and (b) an
    # extension landing on a prefix that is itself still in the beam.
    # (b) is rare and detected vectorized below; everything else is free
    # of collisions, which lets the frame update run on numpy arrays and
    # defer node creation to the pruning survivors.
    parent = [-1]
    label = [-1]
    born = [-1]
    pending = [""]          # grapheme symbols of the unfinished last word
    history = [(lm_mod.BOS,)]
    lm10 = [0.0]            # accumulated log10 P of completed words
    words = [0]
    external = [0.0]        # alpha*ln10*lm10 + beta*words, cached
    space_ext: dict[int, float] = {}  # external score of the space child
    children: dict[int, int] = {}     # key: node * n_labels + label
    hist_keep = max(lm_model.order - 1, 1) if lm_model is not None else 1

    def make_child(node: int, v: int, t: int) -> int:
        key = node * n_labels + v
        child = children.get(key)
        if child is not None:
            return child
        child = len(parent)
        parent.append(node)
        label.append(v)
        born.append(t)
        if v == space:
            word = pending[node]
            if word:
                if lm_model is not None:
                    inc = lm_mod.score(lm_model, list(history[node]), word)
                else:
                    inc = 0.0
                lm10.append(lm10[node] + inc)
                history.append((history[node] + (word,))[-hist_keep:])
                words.append(words[node] + 1)
            else:
                lm10.append(lm10[node])
                history.append(history[node])
                words.append(words[node])
            pending.append("")
        else:
            lm10.append(lm10[node])
            history.append(history[node])
            words.append(words[node])
            pending.append(pending[node] + symbols[v])
        external.append(alpha_ln10 * lm10[child] + beta * words[child])
        children[key] = child
        return child

    def space_external(node: int) -> float:
        # external score a space extension of `node` would carry, without
        # materializing the child
        v = space_ext.get(node)
        if v is None:
            word = pending[node]
            if word:
                inc = lm_mod.score(lm_model, list(history[node]), word) \
                    if lm_model is not None else 0.0
                v = alpha_ln10 * (lm10[node] + inc) + beta * (words[node] + 1)
            else:
                v = external[node]
            space_ext[node] = v
        return v

    above_floor = lp >= floor
    above_floor[:, blank] = False

    cur_nodes = np.array([0], dtype=np.int64)
    cur_pb = np.array([0.0])
    cur_pnb = np.array([NEG_INF])
    cur_ext = np.array([0.0])
    cur_last = np.array([-1], dtype=np.int64)
    for t in range(n_frames):
        row = lp[t]
        cands = np.nonzero(above_floor[t])[0]
        n_beams = cur_nodes.size
        with np.errstate(invalid="ignore"):
            tot = np.logaddexp(cur_pb, cur_pnb)
            # same-prefix updates: all paths emit blank, non-blank-ending
            # paths continue the run of the last label
            same_pb = tot + row[blank]
            same_pnb = np.where(
                cur_last >= 0, cur_pnb + row[cur_last], NEG_INF
            )
            # extensions: append candidate v; a repeated label only grows
            # from blank-ending mass, anything else from the total
            is_rep = cands[None, :] == cur_last[:, None]
            src = np.where(is_rep, cur_pb[:, None], tot[:, None])
            ext_mass = src + row[cands][None, :]
            # external (LM) component of candidate scores
            ext_of_child = np.broadcast_to(
                cur_ext[:, None], ext_mass.shape
            ).copy()
            space_cols = np.nonzero(cands == space)[0]
            for j in space_cols.tolist():
                ext_of_child[:, j] = [
                    space_external(int(n)) for n in cur_nodes
                ]
            # fold extensions that land on prefixes still in the beam
            # into those prefixes before ranking
            if n_beams > 1:
                parent_arr = np.fromiter(
                    (parent[int(n)] for n in cur_nodes), np.int64, n_beams
                )
                beam_keys = parent_arr * n_labels + cur_last
                ext_keys = cur_nodes[:, None] * n_labels + cands[None, :]
                collide = np.isin(ext_keys, beam_keys)
                if collide.any():
                    key_slot = {int(k): m for m, k in enumerate(beam_keys)}
                    for i, j in zip(*np.nonzero(collide)):
                        m = key_slot[int(ext_keys[i, j])]
                        same_pnb[m] = logadd(same_pnb[m], float(ext_mass[i, j]))
                        ext_mass[i, j] = NEG_INF
            same_scores = np.logaddexp(same_pb, same_pnb) + cur_ext
            ext_scores = (ext_mass + ext_of_child).ravel()
        all_scores = np.concatenate([same_scores, ext_scores])
        finite = np.nonzero(all_scores > NEG_INF)[0]
        if finite.size == 0:
            # every continuation has zero probability (possible only with
            # an aggressive expansion floor); keep the prefixes alive
            finite = np.arange(n_beams)
        if finite.size > width:
            fs = all_scores[finite]
            cut = np.partition(fs, fs.size - width)[fs.size - width]
            strict = finite[np.nonzero(fs > cut)[0]]
            tied = finite[np.nonzero(fs == cut)[0]]
            chosen = np.concatenate([strict, tied[:width - strict.size]])
            order = np.lexsort((chosen, -all_scores[chosen]))
            chosen = chosen[order]
        else:
            chosen = finite[np.argsort(-all_scores[finite], kind="stable")]

        n_cands = cands.size
        nodes_out = np.empty(chosen.size, dtype=np.int64)
        pb_out = np.empty(chosen.size)
        pnb_out = np.empty(chosen.size)
        ext_out = np.empty(chosen.size)
        last_out = np.empty(chosen.size, dtype=np.int64)
        for k, idx in enumerate(chosen.tolist()):
            if idx < n_beams:
                node = int(cur_nodes[idx])
                nodes_out[k] = node
                pb_out[k] = same_pb[idx]
                pnb_out[k] = same_pnb[idx]
                ext_out[k] = cur_ext[idx]
                last_out[k] = cur_last[idx]
            else:
                i, j = divmod(idx - n_beams, n_cands)
                v = int(cands[j])
                node = make_child(int(cur_nodes[i]), v, t)
                nodes_out[k] = node
                pb_out[k] = NEG_INF
                pnb_out[k] = ext_mass[i, j]
                ext_out[k] = external[node]
                last_out[k] = v
        cur_nodes, cur_pb, cur_pnb = nodes_out, pb_out, pnb_out
        cur_ext, cur_last = ext_out, last_out

    finals = []
    for node, (pb, pnb) in zip(cur_nodes.tolist(),
                               zip(cur_pb.tolist(), cur_pnb.tolist())):
        acoustic = logadd(pb, pnb)
        final_lm10 = lm10[node]
        final_words = words[node]
        word = pending[node]
        if word:
            if lm_model is not None:
                final_lm10 += lm_mod.score(lm_model, list(history[node]), word)
            final_words += 1
        combined = acoustic + alpha_ln10 * final_lm10 + beta * final_words
        seq: list[int] = []
        frames: list[int] = []
        n = node
        while n > 0:
            seq.append(label[n])
            frames.append(born[n])
            n = parent[n]
        seq.reverse()
        frames.reverse()
        seq, frames = _clean_spaces(seq, frames, space)
        finals.append(
            DecodeResult(
                transcript=detokenize(seq, alphabet),
                acoustic_logp=acoustic,
                lm_log10p=final_lm10,
                combined_score=combined,
                token_frames=tuple(frames),
            )
        )
    finals.sort(key=lambda r: (-r.combined_score, r.transcript))
    return finals[:config.n_best]


def oracle_decode(
    emissions: EmissionMatrix,
    alphabet: Alphabet,
    lm_model=None,
    lm_weight: float = 0.0,
    word_bonus: float = 0.0,
) -> DecodeResult:
    """Exhaustive reference decoder for small instances.

    Enumerates all V**T frame paths, pools path probability per collapsed
    transcript, applies the same LM fusion formula as the beam and
    returns the best transcript (ties break lexicographically).  Refuses
    instances with more than 10**6 paths.
    """
    _check_dims(emissions, alphabet)
    n_frames, n_labels = emissions.log_probs.shape
    n_paths = n_labels ** n_frames
    if n_paths > ORACLE_MAX_PATHS:
        raise InstanceTooLarge(
            f"{n_labels}^{n_frames} = {n_paths} paths exceeds {ORACLE_MAX_PATHS}"
        )
    lp = emissions.log_probs.astype(np.float64)
    blank = alphabet.blank_index

    # All paths as an (N, T) label matrix, then vectorized collapse:
    # drop repeat positions, drop blanks, left-pack into a sentinel-padded
    # matrix whose rows are groupable with np.unique.
    radix = n_labels ** np.arange(n_frames - 1, -1, -1, dtype=np.int64)
    paths = (np.arange(n_paths, dtype=np.int64)[:, None] // radix) % n_labels
    scores = lp[np.arange(n_frames), paths].sum(axis=1)

    keep = np.ones(paths.shape, dtype=bool)
    keep[:, 1:] = paths[:, 1:] != paths[:, :-1]
    keep &= paths != blank
    sentinel = n_labels
    padded = np.full(paths.shape, sentinel, dtype=np.int64)
    pos = np.cumsum(keep, axis=1) - 1
    rows, cols = np.nonzero(keep)
    padded[rows, pos[rows, cols]] = paths[rows, cols]

    uniq, inverse = np.unique(padded, axis=0, return_inverse=True)
    n_groups = uniq.shape[0]
    peak = np.full(n_groups, NEG_INF)
    np.maximum.at(peak, inverse, scores)
    mass = np.zeros(n_groups)
    finite = np.isfinite(scores)
    shifted = np.exp(scores[finite] - peak[inverse[finite]])
    np.add.at(mass, inverse[finite], shifted)
    with np.errstate(divide="ignore"):
        group_logp = np.where(peak > NEG_INF, peak + np.log(mass), NEG_INF)

    best = None
    for g in range(n_groups):
        labels = [int(v) for v in uniq[g] if v != sentinel]
        lm10, n_words = _sequence_external(labels, alphabet, lm_model)
        combined = group_logp[g] + lm_weight * LN10 * lm10 + word_bonus * n_words
        seq, _ = _clean_spaces(labels, [0] * len(labels), alphabet.space_index)
        transcript = detokenize(seq, alphabet)
        key = (-combined, transcript)
        if best is None or key < best[0]:
            best = (key, DecodeResult(
                transcript=transcript,
                acoustic_logp=float(group_logp[g]),
                lm_log10p=lm10,
                combined_score=float(combined),
                token_frames=(),
            ))
    return best[1]
