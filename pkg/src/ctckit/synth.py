"""Synthetic emission lattices with controllable corruption.

Generates the frame-level log-probability matrices a grapheme acoustic
model would produce for a known reference, so decoder behavior (greedy
vs. LM-fused beam search) can be measured on text alone.  Corruption is
label-uniform: per grapheme, Gaussian noise on one-hot logits scaled
against a 1/temperature signal, with a fixed share of each frame routed
to the blank label.  No claim of acoustic realism is made.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alphabet import Alphabet, tokenize
from .emissions import EmissionMatrix

# Separator frames inserted between equal adjacent graphemes put this
# mass on blank so the repeat survives the collapse.
_SEPARATOR_BLANK_MASS = 0.9


@dataclass(frozen=True)
class SynthesisConfig:
    """Controls one synthesis run.

    frames_per_grapheme repeats each label; blank_prob is the per-frame
    blank mass (keep < 0.5 or blanks win the argmax); confusion_temp
    scales how much probability leaks to competitor labels (the noiseless
    limit is temp -> 0).  Identical seeds give bit-identical matrices.
    """

    frames_per_grapheme: int = 3
    blank_prob: float = 0.2
    confusion_temp: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if self.frames_per_grapheme < 1:
            raise ValueError("frames_per_grapheme must be >= 1")
        if not 0.0 <= self.blank_prob < 1.0:
            raise ValueError("blank_prob must be in [0, 1)")
        if self.confusion_temp <= 0.0:
            raise ValueError("confusion_temp must be > 0")


def derive_seed(seed: int, index: int) -> int:
    """Stable per-utterance seed for batch synthesis (also under parallelism)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    return shifted - np.log(np.sum(np.exp(shifted)))


def synth_emissions(reference: str, alphabet: Alphabet,
                    config: SynthesisConfig) -> EmissionMatrix:
    """Emission matrix whose dominant path spells the reference.

    Per grapheme one noise draw perturbs the label logits, shared by its
    frames_per_grapheme frames, so corruption shows up as clean label
    substitutions rather than per-frame flicker.  Equal adjacent
    graphemes always get one blank-dominant separator frame, so in the
    noiseless limit greedy decoding recovers the reference exactly.
    """
    labels = tokenize(reference, alphabet)
    n_labels = len(alphabet)
    blank = alphabet.blank_index
    rng = np.random.default_rng(config.rng_seed)
    nonblank = np.array([v for v in range(n_labels) if v != blank])

    rows: list[np.ndarray] = []
    prev = -1
    for target in labels:
        if target == prev:
            rows.append(_separator_row(n_labels, blank, nonblank))
        logits = rng.normal(0.0, 1.0, size=nonblank.size)
        logits[np.searchsorted(nonblank, target)] += 1.0 / config.confusion_temp
        log_dist = _log_softmax(logits)
        row = np.empty(n_labels)
        row[nonblank] = np.log1p(-config.blank_prob) + log_dist
        row[blank] = np.log(config.blank_prob) if config.blank_prob > 0 else -np.inf
        rows.extend([row] * config.frames_per_grapheme)
        prev = target
    matrix = np.stack(rows).astype(np.float32)
    return EmissionMatrix(matrix)


def _separator_row(n_labels: int, blank: int, nonblank: np.ndarray) -> np.ndarray:
    row = np.empty(n_labels)
    row[nonblank] = np.log((1.0 - _SEPARATOR_BLANK_MASS) / nonblank.size)
    row[blank] = np.log(_SEPARATOR_BLANK_MASS)
    return row


# ---------------------------------------------------------------------------
# Toy-language corpus sampling for desk-scale decoding experiments.

# Common Slovak words, all tokenizable by the sk alphabet (diacritics and
# the digraphs dz/dž/ch included on purpose).
SLOVAK_WORDS = [
    "ahoj", "dobrý", "deň", "ako", "sa", "máte", "ďakujem", "veľmi",
    "pekne", "dnes", "zajtra", "večer", "ráno", "škola", "mesto",
    "dedina", "chlap", "žena", "dieťa", "pes", "mačka", "dom", "strom",
    "rieka", "hora", "slnko", "mesiac", "hviezda", "kniha", "stôl",
    "okno", "dvere", "ulica", "cesta", "auto", "vlak", "more", "jazero",
    "sneh", "dážď", "vietor", "oheň", "zem", "nebo", "srdce", "ruka",
    "noha", "hlava", "oko", "ucho", "nos", "ústa", "vlasy", "džem",
    "džús", "chlieb", "maslo", "syr", "mlieko", "voda", "víno", "čaj",
    "káva", "bryndza", "halušky", "hudba", "pieseň", "tanec", "práca",
    "peniaze", "čas", "rok", "týždeň", "hodina", "minúta", "ľad",
    "kľúč", "kôň", "vŕba", "medzi", "prichádza",
]


def sample_sentences(count: int, seed: int, words=None,
                     min_len: int = 4, max_len: int = 8) -> list[str]:
    """Markov-chain sentences over a fixed vocabulary.

    Each word gets a small seeded successor set, so a trained n-gram
    model carries real signal about which word follows which.  The chain
    structure depends only on the vocabulary (successors are drawn from a
    fixed-seed generator), while sentence sampling depends on `seed`;
    disjoint corpora that share both vocabulary and statistics come from
    different seeds.
    """
    vocab = list(words) if words is not None else list(SLOVAK_WORDS)
    chain_rng = np.random.default_rng(12911)
    successors = {
        w: [vocab[i] for i in chain_rng.choice(len(vocab), size=3, replace=False)]
        for w in vocab
    }
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        word = vocab[int(rng.integers(len(vocab)))]
        sentence = [word]
        for _ in range(length - 1):
            options = successors[word]
            word = options[int(rng.integers(len(options)))]
            sentence.append(word)
        sentences.append(" ".join(sentence))
    return sentences
