"""Transcript normalization: lowercase, punctuation-free, non-speech-free.

The same normalization feeds LM training text, decoder references and
both sides of WER scoring, so hypothesis/reference comparisons never see
casing or punctuation differences.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field

# ASCII punctuation plus the typographic characters common in Czech and
# Slovak transcripts. The apostrophe (ASCII and typographic) is deleted
# in-word as well: neither alphabet contains it, and "l'ahko" style typos
# collapse to a single word rather than splitting into two.
_DEFAULT_PUNCTUATION = (
    "!\"#$%&'()*+,./:;<=>?@[\\]^_`{|}~"
    "‘’‚“”„"  # curly quotes
    "«»‹›"              # guillemets
    "…·¡¿°§−"
)

# Hyphens and dashes become a space so "modro-biely" stays two words for
# WER purposes; standalone ones vanish in the whitespace collapse.
_HYPHENS = "-‐‑–—"

_DEFAULT_BRACKET_PAIRS = ("[]", "<>", "()")

_WHITESPACE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizationRules:
    """Configurable rule set; the defaults follow the dominant bracketed
    convention for non-speech markup ([cough], <noise>, (laughter)).

    Digits pass through unchanged: verbalization is language-specific and
    out of scope here, and a digit surviving into tokenization fails
    loudly instead of being silently guessed at.
    """

    punctuation_set: frozenset[str] = frozenset(_DEFAULT_PUNCTUATION)
    bracket_pairs: tuple[str, ...] = _DEFAULT_BRACKET_PAIRS
    nonspeech_pattern: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for pair in self.bracket_pairs:
            if len(pair) != 2:
                raise ValueError(f"bracket pair must be two characters: {pair!r}")
        alternatives = [
            re.escape(open_) + "[^" + re.escape(open_ + close) + "]*" + re.escape(close)
            for open_, close in self.bracket_pairs
        ]
        pattern = re.compile("|".join(alternatives)) if alternatives else re.compile(r"(?!)")
        object.__setattr__(self, "nonspeech_pattern", pattern)

    @classmethod
    def from_json_file(cls, path) -> "NormalizationRules":
        with open(path, encoding="utf-8") as f:
            spec = json.load(f)
        kwargs = {}
        if "punctuation" in spec:
            kwargs["punctuation_set"] = frozenset(spec["punctuation"])
        if "bracket_pairs" in spec:
            kwargs["bracket_pairs"] = tuple(spec["bracket_pairs"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(
            {
                "punctuation": "".join(sorted(self.punctuation_set)),
                "bracket_pairs": list(self.bracket_pairs),
            },
            ensure_ascii=False,
        )


DEFAULT_RULES = NormalizationRules()


def normalize_transcript(raw: str, rules: NormalizationRules = DEFAULT_RULES) -> str:
    """Lowercase, drop non-speech tokens and punctuation, collapse spaces.

    Idempotent total function: normalizing twice equals normalizing once.
    Bracketed non-speech tokens are removed whole; hyphens and dashes
    become a space; all other punctuation is deleted outright.
    """
    text = unicodedata.normalize("NFC", raw)
    text = rules.nonspeech_pattern.sub(" ", text)
    text = text.lower()
    text = text.translate({ord(c): " " for c in _HYPHENS})
    text = text.translate({ord(c): None for c in rules.punctuation_set})
    return _WHITESPACE.sub(" ", text).strip()
