"""Czech and Slovak grapheme inventories and digraph-aware tokenization.

Both languages are written with the basic Latin alphabet plus diacritic
letters and digraphs that count as single letters of the national
orthography: Czech has 42 letters (15 diacritic letters and the digraph
"ch"), Slovak has 46 (17 diacritic letters and the digraphs "ch", "dz",
"dž").  For CTC decoding each letter is one output label; two extra
labels are reserved for the blank and the word separator (space).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

BLANK_SYMBOL = "⟨b⟩"  # "⟨b⟩", debug rendering only, never in transcripts
SPACE_SYMBOL = " "

_BASIC_LATIN = "abcdefghijklmnopqrstuvwxyz"

# 15 Czech diacritic letters, in national alphabetical order relative to
# their base letters (frozen inventory; see data/cs.alphabet).
_CS_LETTERS = [
    "a", "á", "b", "c", "č", "d", "ď", "e", "é", "ě", "f", "g", "h", "ch",
    "i", "í", "j", "k", "l", "m", "n", "ň", "o", "ó", "p", "q", "r", "ř",
    "s", "š", "t", "ť", "u", "ú", "ů", "v", "w", "x", "y", "ý", "z", "ž",
]

# 17 Slovak diacritic letters plus the digraphs "dz" and "dž"; Slovak has
# no "ě", "ř" or "ů" (frozen inventory; see data/sk.alphabet).
_SK_LETTERS = [
    "a", "á", "ä", "b", "c", "č", "d", "ď", "dz", "dž", "e", "é", "f", "g",
    "h", "ch", "i", "í", "j", "k", "l", "ĺ", "ľ", "m", "n", "ň", "o", "ó",
    "ô", "p", "q", "r", "ŕ", "s", "š", "t", "ť", "u", "ú", "v", "w", "x",
    "y", "ý", "z", "ž",
]

_EXPECTED_LETTER_COUNT = {"cs": 42, "sk": 46}


class GraphemeKind(enum.Enum):
    BASIC_LATIN = "basic-latin"
    DIACRITIC = "diacritic"
    DIGRAPH = "digraph"
    SPACE = "space"
    BLANK = "blank"


class UnknownCharacter(ValueError):
    """A character in the input cannot start any grapheme of the alphabet."""

    def __init__(self, position: int, char: str):
        self.position = position
        self.char = char
        super().__init__(f"unknown character {char!r} at position {position}")


class BlankInSequence(ValueError):
    """A blank label appeared in a sequence that should contain none."""


class AlphabetFormatError(ValueError):
    """An alphabet file does not follow the one-symbol-per-line format."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


@dataclass(frozen=True)
class Grapheme:
    symbol: str
    kind: GraphemeKind

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("grapheme symbol must be non-empty")
        if self.symbol.lower() != self.symbol:
            raise ValueError(f"grapheme symbol must be lowercase: {self.symbol!r}")
        is_digraph = self.kind is GraphemeKind.DIGRAPH
        if is_digraph != (len(self.symbol) == 2):
            raise ValueError(
                f"kind {self.kind.value} inconsistent with symbol {self.symbol!r}"
            )
        if (self.kind is GraphemeKind.BLANK) != (self.symbol == BLANK_SYMBOL):
            raise ValueError("blank kind is reserved for the blank marker")


@dataclass(frozen=True)
class Alphabet:
    """Ordered grapheme inventory with reserved blank and space labels.

    Immutable after construction and safe to share across concurrent
    decoders.  ``language`` is "cs" or "sk" for the built-in inventories
    and None for custom inventories (tests, files from other systems).
    """

    language: str | None
    graphemes: tuple[Grapheme, ...]
    blank_index: int = field(init=False)
    space_index: int = field(init=False)

    def __post_init__(self):
        symbols = [g.symbol for g in self.graphemes]
        if len(set(symbols)) != len(symbols):
            raise ValueError("grapheme symbols must be pairwise distinct")
        blanks = [i for i, g in enumerate(self.graphemes) if g.kind is GraphemeKind.BLANK]
        spaces = [i for i, g in enumerate(self.graphemes) if g.kind is GraphemeKind.SPACE]
        if len(blanks) != 1 or len(spaces) != 1:
            raise ValueError("alphabet needs exactly one blank and one space")
        object.__setattr__(self, "blank_index", blanks[0])
        object.__setattr__(self, "space_index", spaces[0])
        if self.language is not None:
            expected = _EXPECTED_LETTER_COUNT.get(self.language)
            if expected is None:
                raise ValueError(f"unknown language {self.language!r}")
            if self.letter_count != expected:
                raise ValueError(
                    f"{self.language} inventory must have {expected} letters, "
                    f"got {self.letter_count}"
                )

    def __len__(self) -> int:
        return len(self.graphemes)

    @property
    def letter_count(self) -> int:
        """Number of letters, excluding the blank and space labels."""
        return len(self.graphemes) - 2

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(g.symbol for g in self.graphemes)

    def index_of(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.symbols


def _classify(symbol: str) -> GraphemeKind:
    if len(symbol) == 2:
        return GraphemeKind.DIGRAPH
    if symbol in _BASIC_LATIN:
        return GraphemeKind.BASIC_LATIN
    return GraphemeKind.DIACRITIC


def build_alphabet(language: str) -> Alphabet:
    """Return the fixed grapheme inventory for "cs" or "sk".

    Index 0 is the blank, index 1 the space, letters follow in national
    alphabetical order.
    """
    try:
        letters = {"cs": _CS_LETTERS, "sk": _SK_LETTERS}[language]
    except KeyError:
        raise ValueError(f"language must be 'cs' or 'sk', got {language!r}") from None
    graphemes = [
        Grapheme(BLANK_SYMBOL, GraphemeKind.BLANK),
        Grapheme(SPACE_SYMBOL, GraphemeKind.SPACE),
    ]
    graphemes.extend(Grapheme(s, _classify(s)) for s in letters)
    return Alphabet(language, tuple(graphemes))


def make_alphabet(letters: list[str], language: str | None = None) -> Alphabet:
    """Build a custom alphabet from letter symbols (blank and space prepended)."""
    graphemes = [
        Grapheme(BLANK_SYMBOL, GraphemeKind.BLANK),
        Grapheme(SPACE_SYMBOL, GraphemeKind.SPACE),
    ]
    graphemes.extend(Grapheme(s, _classify(s)) for s in letters)
    return Alphabet(language, tuple(graphemes))


def tokenize(text: str, alphabet: Alphabet) -> list[int]:
    """Map normalized lowercase text to grapheme indices.

    Longest match first: at each position a digraph beats a single
    character, so "chlap" becomes [ch, l, a, p].  Deterministic; never
    emits the blank index.  Raises UnknownCharacter when a character
    cannot start any grapheme.
    """
    index = {g.symbol: i for i, g in enumerate(alphabet.graphemes)
             if g.kind is not GraphemeKind.BLANK}
    out: list[int] = []
    pos = 0
    n = len(text)
    while pos < n:
        two = text[pos:pos + 2]
        if len(two) == 2 and two in index:
            out.append(index[two])
            pos += 2
            continue
        one = text[pos]
        idx = index.get(one)
        if idx is None:
            raise UnknownCharacter(pos, one)
        out.append(idx)
        pos += 1
    return out


def detokenize(indices: list[int], alphabet: Alphabet) -> str:
    """Concatenate grapheme symbols; the space label renders as " ".

    Inverse of tokenize on tokenizable text.  Raises BlankInSequence if
    the blank label appears.
    """
    parts = []
    for i in indices:
        if i == alphabet.blank_index:
            raise BlankInSequence(f"blank label at output position {len(parts)}")
        parts.append(alphabet.graphemes[i].symbol)
    return "".join(parts)


@dataclass(frozen=True)
class LabelTransferMap:
    """Label correspondence between two alphabets for transfer scenarios.

    ``mapping[j]`` is the source index for target grapheme j, or None for
    a target grapheme absent from the source (a new label whose weights
    cannot be transferred).  ``dropped_symbols`` lists source symbols with
    no counterpart in the target.
    """

    source_language: str | None
    target_language: str | None
    mapping: tuple[int | None, ...]
    dropped_symbols: tuple[str, ...]

    @property
    def new_label_symbols(self) -> tuple[str, ...]:
        return tuple(self._target_symbols[j]
                     for j, src in enumerate(self.mapping) if src is None)

    # set by build_transfer_map; kept out of the dataclass equality
    _target_symbols: tuple[str, ...] = field(default=(), compare=False, repr=False)


def build_transfer_map(source: Alphabet, target: Alphabet) -> LabelTransferMap:
    """Map every target grapheme to a source index or mark it new-label."""
    source_index = {g.symbol: i for i, g in enumerate(source.graphemes)}
    mapping = tuple(source_index.get(g.symbol) for g in target.graphemes)
    target_symbols = {g.symbol for g in target.graphemes}
    dropped = tuple(g.symbol for g in source.graphemes if g.symbol not in target_symbols)
    return LabelTransferMap(
        source_language=source.language,
        target_language=target.language,
        mapping=mapping,
        dropped_symbols=dropped,
        _target_symbols=target.symbols,
    )


def write_alphabet_file(alphabet: Alphabet, path) -> None:
    """Serialize as UTF-8 text, one grapheme per line in index order.

    The blank and space lines are written as the directives "#blank" and
    "#space" so their indices survive the round trip byte-identically.
    """
    lines = []
    for g in alphabet.graphemes:
        if g.kind is GraphemeKind.BLANK:
            lines.append("#blank")
        elif g.kind is GraphemeKind.SPACE:
            lines.append("#space")
        else:
            lines.append(g.symbol)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_alphabet_file(path) -> Alphabet:
    """Parse an alphabet file written by write_alphabet_file.

    The language tag is recovered by comparing the letters against the
    built-in inventories; unrecognized inventories load with language
    None.
    """
    graphemes: list[Grapheme] = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if line == "#blank":
                g = Grapheme(BLANK_SYMBOL, GraphemeKind.BLANK)
            elif line == "#space":
                g = Grapheme(SPACE_SYMBOL, GraphemeKind.SPACE)
            elif line.startswith("#"):
                raise AlphabetFormatError(lineno, f"unknown directive {line!r}")
            elif not line:
                raise AlphabetFormatError(lineno, "empty symbol line")
            elif len(line) > 2:
                raise AlphabetFormatError(lineno, f"symbol too long: {line!r}")
            else:
                g = Grapheme(line, _classify(line))
            graphemes.append(g)
    letters = [g.symbol for g in graphemes
               if g.kind not in (GraphemeKind.BLANK, GraphemeKind.SPACE)]
    language = None
    if letters == _CS_LETTERS:
        language = "cs"
    elif letters == _SK_LETTERS:
        language = "sk"
    try:
        return Alphabet(language, tuple(graphemes))
    except ValueError as exc:
        raise AlphabetFormatError(0, str(exc)) from exc
