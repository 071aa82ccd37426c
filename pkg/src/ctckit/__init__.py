"""Grapheme-level CTC decoding and evaluation toolkit for Czech and Slovak."""

from .alphabet import (
    Alphabet,
    Grapheme,
    GraphemeKind,
    LabelTransferMap,
    build_alphabet,
    build_transfer_map,
    detokenize,
    make_alphabet,
    read_alphabet_file,
    tokenize,
    write_alphabet_file,
)
from .ctc import (
    BeamConfig,
    DecodeResult,
    beam_search_decode,
    collapse,
    greedy_decode,
    oracle_decode,
)
from .emissions import EmissionMatrix, read_ctce, write_ctce
from .metrics import CorpusStats, WerReport, corpus_wer, stats, wer
from .normalize import NormalizationRules, normalize_transcript
from .synth import SynthesisConfig, synth_emissions

__version__ = "0.1.0"
