"""Word alignment toolkit: lexical translation models (uniform, diagonal
prior, first-order), symmetrization heuristics, alignment-error-rate
evaluation, consistent phrase extraction, and annotation projection."""

from .alignment import (
    AlignmentFunction,
    AlignmentSet,
    grow_diag_final,
    intersect,
    symmetrize,
    to_set,
    transpose,
    union,
)
from .corpus import Bitext, SentencePair, Vocabulary, load_bitext
from .errors import (
    AlignkitError,
    ConfigError,
    DataFormatError,
    DegeneratePairError,
    DimensionMismatchError,
    NumericError,
)
from .evaluation import EvalReport, aer, evaluate_corpus, parse_gold, precision_recall
from .hmm import HmmConfig, HmmParams
from .model1 import Model1Config
from .model2 import DiagonalPrior, Model2Config, Model2Params
from .phrases import PhrasePair, build_phrase_table, extract_consistent_phrases
from .projection import Span, project_spans, project_token_labels
from .synth import SynthConfig, generate
from .ttable import TranslationTable

__version__ = "0.1.0"

__all__ = [
    "AlignmentFunction",
    "AlignmentSet",
    "AlignkitError",
    "Bitext",
    "ConfigError",
    "DataFormatError",
    "DegeneratePairError",
    "DiagonalPrior",
    "DimensionMismatchError",
    "EvalReport",
    "HmmConfig",
    "HmmParams",
    "Model1Config",
    "Model2Config",
    "Model2Params",
    "NumericError",
    "PhrasePair",
    "SentencePair",
    "Span",
    "SynthConfig",
    "TranslationTable",
    "Vocabulary",
    "aer",
    "build_phrase_table",
    "evaluate_corpus",
    "extract_consistent_phrases",
    "generate",
    "grow_diag_final",
    "intersect",
    "load_bitext",
    "parse_gold",
    "precision_recall",
    "project_spans",
    "project_token_labels",
    "symmetrize",
    "to_set",
    "transpose",
    "union",
]
