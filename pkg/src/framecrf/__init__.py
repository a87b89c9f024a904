"""Frame-semantic analysis with one linear-chain CRF per lexical unit."""

__version__ = "0.1.0"

from .corpus import (OTHER, Document, FrameInstance, FrameLexicon, RoleSpan, Sentence, Token,
                     iter_lu_occurrences, parse_corpus, parse_lexicon, write_corpus)
from .crf import CrfModel, TrainHyper
from .evaluation import PRF, EvalReport, evaluate_levels
from .features import FeatureConfig
from .pipeline import ModelRegistry, predict_corpus, predict_sentence, train_all
