"""Visual-context re-ranking of text-spotting hypotheses."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, ParseError, ValidationError, VisrankError
from .evaluate import EvalReport, SchemeResult, evaluate, format_report
from .lm import UnigramModel, build_ulm, ulm_rerank
from .records import Dictionary, EmbeddingSpace, Hypothesis, HypothesisList, VisualContext
from .relatedness import CooccurrenceTable, build_cooccurrence, cosine, swe_prob, tdp_prob, twe_prob
from .rerank import SCHEMES, Models, RankedOutput, RerankConfig, rerank, rerank_batch
from .twe import TrainConfig, TrainCorpus, sgns_gradient, sgns_loss, train_twe

__all__ = [
    "CooccurrenceTable", "ConfigError", "Dictionary", "DomainError", "EmbeddingSpace",
    "EvalReport", "Hypothesis", "HypothesisList", "Models", "ParseError", "RankedOutput",
    "RerankConfig", "SCHEMES", "SchemeResult", "TrainConfig", "TrainCorpus", "UnigramModel",
    "ValidationError", "VisrankError", "VisualContext", "build_cooccurrence", "build_ulm",
    "cosine", "evaluate", "format_report", "rerank", "rerank_batch", "sgns_gradient",
    "sgns_loss", "swe_prob", "tdp_prob", "train_twe", "twe_prob", "ulm_rerank",
]
