"""Reference string extraction by line-level CRF sequence labeling.

Every text line of a document is labeled B-REF, I-REF, O-REF or O by a
linear-chain conditional random field; labeled lines are then grouped into
whole reference strings.
"""

from .corpus import (
    LABELS,
    CorpusError,
    Document,
    Label,
    LabeledDocument,
    LineRecord,
    read_corpus,
    read_jsonl,
    read_tsv,
    validate,
    write_jsonl,
    write_tsv,
)
from .crf import CrfModel, log_partition, marginals, sequence_log_prob, viterbi
from .evaluation import Metrics, evaluate, line_metrics, reference_metrics
from .extraction import ReferenceString, extract, group
from .features import FeatureConfig, FeatureSpace, build_feature_space, extract_line_features, vectorize
from .model_io import load, save
from .synthgen import GenConfig, generate
from .training import TrainConfig, TrainReport, kfold_evaluate, train

__version__ = "0.1.0"

__all__ = [
    "LABELS",
    "CorpusError",
    "CrfModel",
    "Document",
    "FeatureConfig",
    "FeatureSpace",
    "GenConfig",
    "Label",
    "LabeledDocument",
    "LineRecord",
    "Metrics",
    "ReferenceString",
    "TrainConfig",
    "TrainReport",
    "build_feature_space",
    "evaluate",
    "extract",
    "extract_line_features",
    "generate",
    "group",
    "kfold_evaluate",
    "line_metrics",
    "load",
    "log_partition",
    "marginals",
    "read_corpus",
    "read_jsonl",
    "read_tsv",
    "reference_metrics",
    "save",
    "sequence_log_prob",
    "train",
    "validate",
    "vectorize",
    "viterbi",
    "write_jsonl",
    "write_tsv",
]
