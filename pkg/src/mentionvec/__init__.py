"""Static word vectors distilled from contextualized mention vectors.

The pipeline: a mention store (per-word contextual vectors from sampled
corpus mentions) is filtered for idiosyncratic mentions with a cosine kNN
rule and averaged into one static vector per word; the evaluation harness
covers lexical classification (MAP/F1 with a linear SVM) and word
similarity (Spearman).
"""

from .aggregate import AggregationMethod, aggregate, concat_normalized, nearest_words
from .errors import EvaluationError, MentionVecError, StoreFormatError
from .knn import (
    FilterReport,
    NeighborResult,
    cosine,
    filter_idiosyncratic,
    filter_outliers,
    knn_all,
)
from .lexclass import (
    ClassSplit,
    EvalResult,
    LexDataset,
    SplitSpec,
    SvmModel,
    average_precision,
    decision_values,
    evaluate,
    f1_score,
    load_dataset,
    make_splits,
    svm_objective,
    train_svm,
)
from .similarity import (
    SimDataset,
    eval_similarity,
    load_sim_dataset,
    quartile_disagreements,
    spearman,
)
from .store import (
    MentionStore,
    StaticEmbedding,
    WordEntry,
    average_first_layers,
    load_text_embedding,
    read_store,
    save_text_embedding,
    slice_layer,
    write_store,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationMethod",
    "ClassSplit",
    "EvalResult",
    "EvaluationError",
    "FilterReport",
    "LexDataset",
    "MentionStore",
    "MentionVecError",
    "NeighborResult",
    "SimDataset",
    "SplitSpec",
    "StaticEmbedding",
    "StoreFormatError",
    "SvmModel",
    "WordEntry",
    "aggregate",
    "average_first_layers",
    "average_precision",
    "concat_normalized",
    "cosine",
    "decision_values",
    "eval_similarity",
    "evaluate",
    "f1_score",
    "filter_idiosyncratic",
    "filter_outliers",
    "knn_all",
    "load_dataset",
    "load_sim_dataset",
    "load_text_embedding",
    "make_splits",
    "nearest_words",
    "quartile_disagreements",
    "read_store",
    "save_text_embedding",
    "slice_layer",
    "spearman",
    "svm_objective",
    "train_svm",
    "write_store",
]
