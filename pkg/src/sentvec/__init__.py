"""Unsupervised sentence embeddings from averaged unigram and n-gram vectors.

Training predicts held-out words from the rest of their sentence with
negative sampling; the learned source vectors compose sentence embeddings
by plain averaging, making inference a single sparse matrix lookup.
"""

from .corpus import (
    SentenceIndices,
    Vocabulary,
    build_vocab,
    extract_ngrams,
    iter_corpus,
    ngram_hash,
    tokenize,
)
from .evaluation import (
    SimilarityRecord,
    arora_weight,
    cosine,
    embed_sentence,
    evaluate_similarity,
    norm_profile,
    pair_features,
    pearson,
    read_similarity_tsv,
    spearman,
    write_pair_features,
)
from .model import (
    EmbeddingMatrices,
    StepOutcome,
    apply_l1_after_step,
    compose_sentence,
    l1_prox,
    logistic_loss,
    lr_schedule,
    masked_context,
    ngram_dropout,
    sigmoid,
    train_step,
)
from .sampling import (
    NegativeTable,
    build_negative_table,
    discard_keep_prob,
    negative_prob,
    sample_negatives,
)
from .trainer import (
    PRESETS,
    ModelFormatError,
    TrainConfig,
    TrainedModel,
    TrainingStats,
    export_text_vectors,
    load_model,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingMatrices",
    "ModelFormatError",
    "NegativeTable",
    "PRESETS",
    "SentenceIndices",
    "SimilarityRecord",
    "StepOutcome",
    "TrainConfig",
    "TrainedModel",
    "TrainingStats",
    "Vocabulary",
    "apply_l1_after_step",
    "arora_weight",
    "build_negative_table",
    "build_vocab",
    "compose_sentence",
    "cosine",
    "discard_keep_prob",
    "embed_sentence",
    "evaluate_similarity",
    "export_text_vectors",
    "extract_ngrams",
    "iter_corpus",
    "l1_prox",
    "load_model",
    "logistic_loss",
    "lr_schedule",
    "masked_context",
    "negative_prob",
    "ngram_dropout",
    "ngram_hash",
    "norm_profile",
    "pair_features",
    "pearson",
    "read_similarity_tsv",
    "sample_negatives",
    "save_model",
    "sigmoid",
    "spearman",
    "tokenize",
    "train",
    "train_step",
    "write_pair_features",
]
