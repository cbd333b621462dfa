"""Translation-memory retrieval: fuzzy and dense matching, calibration, evaluation."""

from ._tmret import (
    Encoder,
    FuzzyMatcher,
    VectorIndex,
    build_dense_index,
    build_lexical_index,
    calibrate,
    calibrate_threshold,
    eval,
    export_examples,
    ingest,
    lev,
    levenshtein_distance,
    levenshtein_similarity,
    mapping_f,
    mine_candidates,
    ndcg,
    retrieval_rate,
    retrieve,
    synth,
    tokenize,
    train,
)

__all__ = [
    "Encoder",
    "FuzzyMatcher",
    "VectorIndex",
    "build_dense_index",
    "build_lexical_index",
    "calibrate",
    "calibrate_threshold",
    "eval",
    "export_examples",
    "ingest",
    "lev",
    "levenshtein_distance",
    "levenshtein_similarity",
    "mapping_f",
    "mine_candidates",
    "ndcg",
    "retrieval_rate",
    "retrieve",
    "synth",
    "tokenize",
    "train",
]
