"""Inference-time composition, similarity scoring, and diagnostics.

Sentence embedding at inference uses the full feature list (no dropout,
no masking, no subsampling).  Similarity datasets are tab-separated
``score<TAB>sentence_a<TAB>sentence_b`` lines; predicted cosine
similarities are correlated against the gold scores with Pearson's r and
Spearman's rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import extract_ngrams, tokenize
from .trainer import TrainedModel

__all__ = [
    "SimilarityRecord",
    "embed_sentence",
    "cosine",
    "pearson",
    "spearman",
    "evaluate_similarity",
    "pair_features",
    "norm_profile",
    "arora_weight",
    "read_similarity_tsv",
]


@dataclass
class SimilarityRecord:
    """One labelled sentence pair from a similarity dataset."""

    sentence_a: str
    sentence_b: str
    gold: float


def embed_sentence(model: TrainedModel, text: str) -> tuple[np.ndarray, bool]:
    """Compose the embedding of one sentence; returns (vector, all_oov flag).

    Tokens are looked up verbatim, then lowercased as a fallback, and
    skipped when still unknown.  A sentence with no in-vocabulary token
    yields the zero vector with the flag set.
    """
    index = model.vocab.word_index
    ids = []
    for token in tokenize(text):
        wid = index.get(token)
        if wid is None:
            wid = index.get(token.lower())
        if wid is not None:
            ids.append(wid)
    if not ids:
        return np.zeros(model.matrices.dim, dtype=model.matrices.source.dtype), True
    indices = extract_ngrams(ids, model.word_ngrams, len(model.vocab), model.buckets)
    rows = np.concatenate([indices.unigram_ids, indices.ngram_ids])
    return model.matrices.source[rows].mean(axis=0), False


def cosine(u, v) -> float:
    """Cosine similarity; zero by convention when either norm vanishes."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


def _validated(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape} vs {ys.shape}")
    if xs.size < 2:
        raise ValueError("need at least 2 observations")
    if np.ptp(xs) == 0.0 or np.ptp(ys) == 0.0:
        raise ValueError("zero variance: correlation undefined")
    return xs, ys


def pearson(xs, ys) -> float:
    """Product-moment correlation with 64-bit accumulation."""
    xs, ys = _validated(xs, ys)
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    return float((dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy)))


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; ties receive the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Rank correlation: Pearson on fractional midranks."""
    xs, ys = _validated(xs, ys)
    return pearson(_midranks(xs), _midranks(ys))


def evaluate_similarity(
    model: TrainedModel,
    records: list[SimilarityRecord],
) -> tuple[float, float, int]:
    """Correlate predicted pair cosines against gold scores.

    Records where either side has no in-vocabulary token are excluded (a
    constant zero prediction would poison the correlation); the number of
    used records is returned alongside (pearson, spearman).
    """
    golds: list[float] = []
    preds: list[float] = []
    for record in records:
        va, oov_a = embed_sentence(model, record.sentence_a)
        vb, oov_b = embed_sentence(model, record.sentence_b)
        if oov_a or oov_b:
            continue
        golds.append(record.gold)
        preds.append(cosine(va, vb))
    if len(golds) < 2:
        raise ValueError(
            f"need >=2 usable record pairs, got {len(golds)} "
            f"({len(records) - len(golds)} excluded as out-of-vocabulary)"
        )
    return pearson(golds, preds), spearman(golds, preds), len(golds)


def pair_features(v1, v2) -> np.ndarray:
    """Classifier features for a sentence pair: |v1 - v2| then v1 * v2."""
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    if v1.shape != v2.shape:
        raise ValueError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    return np.concatenate([np.abs(v1 - v2), v1 * v2])


def write_pair_features(
    model: TrainedModel,
    records: list[SimilarityRecord],
    destination,
) -> int:
    """Write one TSV row of 2*dim floats per record, for external classifiers.

    Every record produces a row (an all-OOV side contributes the zero
    vector); returns the number of rows written.  ``destination`` is a
    path or an open text file.
    """

    def _write(fh) -> int:
        for record in records:
            va, _ = embed_sentence(model, record.sentence_a)
            vb, _ = embed_sentence(model, record.sentence_b)
            features = pair_features(va, vb)
            fh.write("\t".join(format(x, ".6g") for x in features) + "\n")
        return len(records)

    if hasattr(destination, "write"):
        return _write(destination)
    with open(destination, "w", encoding="utf-8") as fh:
        return _write(fh)


def norm_profile(model: TrainedModel) -> np.ndarray:
    """Per-word (log natural frequency, source-vector L2 norm) pairs, shape (|V|, 2)."""
    freqs = model.vocab.frequencies()
    norms = np.linalg.norm(
        model.matrices.source[: len(model.vocab)].astype(np.float64), axis=1
    )
    return np.column_stack([np.log(freqs), norms])


def arora_weight(f_w: float, a: float) -> float:
    """Static frequency down-weighting a / (a + f_w), for diagnostic comparison."""
    if f_w <= 0:
        raise ValueError(f"frequency must be > 0, got {f_w}")
    if a <= 0:
        raise ValueError(f"weighting parameter must be > 0, got {a}")
    return a / (a + f_w)


def read_similarity_tsv(path: str) -> list[SimilarityRecord]:
    """Parse ``score<TAB>sentence_a<TAB>sentence_b`` lines; errors cite the line number."""
    records: list[SimilarityRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}"
                )
            try:
                gold = float(parts[0])
            except ValueError as err:
                raise ValueError(
                    f"{path}: line {lineno}: bad score {parts[0]!r}"
                ) from err
            records.append(SimilarityRecord(parts[1], parts[2], gold))
    return records
