"""Tokenization, streaming vocabulary construction, and n-gram index extraction.

A corpus is newline-delimited UTF-8 text, one sentence per line (gzip
accepted when the filename ends in ".gz").  Sentences are tokenized by
splitting on Unicode whitespace; there is no internal sentence splitting.
Words surviving the frequency threshold get dense ids ordered by
descending count, and word n-grams are mapped to a fixed number of bucket
rows through a deterministic 32-bit hash so that models remain portable
across implementations.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Vocabulary",
    "SentenceIndices",
    "tokenize",
    "build_vocab",
    "ngram_hash",
    "extract_ngrams",
    "iter_corpus",
]

# 32-bit FNV-1a seeds the accumulator over the first id's little-endian
# bytes; subsequent ids are chained with the FastText n-gram multiplier.
FNV_OFFSET_BASIS = 2166136261
FNV_PRIME = 16777619
NGRAM_CHAIN_MULTIPLIER = 116049371
_U32 = 0xFFFFFFFF


def tokenize(text: str | bytes, lowercase: bool = False) -> list[str]:
    """Split one sentence into tokens on runs of Unicode whitespace.

    Empty tokens are never emitted.  ``bytes`` input is decoded as UTF-8
    first; invalid byte sequences raise ``UnicodeDecodeError``, whose
    message names the offending byte offset.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if lowercase:
        text = text.lower()
    return text.split()


@dataclass
class Vocabulary:
    """Word inventory with corpus counts and dense ids.

    Ids run 0..len-1 in descending count order (ties broken by first
    occurrence in the corpus), every kept word has count >= ``min_count``,
    and ``total_tokens`` is the number of kept token occurrences.
    """

    words: list[tuple[str, int]]
    word_index: dict[str, int]
    total_tokens: int
    min_count: int
    min_target_count: int
    _counts: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_index

    def id_of(self, word: str) -> int | None:
        return self.word_index.get(word)

    def word_of(self, word_id: int) -> str:
        return self.words[word_id][0]

    def counts(self) -> np.ndarray:
        """Per-id occurrence counts as an int64 vector."""
        if self._counts is None:
            self._counts = np.array([c for _, c in self.words], dtype=np.int64)
        return self._counts

    def frequencies(self) -> np.ndarray:
        """Normalized frequencies f_w = count(w) / total kept tokens; sums to 1."""
        return self.counts() / float(self.total_tokens)

    def target_eligible(self) -> np.ndarray:
        """Boolean mask of words usable as prediction targets."""
        return self.counts() >= self.min_target_count

    def encode(self, tokens: list[str]) -> list[int]:
        """Map tokens to ids, silently skipping out-of-vocabulary tokens."""
        index = self.word_index
        return [index[t] for t in tokens if t in index]


def build_vocab(
    sentences: Iterable[list[str]],
    min_count: int,
    min_target_count: int,
) -> Vocabulary:
    """Count tokens in a single streaming pass and keep the frequent ones.

    Words with fewer than ``min_count`` occurrences are dropped.  Ids are
    assigned in descending count order, ties broken by first occurrence.

    Raises ``ValueError`` for an empty corpus or invalid thresholds.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if min_target_count < 1:
        raise ValueError(f"min_target_count must be >= 1, got {min_target_count}")

    counts: dict[str, int] = {}
    for tokens in sentences:
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
    if not counts:
        raise ValueError("no tokens in corpus")

    # dict insertion order records first occurrence, which breaks count ties
    order = {w: i for i, w in enumerate(counts)}
    kept = sorted(
        ((w, c) for w, c in counts.items() if c >= min_count),
        key=lambda item: (-item[1], order[item[0]]),
    )
    if not kept:
        raise ValueError(
            f"no words survive min_count={min_count}; corpus too small"
        )
    return Vocabulary(
        words=kept,
        word_index={w: i for i, (w, _) in enumerate(kept)},
        total_tokens=sum(c for _, c in kept),
        min_count=min_count,
        min_target_count=min_target_count,
    )


@dataclass
class SentenceIndices:
    """Index form of one sentence: unigram rows plus hashed n-gram rows.

    ``unigram_ids`` holds vocabulary ids in token order.  ``ngram_ids``
    holds bucket row ids, each offset by the vocabulary size, and
    ``token_spans[k] = (start, end)`` is the inclusive token-position span
    covered by ``ngram_ids[k]``.  Duplicates are retained throughout: the
    combined list is a bag of features, not a set.
    """

    unigram_ids: np.ndarray
    ngram_ids: np.ndarray
    token_spans: np.ndarray

    def __len__(self) -> int:
        return len(self.unigram_ids) + len(self.ngram_ids)


def ngram_hash(window_ids, vocab_size: int, buckets: int) -> int:
    """Hash a window of unigram ids to a bucket row id in [vocab_size, vocab_size + buckets).

    The 32-bit accumulator is seeded by FNV-1a over the little-endian
    bytes of the first id, then chained as ``h = h * 116049371 + id`` with
    wrapping arithmetic for each subsequent id.  The constants are fixed:
    two implementations hashing the same window must agree.
    """
    if len(window_ids) == 0:
        raise ValueError("empty n-gram window")
    h = FNV_OFFSET_BASIS
    for byte in int(window_ids[0]).to_bytes(4, "little"):
        h = ((h ^ byte) * FNV_PRIME) & _U32
    for wid in window_ids[1:]:
        h = (h * NGRAM_CHAIN_MULTIPLIER + int(wid)) & _U32
    return vocab_size + (h % buckets)


def extract_ngrams(
    unigram_ids,
    order: int,
    vocab_size: int,
    buckets: int,
) -> SentenceIndices:
    """Build the full feature list of a sentence: unigrams plus hashed n-grams.

    Unigrams are kept verbatim.  For each order 2..``order``, every
    contiguous window contributes one hashed bucket id together with its
    token span.  ``order=1`` disables n-grams entirely.
    """
    if order < 1:
        raise ValueError(f"n-gram order must be >= 1, got {order}")
    if order >= 2 and buckets < 1:
        raise ValueError("buckets must be >= 1 when n-gram order >= 2")

    uni = np.asarray(unigram_ids, dtype=np.int32)
    gram_ids: list[int] = []
    spans: list[tuple[int, int]] = []
    for k in range(2, order + 1):
        for i in range(len(uni) - k + 1):
            gram_ids.append(ngram_hash(uni[i : i + k], vocab_size, buckets))
            spans.append((i, i + k - 1))
    return SentenceIndices(
        unigram_ids=uni,
        ngram_ids=np.asarray(gram_ids, dtype=np.int64),
        token_spans=np.asarray(spans, dtype=np.int32).reshape(-1, 2),
    )


def iter_corpus(path: str, lowercase: bool = False) -> Iterator[list[str]]:
    """Yield one token list per input line; transparently reads .gz files.

    Decoding failures are re-raised with the line number and byte offset
    of the first invalid byte.
    """
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as handle:
        for lineno, raw in enumerate(handle, start=1):
            try:
                yield tokenize(raw, lowercase=lowercase)
            except UnicodeDecodeError as err:
                raise ValueError(
                    f"{path}: line {lineno}: invalid UTF-8 at byte offset "
                    f"{err.start}: {err.reason}"
                ) from err
