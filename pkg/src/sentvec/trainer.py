"""Training orchestration: epochs, worker threads, progress, and model files.

Workers share the parameter matrices without locks; element-level write
races are tolerated by design, and a single-threaded run is bit-exactly
reproducible from its seed.  The trained model serializes to a fixed
little-endian binary layout (magic "S2VM") plus a text vector export for
interop with word-vector tooling.
"""

from __future__ import annotations

import logging
import os
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    SentenceIndices,
    Vocabulary,
    build_vocab,
    extract_ngrams,
    iter_corpus,
)
from .model import (
    EmbeddingMatrices,
    apply_l1_after_step,
    lr_schedule,
    ngram_dropout,
    train_step,
)
from .sampling import (
    DEFAULT_TABLE_SIZE,
    NegativeTable,
    build_negative_table,
    discard_keep_prob,
    sample_negatives,
)

__all__ = [
    "TrainConfig",
    "TrainingStats",
    "TrainedModel",
    "ModelFormatError",
    "PRESETS",
    "train",
    "save_model",
    "load_model",
    "export_text_vectors",
]

logger = logging.getLogger(__name__)

MAGIC = b"S2VM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQQIdQ")  # magic, version, dim, |V|, buckets, order, t, tokens


class ModelFormatError(Exception):
    """Raised for model files with bad magic, version, or truncation."""


@dataclass
class TrainConfig:
    """All training hyperparameters plus engine knobs."""

    dim: int = 100
    min_count: int = 5
    min_target_count: int = 5
    lr: float = 0.2
    epochs: int = 5
    subsample_t: float = 1e-5
    word_ngrams: int = 1
    bucket_count: int = 2_000_000
    dropout_k: int = 0
    negatives: int = 10
    l1_tau: float = 0.0
    threads: int = 1
    seed: int = 42
    lowercase: bool = False
    negative_table_size: int = DEFAULT_TABLE_SIZE
    checkpoint_path: str | None = None
    report_every: int = 1_000_000

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.word_ngrams < 1:
            raise ValueError(f"word_ngrams must be >= 1, got {self.word_ngrams}")
        if self.word_ngrams >= 2 and self.bucket_count < 1:
            raise ValueError("bucket_count must be >= 1 for n-gram models")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.l1_tau < 0:
            raise ValueError(f"l1_tau must be >= 0, got {self.l1_tau}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.subsample_t <= 0:
            raise ValueError(f"subsample_t must be > 0, got {self.subsample_t}")
        if self.min_count < 1 or self.min_target_count < 1:
            raise ValueError("min_count and min_target_count must be >= 1")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.dropout_k < 0:
            raise ValueError(f"dropout_k must be >= 0, got {self.dropout_k}")
        if self.negative_table_size < 1:
            raise ValueError("negative_table_size must be >= 1")
        if self.report_every < 1:
            raise ValueError("report_every must be >= 1")


# Shipped default hyperparameter presets, one per corpus/feature pairing.
PRESETS: dict[str, dict] = {
    "books-uni": dict(
        dim=700, min_count=5, min_target_count=8, lr=0.2, epochs=13,
        subsample_t=1e-5, word_ngrams=1, dropout_k=0, negatives=10,
    ),
    "books-bi": dict(
        dim=700, min_count=5, min_target_count=5, lr=0.2, epochs=12,
        subsample_t=5e-6, word_ngrams=2, dropout_k=7, negatives=10,
    ),
    "wiki-uni": dict(
        dim=600, min_count=8, min_target_count=20, lr=0.2, epochs=9,
        subsample_t=1e-5, word_ngrams=1, dropout_k=0, negatives=10,
    ),
    "wiki-bi": dict(
        dim=700, min_count=8, min_target_count=20, lr=0.2, epochs=9,
        subsample_t=5e-6, word_ngrams=2, dropout_k=4, negatives=10,
    ),
    "twitter-uni": dict(
        dim=700, min_count=20, min_target_count=20, lr=0.2, epochs=3,
        subsample_t=1e-6, word_ngrams=1, dropout_k=0, negatives=10,
    ),
    "twitter-bi": dict(
        dim=700, min_count=20, min_target_count=20, lr=0.2, epochs=3,
        subsample_t=1e-6, word_ngrams=2, dropout_k=3, negatives=10,
    ),
}


@dataclass
class TrainingStats:
    """Post-run accounting; not part of the serialized model."""

    loss_windows: list[float]
    targets_processed: int
    elapsed_seconds: float


@dataclass
class TrainedModel:
    """A trained (or loaded) model: vocabulary, matrices, and composition settings."""

    vocab: Vocabulary
    matrices: EmbeddingMatrices
    word_ngrams: int
    buckets: int
    subsample_t: float
    stats: TrainingStats | None = field(default=None, compare=False)


class _Progress:
    """Shared processed-target counter; reads are lock-free."""

    __slots__ = ("value", "_lock")

    def __init__(self) -> None:
        self.value = 0
        self._lock = threading.Lock()

    def add(self, n: int) -> None:
        with self._lock:
            self.value += n


class _LossReporter:
    """Aggregates step losses into fixed-size reporting windows."""

    def __init__(self, report_every: int) -> None:
        self.report_every = report_every
        self.window_means: list[float] = []
        self._sum = 0.0
        self._count = 0
        self._lock = threading.Lock()

    def add(self, loss_sum: float, count: int) -> None:
        if count == 0:
            return
        with self._lock:
            self._sum += loss_sum
            self._count += count
            if self._count >= self.report_every:
                mean = self._sum / self._count
                self.window_means.append(mean)
                logger.info(
                    "window %d: mean loss %.6f over %d targets",
                    len(self.window_means), mean, self._count,
                )
                self._sum = 0.0
                self._count = 0

    def finalize(self) -> list[float]:
        with self._lock:
            if self._count:
                self.window_means.append(self._sum / self._count)
                self._sum = 0.0
                self._count = 0
            return self.window_means


def _encode_corpus(path, vocab, order, buckets, lowercase):
    """Second pass: map sentences to index form, skipping those with < 2 known tokens."""
    sentences = []
    for tokens in iter_corpus(path, lowercase=lowercase):
        ids = vocab.encode(tokens)
        if len(ids) < 2:
            continue
        sentences.append(extract_ngrams(ids, order, len(vocab), buckets))
    return sentences


def _run_shard(
    sentences: list[SentenceIndices],
    shard: np.ndarray,
    keep_prob: np.ndarray,
    eligible: np.ndarray,
    table: NegativeTable,
    config: TrainConfig,
    matrices: EmbeddingMatrices,
    progress: _Progress,
    reporter: _LossReporter,
    rng: np.random.Generator,
    total_expected: float,
) -> None:
    base_lr = config.lr
    n_neg = config.negatives
    drop_k = config.dropout_k if config.word_ngrams >= 2 else 0
    tau = config.l1_tau
    for si in shard:
        sent = sentences[si]
        ids = sent.unigram_ids
        gates = rng.random(len(ids))
        positions = np.nonzero((gates < keep_prob[ids]) & eligible[ids])[0]
        if len(positions) == 0:
            continue
        loss_sum = 0.0
        done = 0
        for pos in positions:
            features = ngram_dropout(sent, drop_k, rng) if drop_k else sent
            negatives = sample_negatives(table, int(ids[pos]), n_neg, rng)
            lr = lr_schedule(base_lr, progress.value / total_expected)
            outcome = train_step(features, int(pos), negatives, lr, matrices)
            if outcome is None:
                continue
            if tau:
                apply_l1_after_step(
                    outcome, tau, lr, outcome.source_touch_count, matrices
                )
            loss_sum += outcome.loss
            done += 1
        progress.add(done)
        reporter.add(loss_sum, done)


def train(corpus_path: str, config: TrainConfig) -> TrainedModel:
    """Train a model over ``config.epochs`` shuffled passes of the corpus.

    Per epoch the shuffled sentence order is split into one contiguous
    shard per worker.  Each kept token position (Bernoulli gate with its
    word's keep probability, restricted to target-eligible words) yields
    one SGD step with freshly sampled n-gram dropout and negatives.  With
    ``threads=1`` the run is bit-deterministic in the seed.
    """
    config.validate()
    started = time.perf_counter()

    vocab = build_vocab(
        iter_corpus(corpus_path, lowercase=config.lowercase),
        config.min_count,
        config.min_target_count,
    )
    buckets = config.bucket_count if config.word_ngrams >= 2 else 0
    sentences = _encode_corpus(
        corpus_path, vocab, config.word_ngrams, buckets, config.lowercase
    )
    if not sentences:
        raise ValueError("corpus has no trainable sentences after vocabulary thresholds")
    logger.info(
        "vocabulary %d words, %d tokens, %d trainable sentences",
        len(vocab), vocab.total_tokens, len(sentences),
    )

    freqs = vocab.frequencies()
    keep_prob = np.array(
        [discard_keep_prob(f, config.subsample_t) for f in freqs], dtype=np.float64
    )
    eligible = vocab.target_eligible()
    expected_per_epoch = float((vocab.counts() * keep_prob * eligible).sum())
    total_expected = max(1.0, config.epochs * expected_per_epoch)

    table = build_negative_table(
        vocab, config.negative_table_size, config.min_target_count, seed=config.seed
    )
    matrices = EmbeddingMatrices.initialize(
        len(vocab), buckets, config.dim, np.random.default_rng([config.seed, 0])
    )
    model = TrainedModel(
        vocab=vocab,
        matrices=matrices,
        word_ngrams=config.word_ngrams,
        buckets=buckets,
        subsample_t=config.subsample_t,
    )

    progress = _Progress()
    reporter = _LossReporter(config.report_every)
    # distinct, stable RNG streams: [seed, 0] init, [seed, 1, w] workers, [seed, 2, e] shuffles
    worker_rngs = [
        np.random.default_rng([config.seed, 1, w]) for w in range(config.threads)
    ]

    for epoch in range(config.epochs):
        perm = np.random.default_rng([config.seed, 2, epoch]).permutation(
            len(sentences)
        )
        bounds = np.linspace(0, len(sentences), config.threads + 1).astype(np.int64)
        shard_args = [
            (
                sentences, perm[bounds[w] : bounds[w + 1]], keep_prob, eligible,
                table, config, matrices, progress, reporter, worker_rngs[w],
                total_expected,
            )
            for w in range(config.threads)
        ]
        if config.threads == 1:
            _run_shard(*shard_args[0])
        else:
            workers = [
                threading.Thread(target=_run_shard, args=args, daemon=True)
                for args in shard_args
            ]
            for worker in workers:
                worker.start()
            for worker in workers:
                worker.join()
        logger.info("epoch %d/%d done, %d targets", epoch + 1, config.epochs, progress.value)
        if config.checkpoint_path:
            save_model(model, config.checkpoint_path)

    model.stats = TrainingStats(
        loss_windows=reporter.finalize(),
        targets_processed=progress.value,
        elapsed_seconds=time.perf_counter() - started,
    )
    return model


def save_model(model: TrainedModel, path: str) -> None:
    """Write the binary model file atomically (temp file + rename)."""
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(
                _HEADER.pack(
                    MAGIC,
                    FORMAT_VERSION,
                    model.matrices.dim,
                    len(model.vocab),
                    model.buckets,
                    model.word_ngrams,
                    model.subsample_t,
                    model.vocab.total_tokens,
                )
            )
            for word, count in model.vocab.words:
                encoded = word.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<Q", count))
            fh.write(np.ascontiguousarray(model.matrices.source, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(model.matrices.target, dtype="<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_exact(fh, n: int, section: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ModelFormatError(
            f"truncated model file in {section} section: "
            f"expected {n} bytes, got {len(data)}"
        )
    return data


def load_model(path: str) -> TrainedModel:
    """Read a model file back; matrices round-trip bit-exactly."""
    with open(path, "rb") as fh:
        header = _read_exact(fh, _HEADER.size, "header")
        magic, version, dim, vocab_size, buckets, order, t, total_tokens = (
            _HEADER.unpack(header)
        )
        if magic != MAGIC:
            raise ModelFormatError(
                f"bad magic {magic!r}: not an {MAGIC.decode()} model file"
            )
        if version != FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported model format version {version}, expected {FORMAT_VERSION}"
            )
        words: list[tuple[str, int]] = []
        for _ in range(vocab_size):
            (length,) = struct.unpack("<I", _read_exact(fh, 4, "vocabulary"))
            surface = _read_exact(fh, length, "vocabulary").decode("utf-8")
            (count,) = struct.unpack("<Q", _read_exact(fh, 8, "vocabulary"))
            words.append((surface, count))
        # wire format carries no thresholds; loaded models use the weakest ones
        vocab = Vocabulary(
            words=words,
            word_index={w: i for i, (w, _) in enumerate(words)},
            total_tokens=total_tokens,
            min_count=1,
            min_target_count=1,
        )
        source = np.frombuffer(
            _read_exact(fh, 4 * dim * (vocab_size + buckets), "source matrix"),
            dtype="<f4",
        ).reshape(vocab_size + buckets, dim).copy()
        target = np.frombuffer(
            _read_exact(fh, 4 * dim * vocab_size, "target matrix"), dtype="<f4"
        ).reshape(vocab_size, dim).copy()
    return TrainedModel(
        vocab=vocab,
        matrices=EmbeddingMatrices(source=source, target=target, dim=dim),
        word_ngrams=order,
        buckets=buckets,
        subsample_t=t,
    )


def export_text_vectors(model: TrainedModel, destination) -> None:
    """Write unigram source vectors as text: "<count> <dim>" header, then one word per line.

    ``destination`` is a path or an open text file; floats carry 6
    significant digits.
    """
    rows = model.matrices.source
    vocab = model.vocab

    def _write(fh) -> None:
        fh.write(f"{len(vocab)} {model.matrices.dim}\n")
        for wid, (word, _) in enumerate(vocab.words):
            values = " ".join(format(x, ".6g") for x in rows[wid])
            fh.write(f"{word} {values}\n")

    if hasattr(destination, "write"):
        _write(destination)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            _write(fh)
