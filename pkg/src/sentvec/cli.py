"""Command-line interface: train / embed / eval-sim / norm-profile / export-vec.

Results go to standard output, logs and progress to standard error.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys

from .evaluation import (
    arora_weight,
    embed_sentence,
    evaluate_similarity,
    norm_profile,
    read_similarity_tsv,
)
from .trainer import (
    PRESETS,
    ModelFormatError,
    TrainConfig,
    export_text_vectors,
    load_model,
    save_model,
    train,
)

THREADS_ENV_VAR = "SENTVEC_THREADS"

_DEFAULTS = TrainConfig()

# (flag, TrainConfig field, type, help)
_TRAIN_FLAGS = [
    ("--dim", "dim", int, f"embedding dimension [default: {_DEFAULTS.dim}]"),
    ("--min-count", "min_count", int,
     f"drop words seen fewer times [default: {_DEFAULTS.min_count}]"),
    ("--min-target-count", "min_target_count", int,
     f"minimum count for target/negative words [default: {_DEFAULTS.min_target_count}]"),
    ("--lr", "lr", float, f"initial learning rate [default: {_DEFAULTS.lr}]"),
    ("--epochs", "epochs", int, f"training passes [default: {_DEFAULTS.epochs}]"),
    ("--t", "subsample_t", float,
     f"target subsampling threshold [default: {_DEFAULTS.subsample_t}]"),
    ("--word-ngrams", "word_ngrams", int,
     f"max n-gram order; 1 = unigrams only [default: {_DEFAULTS.word_ngrams}]"),
    ("--buckets", "bucket_count", int,
     f"hash buckets for n-gram rows [default: {_DEFAULTS.bucket_count}]"),
    ("--dropout-k", "dropout_k", int,
     f"n-grams dropped per sentence [default: {_DEFAULTS.dropout_k}]"),
    ("--neg", "negatives", int,
     f"negatives sampled per target [default: {_DEFAULTS.negatives}]"),
    ("--l1", "l1_tau", float,
     f"L1 regularization strength, 0 disables [default: {_DEFAULTS.l1_tau}]"),
    ("--seed", "seed", int, f"random seed [default: {_DEFAULTS.seed}]"),
    ("--table-size", "negative_table_size", int,
     f"negative table entries [default: {_DEFAULTS.negative_table_size}]"),
]


def _default_threads() -> int:
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None:
        return _DEFAULTS.threads
    try:
        return max(1, int(value))
    except ValueError:
        return _DEFAULTS.threads


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentvec",
        description="Train and query averaged-n-gram sentence embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a text corpus")
    p_train.add_argument("--input", required=True,
                         help="corpus path, one sentence per line (.gz accepted)")
    p_train.add_argument("--output", required=True, help="model file to write")
    p_train.add_argument("--preset", choices=sorted(PRESETS),
                         help="load a shipped hyperparameter preset; explicit flags override")
    for flag, _, ftype, helptext in _TRAIN_FLAGS:
        p_train.add_argument(flag, type=ftype, default=None, help=helptext)
    p_train.add_argument("--threads", type=int, default=None,
                         help=f"worker threads [default: ${THREADS_ENV_VAR} or "
                              f"{_DEFAULTS.threads}]")
    p_train.add_argument("--lowercase", action="store_true",
                         help="lowercase all tokens [default: off]")
    p_train.add_argument("--checkpoint", default=None,
                         help="write the model here after every epoch [default: off]")
    p_train.add_argument("--report-every", type=int, default=None,
                         help=f"targets per loss report [default: {_DEFAULTS.report_every}]")
    p_train.set_defaults(func=cmd_train)

    p_embed = sub.add_parser("embed", help="embed stdin sentences, one per line")
    p_embed.add_argument("--model", required=True, help="trained model file")
    p_embed.add_argument("--oov-flag", action="store_true",
                         help="append a 0/1 column marking all-OOV lines [default: off]")
    p_embed.set_defaults(func=cmd_embed)

    p_eval = sub.add_parser("eval-sim", help="similarity correlation on a TSV dataset")
    p_eval.add_argument("--model", required=True, help="trained model file")
    p_eval.add_argument("--dataset", required=True,
                        help="TSV file: score<TAB>sentence_a<TAB>sentence_b")
    p_eval.set_defaults(func=cmd_eval_sim)

    p_norm = sub.add_parser("norm-profile",
                            help="per-word (log frequency, vector norm) table")
    p_norm.add_argument("--model", required=True, help="trained model file")
    p_norm.add_argument("--a", type=float, default=None,
                        help="also emit the static weight a/(a+f) column [default: off]")
    p_norm.add_argument("--output", default="-", help="output path [default: stdout]")
    p_norm.set_defaults(func=cmd_norm_profile)

    p_export = sub.add_parser("export-vec", help="write unigram vectors as text")
    p_export.add_argument("--model", required=True, help="trained model file")
    p_export.add_argument("--output", default="-", help="output path [default: stdout]")
    p_export.set_defaults(func=cmd_export_vec)

    return parser


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def cmd_train(args) -> int:
    kwargs = {}
    if args.preset:
        kwargs.update(PRESETS[args.preset])
    for flag, fieldname, _, _ in _TRAIN_FLAGS:
        value = getattr(args, flag.lstrip("-").replace("-", "_"))
        if value is not None:
            kwargs[fieldname] = value
    kwargs["threads"] = args.threads if args.threads is not None else _default_threads()
    kwargs["lowercase"] = args.lowercase
    if args.checkpoint is not None:
        kwargs["checkpoint_path"] = args.checkpoint
    if args.report_every is not None:
        kwargs["report_every"] = args.report_every
    config = TrainConfig(**kwargs)
    model = train(args.input, config)
    save_model(model, args.output)
    stats = model.stats
    logging.getLogger(__name__).info(
        "trained %d targets in %.1fs, wrote %s",
        stats.targets_processed, stats.elapsed_seconds, args.output,
    )
    return 0


def cmd_embed(args) -> int:
    model = load_model(args.model)
    for line in sys.stdin:
        vector, oov = embed_sentence(model, line.rstrip("\n"))
        fields = " ".join(format(x, ".6g") for x in vector)
        if args.oov_flag:
            fields = f"{fields} {int(oov)}"
        print(fields)
    return 0


def cmd_eval_sim(args) -> int:
    model = load_model(args.model)
    records = read_similarity_tsv(args.dataset)
    r, rho, n_used = evaluate_similarity(model, records)
    print(f"pearson={r:.6f} spearman={rho:.6f} n={n_used} "
          f"excluded={len(records) - n_used}")
    return 0


def cmd_norm_profile(args) -> int:
    model = load_model(args.model)
    profile = norm_profile(model)
    with _open_out(args.output) as fh:
        for log_freq, norm in profile:
            line = f"{log_freq:.6g} {norm:.6g}"
            if args.a is not None:
                line += f" {arora_weight(math.exp(log_freq), args.a):.6g}"
            fh.write(line + "\n")
    return 0


def cmd_export_vec(args) -> int:
    model = load_model(args.model)
    if args.output == "-":
        export_text_vectors(model, sys.stdout)
    else:
        export_text_vectors(model, args.output)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ModelFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
