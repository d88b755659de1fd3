"""Command-line interface: train, transform, verify, eval.

Every command is deterministic given its flags and seeds. Validation
failures exit 1 before any output file is touched; ``verify`` exits 2 when
a self-check fails.
"""

from __future__ import annotations

import argparse
import sys

from .encoder import DEFAULT_DIM_CAP, CorruptionConfig
from .errors import DcotError, DimensionTooLarge
from .evaluation import LabeledCorpus, compare_representations
from .explicit import MAX_ENUMERATION_DIM
from .model_io import load_file, save_file
from .stack import train_stack_with_residuals, transform
from .text import (
    Corpus,
    build_vocabulary,
    read_labeled_corpus,
    read_line_corpus,
    select_prototypes,
    tokenize,
    vectorize,
)
from .validation import check_probability
from .verify import run_verification


class _StageFailure(Exception):
    """Carry the failed stage name and the underlying error to main()."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


def _run(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DcotError, ValueError) as exc:
        raise _StageFailure(stage, exc) from exc


def _validate_common(args: argparse.Namespace) -> None:
    if hasattr(args, "corruption"):
        check_probability(args.corruption)
    if getattr(args, "prototypes", None) is not None and args.prototypes < 1:
        raise ValueError("prototype count must be >= 1")
    if getattr(args, "layers", None) is not None and args.layers < 1:
        raise ValueError("layer count must be >= 1")
    if getattr(args, "ridge", None) is not None and args.ridge < 0:
        raise ValueError("ridge must be non-negative")
    if getattr(args, "min_count", None) is not None and args.min_count < 1:
        raise ValueError("min-count must be >= 1")
    if getattr(args, "k", None) is not None and args.k < 1:
        raise ValueError("k must be >= 1")


def _format_float(v: float) -> str:
    return repr(float(v))


def cmd_train(args: argparse.Namespace) -> int:
    _run("argument-validation", _validate_common, args)
    texts = _run("corpus-loading", read_line_corpus, args.input)
    if not texts:
        raise _StageFailure("corpus-loading", ValueError("input corpus is empty"))
    token_docs = [tokenize(t) for t in texts]
    vocab = _run("vocabulary", build_vocabulary, token_docs, args.min_count)
    prototypes = _run("prototype-selection", select_prototypes, vocab, args.prototypes)
    corpus = Corpus(tuple(vectorize(toks, vocab) for toks in token_docs))
    config = CorruptionConfig(p=args.corruption, ridge=args.ridge)
    model, residuals = _run(
        "training",
        train_stack_with_residuals,
        corpus,
        vocab,
        prototypes,
        config,
        args.layers,
        not args.no_squash,
        args.max_dim,
    )
    n_bytes = _run("model-write", save_file, model, args.out)
    print(f"documents: {corpus.n}")
    print(f"d: {model.d}")
    print(f"r: {model.r}")
    print(f"l: {model.n_layers}")
    print(f"p: {_format_float(model.p)}")
    print(f"ridge: {'auto' if model.ridge is None else _format_float(model.ridge)}")
    for i, res in enumerate(residuals, start=1):
        print(f"layer {i} residual: {res:.6e}")
    print(f"model bytes: {n_bytes}")
    return 0


def _format_transform_line(rep) -> str:
    x_segment = " ".join(f"{i}:{v}" for i, v in rep.original.entries())
    segments = [x_segment]
    for z in rep.layer_outputs:
        segments.append(" ".join(_format_float(v) for v in z))
    return "\t".join(segments)


def cmd_transform(args: argparse.Namespace) -> int:
    model = _run("model-loading", load_file, args.model)
    texts = _run("corpus-loading", read_line_corpus, args.input)
    lines = []
    for text in texts:
        x = vectorize(tokenize(text), model.vocab)
        rep = _run("transform", transform, model, x)
        lines.append(_format_transform_line(rep))
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
    except OSError as exc:
        raise _StageFailure("output-write", exc) from exc
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _run("argument-validation", _validate_common, args)
    model = _run("model-loading", load_file, args.model)
    labels, texts = _run("corpus-loading", read_labeled_corpus, args.input)
    if not texts:
        raise _StageFailure("corpus-loading", ValueError("labeled corpus is empty"))
    docs = tuple(vectorize(tokenize(t), model.vocab) for t in texts)
    labeled = LabeledCorpus(corpus=Corpus(docs), labels=tuple(labels))
    report = _run(
        "evaluation",
        compare_representations,
        labeled,
        model,
        split_seed=args.seed,
        k=args.k,
    )
    print(report.format_text())
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(report.to_json() + "\n")
        except OSError as exc:
            raise _StageFailure("report-write", exc) from exc
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.mc_samples < 1:
        raise _StageFailure("argument-validation", ValueError("mc-samples must be >= 1"))
    if args.dims < 2:
        raise _StageFailure("argument-validation", ValueError("dims must be >= 2"))
    if args.enumerate and args.dims > MAX_ENUMERATION_DIM:
        raise _StageFailure(
            "argument-validation",
            DimensionTooLarge(
                f"mask enumeration supports dims <= {MAX_ENUMERATION_DIM}, "
                f"got {args.dims}"
            ),
        )
    results = _run(
        "verification",
        run_verification,
        seed=args.seed,
        dims=args.dims,
        n_docs=args.docs,
        mc_samples=args.mc_samples,
        enumerate_check=True if args.enumerate else None,
    )
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name.ljust(width)}  {status}  {r.detail}")
    return 0 if all(r.passed for r in results) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcot",
        description=(
            "Dense cohort-of-terms document representations: train a "
            "closed-form marginalized denoising encoder, transform text, "
            "verify the closed form against explicit corruption, and "
            "compare representations with a kNN probe."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a line corpus")
    p_train.add_argument("--input", required=True, help="UTF-8 corpus, one document per line")
    p_train.add_argument("--out", required=True, help="output model file")
    p_train.add_argument("--prototypes", type=int, required=True, metavar="R",
                         help="number of prototype terms")
    p_train.add_argument("--corruption", type=float, default=0.5, metavar="P",
                         help="probability a feature survives corruption, in (0,1]")
    p_train.add_argument("--layers", type=int, default=1, metavar="L")
    p_train.add_argument("--ridge", type=float, default=None,
                         help="ridge regularizer; default: scaled automatic")
    p_train.add_argument("--min-count", type=int, default=1, dest="min_count")
    p_train.add_argument("--no-squash", action="store_true",
                         help="keep raw affine layer outputs (diagnostics)")
    p_train.add_argument("--max-dim", type=int, default=DEFAULT_DIM_CAP, dest="max_dim",
                         help="dense scatter dimension cap")
    p_train.set_defaults(func=cmd_train)

    p_tr = sub.add_parser("transform", help="encode a line corpus with a trained model")
    p_tr.add_argument("--model", required=True)
    p_tr.add_argument("--input", required=True)
    p_tr.add_argument("--out", required=True)
    p_tr.set_defaults(func=cmd_transform)

    p_ev = sub.add_parser("eval", help="compare sparse vs dense kNN accuracy")
    p_ev.add_argument("--model", required=True)
    p_ev.add_argument("--input", required=True, help="labeled corpus: label<TAB>text")
    p_ev.add_argument("--k", type=int, default=3)
    p_ev.add_argument("--seed", type=int, default=0, help="split seed")
    p_ev.add_argument("--json", default=None, help="also write a JSON report here")
    p_ev.set_defaults(func=cmd_eval)

    p_vf = sub.add_parser("verify", help="run the closed-form self-checks")
    p_vf.add_argument("--seed", type=int, default=0)
    p_vf.add_argument("--dims", type=int, default=10,
                      help="synthetic corpus dimensionality")
    p_vf.add_argument("--docs", type=int, default=20,
                      help="synthetic corpus size")
    p_vf.add_argument("--mc-samples", type=int, default=100_000, dest="mc_samples",
                      help="largest sampled-copies count in the convergence check")
    p_vf.add_argument("--enumerate", action="store_true",
                      help="force the exhaustive enumeration check")
    p_vf.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _StageFailure as exc:
        print(f"dcot {args.command}: {exc.stage}: {exc.error}", file=sys.stderr)
        return 1
    except (DcotError, ValueError) as exc:
        print(f"dcot {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
