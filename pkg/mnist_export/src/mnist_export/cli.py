"""Command line entry points: corpus generation and export."""

import argparse
import sys

from .corpus import DatasetMissingError, make_digits_corpus
from .export import DEFAULT_SEED, AccuracyError, train_and_export
from .idx import IdxFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mnist-export")
    commands = parser.add_subparsers(dest="command", required=True)

    corpus = commands.add_parser(
        "make-corpus", help="render scikit-learn's digits into the MNIST layout"
    )
    corpus.add_argument("--root", default="data", help="output directory")
    corpus.add_argument("--seed", type=int, default=0)

    export = commands.add_parser(
        "export", help="train and write the weight and feature files"
    )
    export.add_argument("--root", default="data", help="corpus directory")
    export.add_argument("--weights", default="export.weights")
    export.add_argument("--features", default="export.features")
    export.add_argument("--seed", type=int, default=DEFAULT_SEED)
    export.add_argument("--epochs", type=int, default=120)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-corpus":
            counts = make_digits_corpus(args.root, seed=args.seed)
            print(f"wrote {counts['train']} train / {counts['test']} test to {args.root}")
        else:
            bundle = train_and_export(
                args.root, args.weights, args.features,
                seed=args.seed, epochs=args.epochs,
            )
            print(f"test accuracy {bundle.accuracy:.4f}")
            print(f"wrote {args.weights}")
            print(f"wrote {args.features}")
    except (DatasetMissingError, IdxFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
